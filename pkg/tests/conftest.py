import numpy as np
import pytest

from hillcar.config import RunConfig
from hillcar.dynamics import PlantParams, TrackProfile
from hillcar.perception import CameraConfig, HsvThresholds, KalmanParams


@pytest.fixture
def track():
    return TrackProfile().validate()


@pytest.fixture
def plant(track):
    return PlantParams().validate(track)


@pytest.fixture
def cam(track, thresholds):
    return CameraConfig().validate(track, thresholds)


@pytest.fixture
def thresholds():
    return HsvThresholds().validate()


@pytest.fixture
def kalman():
    return KalmanParams().validate()


@pytest.fixture
def config():
    return RunConfig().validate()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
