"""Episode environment: the true cart on its curved rail, observable only
through the camera pipeline.

Each step first processes the frame captured at the step boundary (showing
the state the previous step left behind), then integrates the plant for one
control period. The estimate handed back therefore always trails the true
state by one period, the same lag a frame grabber and filter impose on the
physical rig. reset() feeds the filter one frame of the resting cart so the
first decision has an estimate to work from.
"""

from __future__ import annotations

import time

import numpy as np

from .api import DT, ACTIONS, Action, DoneReason, EnvSpec, Observation, StepResult
from .dynamics import (
    CarState,
    PlantParams,
    TrackProfile,
    check_goal,
    dynamics_step,
    force_of,
)
from .errors import EpisodeFinished
from .perception import PerceptionPipeline


class MountainCarEnv:
    def __init__(
        self,
        track: TrackProfile,
        plant: PlantParams,
        pipeline: PerceptionPipeline,
        rng: np.random.Generator,
        dt: float = DT,
        capture_frames: bool = False,
        realtime: bool = False,
    ):
        self.track = track.validate()
        self.plant = plant.validate(track)
        self.pipeline = pipeline
        self.rng = rng
        self.dt = dt
        self.capture_frames = capture_frames
        self.realtime = realtime
        self.state = CarState(0.0, 0.0, 0.0)
        self._n = 0
        self._done = True
        self._wall_start = 0.0

    def spec(self) -> EnvSpec:
        return EnvSpec(
            actions=ACTIONS,
            dt=self.dt,
            x_range=(-self.track.half_width, self.track.half_width),
            v_range=(-300.0, 300.0),
            goal_x=self.track.goal_x,
            description="reach the left goal marker on the curved rail",
        )

    def reset(self) -> Observation:
        self.state = CarState(0.0, 0.0, 0.0)
        self._n = 0
        self._done = False
        self.pipeline.reset()
        obs = self.pipeline.observe(self.state, self.rng, self.capture_frames)
        self._wall_start = time.monotonic()
        return obs

    def step(self, action: Action) -> StepResult:
        if self._done:
            raise EpisodeFinished("step() after the episode ended; call reset()")
        obs = self.pipeline.observe(self.state, self.rng, self.capture_frames)
        force = force_of(action, self.plant)
        nxt = dynamics_step(self.state, force, self.plant, self.track, self.dt)
        self._n += 1
        # keep t an exact multiple of dt rather than a float running sum
        self.state = CarState(nxt.x, nxt.v, self._n * self.dt)
        reached = check_goal(self.state, self.track)
        self._done = reached
        reason = DoneReason.GOAL if reached else DoneReason.NONE
        if self.realtime:
            lag = self._n * self.dt - (time.monotonic() - self._wall_start)
            if lag > 0:
                time.sleep(lag)
        return StepResult(obs, -1.0, reached, reason)

    @property
    def steps_taken(self) -> int:
        return self._n

    @property
    def done(self) -> bool:
        return self._done
