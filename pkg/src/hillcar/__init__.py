"""Software twin of a vision-sensed mountain-car rig.

A gym-style environment whose plant is a damped cart on a curved rail,
sensed only through a synthetic HSV camera, a threshold/moments centroid
extractor, and a constant-velocity Kalman filter. Ships with a
hand-engineered swing-pumping controller, a tile-coded Q-learner, an
episodic training harness with on-disk persistence, and an HTTP monitor
for live control and telemetry.
"""

from .api import (
    ACTIONS,
    DT,
    Action,
    DoneReason,
    EnvSpec,
    Observation,
    RunLifecycle,
    StepResult,
)
from .agents import (
    QLearningAgent,
    QLearningParams,
    QWeights,
    ReferenceAgent,
    TileCoder,
    load_checkpoint,
    q_update,
    q_value,
    reference_policy,
    save_checkpoint,
    select_action,
)
from .config import RunConfig, TileParams, load_config, serialize_config
from .dynamics import (
    CarState,
    PlantParams,
    TrackProfile,
    check_goal,
    dynamics_step,
    force_of,
    height,
    mechanical_energy,
    slope,
)
from .env import MountainCarEnv
from .errors import (
    ConfigError,
    CovarianceCollapse,
    EpisodeFinished,
    HillcarError,
    IllegalTransition,
    IndexOutOfRange,
    NonFinite,
    OutOfTrack,
    OutputUnwritable,
    RigBusy,
    UnknownRun,
)
from .harness import (
    EpisodeRecord,
    RngStreams,
    TelemetryHub,
    TelemetrySample,
    TrainingRun,
    build_agent,
    build_coder,
    build_env,
    evaluate_checkpoint,
    run_episode,
    run_training,
)
from .perception import (
    CameraConfig,
    Frame,
    HsvThresholds,
    KalmanEstimate,
    KalmanParams,
    PerceptionPipeline,
    PixelMask,
    centroid_from_moments,
    hsv_filter,
    image_to_world,
    kalman_predict,
    kalman_update,
    render_frame,
    world_to_image,
    write_ppm,
)
from .service import MonitorService

__version__ = "1.0.0"
