"""Ground-truth plant: cosine valley track, damped point-mass car, goal test.

All quantities are in image-plane units: positions in px, velocities in px/s,
accelerations in px/s^2. The integrator is semi-implicit Euler (velocity
first, then position), which keeps the energy of the free swing bounded at
the 0.01 s control period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .api import Action
from .errors import ConfigError, NonFinite, OutOfTrack


@dataclass(frozen=True)
class TrackProfile:
    """Valley geometry h(x) = amplitude * (1 - cos(pi * x / half_width))."""

    half_width: float = 120.0
    amplitude: float = 40.0
    goal_x: float = -80.0

    def validate(self) -> "TrackProfile":
        if self.half_width <= 0 or self.amplitude <= 0:
            raise ConfigError("track dimensions must be positive")
        if not (-self.half_width < self.goal_x < 0):
            raise ConfigError("goal_x must lie on the left slope, inside the track")
        return self


@dataclass(frozen=True)
class CarState:
    x: float
    v: float
    t: float


@dataclass(frozen=True)
class PlantParams:
    g_eff: float = 400.0     # gravity scale, px/s^2
    a_max: float = 200.0     # commanded acceleration magnitude, px/s^2
    k_f: float = 0.15        # viscous friction coefficient, 1/s
    polarity: float = -1.0   # action label -> force direction sign

    def validate(self, track: TrackProfile) -> "PlantParams":
        if self.a_max <= 0 or self.g_eff <= 0:
            raise ConfigError("a_max and g_eff must be positive")
        if self.k_f < 0:
            raise ConfigError("friction coefficient must be non-negative")
        if self.polarity not in (-1.0, 1.0):
            raise ConfigError("polarity must be -1 or +1")
        steepest = self.g_eff * track.amplitude * math.pi / track.half_width
        if not self.a_max < steepest:
            raise ConfigError(
                "a_max must be below the steepest gravity pull "
                f"({self.a_max} >= {steepest:.1f}); the climb must need momentum"
            )
        return self


def height(track: TrackProfile, x: float) -> float:
    return track.amplitude * (1.0 - math.cos(math.pi * x / track.half_width))


def slope(track: TrackProfile, x: float) -> float:
    """h'(x). Raises OutOfTrack beyond the rail ends."""
    if abs(x) > track.half_width:
        raise OutOfTrack(f"x={x} outside [-{track.half_width}, {track.half_width}]")
    return (
        track.amplitude
        * (math.pi / track.half_width)
        * math.sin(math.pi * x / track.half_width)
    )


def force_of(action: Action, params: PlantParams) -> float:
    """Commanded acceleration: always full magnitude, only the sign varies."""
    if action is Action.RIGHT:
        return params.polarity * params.a_max
    return -params.polarity * params.a_max


def dynamics_step(
    state: CarState,
    force: float,
    params: PlantParams,
    track: TrackProfile,
    dt: float,
) -> CarState:
    """One semi-implicit Euler step under a constant commanded force.

    The track ends are inelastic stops: position clamps to the rail and any
    outward velocity is zeroed.
    """
    v = state.v + dt * (
        force - params.g_eff * slope(track, state.x) - params.k_f * state.v
    )
    x = state.x + dt * v
    if not (math.isfinite(x) and math.isfinite(v)):
        raise NonFinite(f"plant state diverged: x={x}, v={v}")
    limit = track.half_width
    if x > limit:
        x = limit
        if v > 0:
            v = 0.0
    elif x < -limit:
        x = -limit
        if v < 0:
            v = 0.0
    return CarState(x=x, v=v, t=state.t + dt)


def check_goal(state: CarState, track: TrackProfile) -> bool:
    return state.x <= track.goal_x


def mechanical_energy(state: CarState, params: PlantParams, track: TrackProfile) -> float:
    """Specific energy v^2/2 + g_eff * h(x), datum at the valley bottom."""
    return 0.5 * state.v * state.v + params.g_eff * height(track, state.x)
