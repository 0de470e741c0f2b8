"""Environment abstraction: actions, observations, step results, run lifecycle.

Every other module speaks in these types. The control period is fixed at
DT = 0.01 s and simulation time is always an exact multiple of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Optional

from .errors import IllegalTransition

if TYPE_CHECKING:
    from .perception import Frame

DT = 0.01


class Action(Enum):
    """The two acceleration-direction commands. There is no coast/neutral."""

    LEFT = "left"
    RIGHT = "right"


ACTIONS = (Action.LEFT, Action.RIGHT)


class DoneReason(str, Enum):
    GOAL = "goal"
    TIMEOUT = "timeout"
    NONE = "none"


@dataclass(frozen=True)
class Observation:
    """Agent-visible state estimate, in world pixels.

    frame_ref carries the raw camera frame that produced the estimate, and
    is only populated when the run config enables frame capture.
    """

    x_est: float
    v_est: float
    frame_ref: Optional["Frame"] = None

    def __post_init__(self):
        if not (math.isfinite(self.x_est) and math.isfinite(self.v_est)):
            raise ValueError("observation estimates must be finite")


@dataclass(frozen=True)
class StepResult:
    observation: Observation
    reward: float
    done: bool
    done_reason: DoneReason = DoneReason.NONE

    def __post_init__(self):
        if not self.done and self.done_reason is not DoneReason.NONE:
            raise ValueError("done_reason must be 'none' while not done")
        if self.done and self.done_reason is DoneReason.NONE:
            raise ValueError("a finished step needs a concrete done_reason")


class RunLifecycle(str, Enum):
    IDLE = "idle"
    LEARNING = "learning"
    PAUSED = "paused"
    EVALUATING = "evaluating"
    FINISHED = "finished"


# Legal transitions; FINISHED is reachable from anywhere.
_TRANSITIONS = {
    RunLifecycle.IDLE: {RunLifecycle.LEARNING},
    RunLifecycle.LEARNING: {RunLifecycle.PAUSED, RunLifecycle.EVALUATING},
    RunLifecycle.PAUSED: {RunLifecycle.LEARNING, RunLifecycle.EVALUATING},
    RunLifecycle.EVALUATING: {RunLifecycle.LEARNING, RunLifecycle.PAUSED},
    RunLifecycle.FINISHED: set(),
}


def can_transition(src: RunLifecycle, dst: RunLifecycle) -> bool:
    if dst is RunLifecycle.FINISHED:
        return True
    return dst in _TRANSITIONS[src]


def check_transition(src: RunLifecycle, dst: RunLifecycle) -> RunLifecycle:
    """Return dst if src -> dst is legal, else raise IllegalTransition."""
    if not can_transition(src, dst):
        raise IllegalTransition(f"{src.value} -> {dst.value}")
    return dst


@dataclass(frozen=True)
class EnvSpec:
    """Discovery document for agents and the harness."""

    actions: tuple = ACTIONS
    dt: float = DT
    x_range: tuple = (-120.0, 120.0)
    v_range: tuple = (-300.0, 300.0)
    goal_x: float = -80.0
    description: str = field(
        default="valley car; bang-bang acceleration; goal on the left slope"
    )
