"""Controllers: the hand-built pumping policy and tile-coded Q-learning.

The hand policy kicks the car randomly while it is slow, then pushes along
the velocity once it is moving, which pumps the swing until the left-side
goal is reachable. The learning agent approximates action values linearly
over tile-coded (position, velocity) features and improves them with
one-step Q-learning.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .api import ACTIONS, Action, Observation
from .errors import ConfigError, IndexOutOfRange, NonFinite


def reference_policy(
    obs: Observation, v_thresh: float, rng: np.random.Generator
) -> Action:
    """Slow: random kick. Otherwise push along the motion to grow the swing."""
    v = obs.v_est
    if abs(v) < v_thresh:
        return Action.LEFT if rng.random() < 0.5 else Action.RIGHT
    if v > 0:
        return Action.LEFT
    return Action.RIGHT


class TileCoder:
    """Several offset grids over clamped (x, v); one active tile per grid.

    Grid k is displaced by k/n_tilings of a tile width along x and by twice
    that along v, so the tilings break ties differently in each dimension.
    """

    def __init__(
        self,
        x_lo: float = -120.0,
        x_hi: float = 120.0,
        v_lo: float = -300.0,
        v_hi: float = 300.0,
        n_tilings: int = 8,
        tiles_per_dim: int = 8,
    ):
        if x_hi <= x_lo or v_hi <= v_lo:
            raise ConfigError("tile bounds must be non-degenerate")
        if n_tilings < 1 or tiles_per_dim < 1:
            raise ConfigError("need at least one tiling and one tile per dim")
        self.x_lo, self.x_hi = x_lo, x_hi
        self.v_lo, self.v_hi = v_lo, v_hi
        self.n_tilings = n_tilings
        self.tiles_per_dim = tiles_per_dim
        self._wx = (x_hi - x_lo) / tiles_per_dim
        self._wv = (v_hi - v_lo) / tiles_per_dim
        ks = np.arange(n_tilings)
        self._off_x = (ks / n_tilings) * self._wx
        self._off_v = (2.0 * ks / n_tilings) * self._wv
        self._base = ks * tiles_per_dim * tiles_per_dim

    @property
    def n_features(self) -> int:
        return self.n_tilings * self.tiles_per_dim * self.tiles_per_dim

    def features(self, x: float, v: float) -> np.ndarray:
        """Active feature indices, one per tiling; inputs clamp to bounds."""
        x = min(max(x, self.x_lo), self.x_hi)
        v = min(max(v, self.v_lo), self.v_hi)
        t = self.tiles_per_dim
        cx = np.clip(
            np.floor((x - self.x_lo - self._off_x) / self._wx).astype(np.int64), 0, t - 1
        )
        cv = np.clip(
            np.floor((v - self.v_lo - self._off_v) / self._wv).astype(np.int64), 0, t - 1
        )
        return self._base + cx * t + cv


class QWeights:
    """Flat linear weights; Q(s, a) sums the active features' column a."""

    def __init__(self, table: np.ndarray):
        self.table = table

    @classmethod
    def zeros(cls, coder: TileCoder, n_actions: int = len(ACTIONS)) -> "QWeights":
        return cls(np.zeros((coder.n_features, n_actions)))

    def copy(self) -> "QWeights":
        return QWeights(self.table.copy())


@dataclass(frozen=True)
class QLearningParams:
    alpha: float = 0.5 / 8   # step size per tiling
    gamma: float = 1.0
    epsilon: float = 0.1

    def validate(self) -> "QLearningParams":
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError("epsilon must be in [0, 1]")
        if self.alpha <= 0.0:
            raise ConfigError("alpha must be positive")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError("gamma must be in (0, 1]")
        return self


def _check_features(qw: QWeights, features: np.ndarray) -> None:
    if len(features) and (features.min() < 0 or features.max() >= len(qw.table)):
        raise IndexOutOfRange(
            f"feature indices outside [0, {len(qw.table)}); coder/table mismatch"
        )


def q_value(qw: QWeights, features: np.ndarray, action: Action) -> float:
    _check_features(qw, features)
    return float(qw.table[features, ACTIONS.index(action)].sum())


def select_action(
    qw: QWeights, features: np.ndarray, epsilon: float, rng: np.random.Generator
) -> Action:
    """Epsilon-greedy over the action set; exact ties pick LEFT."""
    if epsilon > 0.0 and rng.random() < epsilon:
        return ACTIONS[rng.integers(len(ACTIONS))]
    _check_features(qw, features)
    q = qw.table[features].sum(axis=0)
    return Action.RIGHT if q[1] > q[0] else Action.LEFT


def q_update(
    qw: QWeights,
    features: np.ndarray,
    action: Action,
    reward: float,
    next_features: np.ndarray,
    done: bool,
    params: QLearningParams,
) -> QWeights:
    """One-step TD update toward reward + gamma * max_a' Q(s', a').

    Mutates and returns qw; only the taken action's active weights move.
    """
    _check_features(qw, features)
    a = ACTIONS.index(action)
    current = qw.table[features, a].sum()
    if done:
        target = reward
    else:
        _check_features(qw, next_features)
        target = reward + params.gamma * qw.table[next_features].sum(axis=0).max()
    delta = target - current
    if not math.isfinite(delta):
        raise NonFinite(f"TD error diverged: {delta}")
    qw.table[features, a] += params.alpha * delta
    return qw


class ReferenceAgent:
    """Wraps the hand policy in the common agent surface; never learns."""

    def __init__(self, v_thresh: float, rng: np.random.Generator):
        self.v_thresh = v_thresh
        self.rng = rng

    def act(self, obs: Observation) -> Action:
        return reference_policy(obs, self.v_thresh, self.rng)

    def learn(self, obs, action, reward, next_obs, done) -> None:
        pass


class QLearningAgent:
    def __init__(
        self,
        coder: TileCoder,
        params: QLearningParams,
        rng: np.random.Generator,
        weights: QWeights | None = None,
    ):
        self.coder = coder
        self.params = params.validate()
        self.rng = rng
        self.weights = weights if weights is not None else QWeights.zeros(coder)
        if len(self.weights.table) != coder.n_features:
            raise ConfigError("weight table does not match the tile coder")

    def act(self, obs: Observation) -> Action:
        f = self.coder.features(obs.x_est, obs.v_est)
        return select_action(self.weights, f, self.params.epsilon, self.rng)

    def learn(self, obs, action, reward, next_obs, done) -> None:
        f = self.coder.features(obs.x_est, obs.v_est)
        nf = self.coder.features(next_obs.x_est, next_obs.v_est)
        q_update(self.weights, f, action, reward, nf, done, self.params)

    def greedy_clone(self, rng: np.random.Generator) -> "QLearningAgent":
        """Snapshot for evaluation: copied weights, epsilon forced to zero."""
        params = QLearningParams(self.params.alpha, self.params.gamma, 0.0)
        return QLearningAgent(self.coder, params, rng, self.weights.copy())


CHECKPOINT_MAGIC = b"OPEBQW01"
_HEADER = struct.Struct("<8sHHH2x")


def save_checkpoint(path, coder: TileCoder, qw: QWeights) -> None:
    """Header: magic, tiling count, tiles per dim, action count; then the
    flat weight table as little-endian float64, feature-major."""
    n_actions = qw.table.shape[1]
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CHECKPOINT_MAGIC, coder.n_tilings, coder.tiles_per_dim, n_actions))
        fh.write(np.ascontiguousarray(qw.table, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple:
    """Returns (n_tilings, tiles_per_dim, n_actions, weight table)."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ConfigError("checkpoint truncated")
        magic, n_t, tiles, n_actions = _HEADER.unpack(head)
        if magic != CHECKPOINT_MAGIC:
            raise ConfigError("not a weight checkpoint")
        flat = np.frombuffer(fh.read(), dtype="<f8")
    n_features = n_t * tiles * tiles
    if len(flat) != n_features * n_actions:
        raise ConfigError("checkpoint weight count does not match its header")
    return n_t, tiles, n_actions, flat.reshape(n_features, n_actions).copy()
