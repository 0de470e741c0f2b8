"""Episode and training loops, telemetry fan-out, and run persistence.

A TrainingRun owns one simulated rig session: it steps episodes on a
background thread, appends telemetry and curve rows to the output
directory, and honors pause/resume/evaluate/stop commands at step
boundaries. Evaluation episodes run on a twin environment with their own
random streams, so a frozen training episode resumes bit-exactly.
"""

from __future__ import annotations

import collections
import json
import queue
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .api import DoneReason, RunLifecycle, check_transition
from .agents import (
    QLearningAgent,
    QLearningParams,
    QWeights,
    ReferenceAgent,
    TileCoder,
    load_checkpoint,
    save_checkpoint,
)
from .config import RunConfig
from .env import MountainCarEnv
from .errors import ConfigError, IllegalTransition, OutputUnwritable
from .perception import PerceptionPipeline


@dataclass
class RngStreams:
    """One master seed split into independent streams per consumer.

    The plant stream is reserved for future process noise; keeping it in
    the split now means adding that noise later will not reshuffle the
    perception/agent streams of existing seeds.
    """

    plant: np.random.Generator
    perception: np.random.Generator
    agent: np.random.Generator
    eval_root: np.random.SeedSequence

    @classmethod
    def from_seed(cls, seed: int) -> "RngStreams":
        plant, percep, agent, ev = np.random.SeedSequence(seed).spawn(4)
        return cls(
            np.random.default_rng(plant),
            np.random.default_rng(percep),
            np.random.default_rng(agent),
            ev,
        )


def build_env(config: RunConfig, rng: np.random.Generator, capture_frames: bool = False) -> MountainCarEnv:
    pipeline = PerceptionPipeline(
        config.camera, config.thresholds, config.kalman, config.track
    )
    return MountainCarEnv(
        config.track, config.plant, pipeline, rng,
        capture_frames=capture_frames, realtime=config.realtime,
    )


def build_coder(config: RunConfig) -> TileCoder:
    return TileCoder(
        -config.track.half_width, config.track.half_width,
        -config.tiles.v_max, config.tiles.v_max,
        config.tiles.n_tilings, config.tiles.tiles_per_dim,
    )


def build_agent(config: RunConfig, rng: np.random.Generator, weights: QWeights | None = None):
    if config.agent == "reference":
        return ReferenceAgent(config.v_thresh, rng)
    return QLearningAgent(build_coder(config), config.qlearn, rng, weights)


@dataclass
class TelemetrySample:
    t: float
    episode: int
    step: int
    x_true: float
    x_est: float
    v_est: float
    action: str
    reward: float
    ret: float
    state: str

    def to_json(self) -> str:
        # field order is part of the wire format; keep it fixed
        return json.dumps(
            {
                "t": round(self.t, 9),
                "episode": self.episode,
                "step": self.step,
                "x_true": self.x_true,
                "x_est": self.x_est,
                "v_est": self.v_est,
                "action": self.action,
                "reward": self.reward,
                "ret": self.ret,
                "state": self.state,
            },
            separators=(",", ":"),
        )


@dataclass
class EpisodeRecord:
    episode: int
    steps: int
    ret: float
    reason: DoneReason
    wall_time: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "episode": self.episode,
                "steps": self.steps,
                "return": self.ret,
                "reason": self.reason.value,
                "wall_time": round(self.wall_time, 6),
            },
            separators=(",", ":"),
        )


CURVE_HEADER = "episode,steps,return,reason"


def curve_row(rec: EpisodeRecord) -> str:
    ret = int(rec.ret) if float(rec.ret).is_integer() else repr(rec.ret)
    return f"{rec.episode},{rec.steps},{ret},{rec.reason.value}"


def render_curve(records) -> str:
    lines = [CURVE_HEADER]
    lines.extend(curve_row(r) for r in records)
    return "\n".join(lines) + "\n"


class _Subscription:
    def __init__(self, maxlen: int):
        self.buf = collections.deque(maxlen=maxlen)
        self.cond = threading.Condition()
        self.closed = False

    def get(self, timeout: float = 1.0):
        """Next line, or None if the hub closed and the buffer drained."""
        with self.cond:
            while not self.buf and not self.closed:
                if not self.cond.wait(timeout):
                    return ""
            if self.buf:
                return self.buf.popleft()
            return None


class TelemetryHub:
    """Broadcast channel: slow consumers lose oldest samples, never block
    the simulation loop."""

    def __init__(self, maxlen: int = 4096):
        self._subs = []
        self._lock = threading.Lock()
        self._maxlen = maxlen

    def subscribe(self) -> _Subscription:
        sub = _Subscription(self._maxlen)
        with self._lock:
            self._subs.append(sub)
        return sub

    def unsubscribe(self, sub: _Subscription) -> None:
        with self._lock:
            if sub in self._subs:
                self._subs.remove(sub)

    def publish(self, line: str) -> None:
        with self._lock:
            subs = list(self._subs)
        for sub in subs:
            with sub.cond:
                sub.buf.append(line)
                sub.cond.notify()

    def close(self) -> None:
        with self._lock:
            subs = list(self._subs)
        for sub in subs:
            with sub.cond:
                sub.closed = True
                sub.cond.notify_all()


class _StopRun(Exception):
    """Internal: the stop command unwinds the training loop."""


def run_episode(
    env: MountainCarEnv,
    agent,
    step_cap: int,
    *,
    episode: int = 1,
    learn: bool = True,
    emit=None,
    control=None,
    state_label: str = RunLifecycle.LEARNING.value,
) -> EpisodeRecord:
    """One episode: reset, act/step/learn until goal or the step cap.

    The environment only ever reports the goal; hitting the cap here is
    recorded as a timeout. `control` runs at every step boundary and may
    pause the wall clock or abort; `emit` receives one TelemetrySample per
    step.
    """
    if step_cap < 1:
        raise ConfigError("step_cap must be >= 1")
    obs = env.reset()
    ret = 0.0
    t0 = time.monotonic()
    reason = DoneReason.TIMEOUT
    for step in range(1, step_cap + 1):
        if control is not None:
            control()
        action = agent.act(obs)
        result = env.step(action)
        if learn:
            agent.learn(obs, action, result.reward, result.observation, result.done)
        ret += result.reward
        if emit is not None:
            emit(
                TelemetrySample(
                    t=env.state.t,
                    episode=episode,
                    step=step,
                    x_true=env.state.x,
                    x_est=result.observation.x_est,
                    v_est=result.observation.v_est,
                    action=action.value,
                    reward=result.reward,
                    ret=ret,
                    state=state_label,
                )
            )
        obs = result.observation
        if result.done:
            reason = DoneReason.GOAL
            break
    return EpisodeRecord(episode, env.steps_taken, ret, reason, time.monotonic() - t0)


class TrainingRun:
    """A full run: config in, persisted telemetry/curve/weights out, with
    live command control between steps."""

    def __init__(self, config: RunConfig, run_id: str = "run", out_dir=None):
        self.config = config.validate()
        self.run_id = run_id
        self.streams = RngStreams.from_seed(config.seed)
        self.env = build_env(config, self.streams.perception)
        self.agent = build_agent(config, self.streams.agent)
        self.hub = TelemetryHub()
        self.records: list[EpisodeRecord] = []
        self.eval_records: list[EpisodeRecord] = []
        self.started_at = time.time()
        self._commands: queue.Queue = queue.Queue()
        self._accepting = False
        self._accept_lock = threading.Lock()
        self._lifecycle = RunLifecycle.IDLE
        self._lifecycle_lock = threading.Lock()
        self._thread: threading.Thread | None = None
        self._episode = 0
        out = Path(out_dir) if out_dir is not None else (
            Path(config.out) if config.out else None
        )
        self.out_dir = out
        self._telemetry_fh = None
        self._curve_fh = None

    # -- lifecycle -----------------------------------------------------

    @property
    def lifecycle(self) -> RunLifecycle:
        with self._lifecycle_lock:
            return self._lifecycle

    def _set_lifecycle(self, state: RunLifecycle) -> None:
        with self._lifecycle_lock:
            check_transition(self._lifecycle, state)
            self._lifecycle = state

    def send(self, command: str, timeout: float = 300.0):
        """Enqueue pause/resume/evaluate/stop; blocks until it is applied
        at a step boundary and returns the command's result."""
        current = self.lifecycle
        target = {
            "pause": RunLifecycle.PAUSED,
            "resume": RunLifecycle.LEARNING,
            "evaluate": RunLifecycle.EVALUATING,
            "stop": RunLifecycle.FINISHED,
        }.get(command)
        if target is None:
            raise ConfigError(f"unknown command {command!r}")
        check_transition(current, target)
        reply: queue.Queue = queue.Queue()
        with self._accept_lock:
            # the flag drops before the final drain, so a command either
            # lands in time to be answered or is refused here; never lost
            if not self._accepting:
                raise IllegalTransition(f"run is {self.lifecycle.value}, not accepting commands")
            self._commands.put((command, reply))
        result = reply.get(timeout=timeout)
        if isinstance(result, Exception):
            raise result
        return result

    # -- the simulation thread -----------------------------------------

    def start(self) -> None:
        if self._thread is not None:
            raise IllegalTransition("run already started")
        self._set_lifecycle(RunLifecycle.LEARNING)
        self._accepting = True
        self._thread = threading.Thread(target=self._run, daemon=True, name=f"sim-{self.run_id}")
        self._thread.start()

    def run_blocking(self) -> list[EpisodeRecord]:
        self._set_lifecycle(RunLifecycle.LEARNING)
        self._accepting = True
        self._run()
        return self.records

    def join(self, timeout: float | None = None) -> None:
        if self._thread is not None:
            self._thread.join(timeout)

    def _open_outputs(self) -> None:
        if self.out_dir is None:
            return
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            (self.out_dir / "evals").mkdir(exist_ok=True)
            from .config import serialize_config

            (self.out_dir / "config.snapshot").write_text(
                serialize_config(self.config), encoding="utf-8"
            )
            self._telemetry_fh = open(self.out_dir / "telemetry.jsonl", "w", encoding="utf-8")
            self._curve_fh = open(self.out_dir / "curve.csv", "w", encoding="utf-8")
            self._curve_fh.write(CURVE_HEADER + "\n")
            self._curve_fh.flush()
        except OSError as exc:
            raise OutputUnwritable(f"cannot prepare {self.out_dir}: {exc}") from exc

    def _close_outputs(self) -> None:
        for fh in (self._telemetry_fh, self._curve_fh):
            if fh is not None:
                fh.close()
        self._telemetry_fh = None
        self._curve_fh = None

    def _emit(self, sample: TelemetrySample) -> None:
        line = sample.to_json()
        if self._telemetry_fh is not None:
            try:
                self._telemetry_fh.write(line + "\n")
            except OSError as exc:
                raise OutputUnwritable(str(exc)) from exc
        self.hub.publish(line)

    def _run(self) -> None:
        try:
            self._open_outputs()
            for ep in range(1, self.config.episodes + 1):
                self._episode = ep
                self._apply_commands(block=False)
                rec = run_episode(
                    self.env,
                    self.agent,
                    self.config.step_cap,
                    episode=ep,
                    learn=True,
                    emit=self._emit,
                    control=self._control,
                    state_label=RunLifecycle.LEARNING.value,
                )
                if self._curve_fh is not None:
                    self._curve_fh.write(curve_row(rec) + "\n")
                    self._curve_fh.flush()
                if self._telemetry_fh is not None:
                    self._telemetry_fh.flush()
                self.records.append(rec)
        except _StopRun:
            pass
        finally:
            self._save_weights()
            self._close_outputs()
            with self._lifecycle_lock:
                self._lifecycle = RunLifecycle.FINISHED
            self.hub.close()
            self._drain_commands()

    def _drain_commands(self) -> None:
        with self._accept_lock:
            self._accepting = False
        while True:
            try:
                _, reply = self._commands.get_nowait()
            except queue.Empty:
                return
            reply.put(IllegalTransition("run already finished"))

    def _save_weights(self) -> None:
        if self.out_dir is None or not isinstance(self.agent, QLearningAgent):
            return
        try:
            save_checkpoint(self.out_dir / "qweights.bin", self.agent.coder, self.agent.weights)
        except OSError as exc:
            raise OutputUnwritable(str(exc)) from exc

    # -- command handling at step boundaries ---------------------------

    def _control(self) -> None:
        self._apply_commands(block=False)

    def _apply_commands(self, block: bool) -> None:
        while True:
            try:
                command, reply = self._commands.get(block=block, timeout=0.2 if block else None)
            except queue.Empty:
                if block:
                    continue
                return
            if command == "pause":
                # tolerate a raced double-pause instead of killing the run
                if self.lifecycle is not RunLifecycle.PAUSED:
                    self._set_lifecycle(RunLifecycle.PAUSED)
                reply.put(self.lifecycle.value)
                self._apply_commands(block=True)  # hold here until resume/stop
                return
            if command == "resume":
                if self.lifecycle is not RunLifecycle.LEARNING:
                    self._set_lifecycle(RunLifecycle.LEARNING)
                reply.put(self.lifecycle.value)
                return
            if command == "evaluate":
                try:
                    reply.put(self._evaluate())
                except Exception as exc:
                    reply.put(exc)
                    raise
                if not block:
                    return
                continue
            if command == "stop":
                # flip the state before acking so a caller that saw the ack
                # also sees the rig as free
                with self._lifecycle_lock:
                    self._lifecycle = RunLifecycle.FINISHED
                reply.put(RunLifecycle.FINISHED.value)
                raise _StopRun()
            reply.put(f"unknown command {command!r}")

    def _evaluate(self) -> EpisodeRecord:
        """One greedy episode on a twin rig; training state untouched."""
        prior = self.lifecycle
        self._set_lifecycle(RunLifecycle.EVALUATING)
        try:
            env_seed, agent_seed = self.streams.eval_root.spawn(2)
            env = build_env(self.config, np.random.default_rng(env_seed))
            if isinstance(self.agent, QLearningAgent):
                agent = self.agent.greedy_clone(np.random.default_rng(agent_seed))
            else:
                agent = ReferenceAgent(self.config.v_thresh, np.random.default_rng(agent_seed))
            index = len(self.eval_records)
            lines: list[str] = []

            def emit(sample: TelemetrySample) -> None:
                line = sample.to_json()
                lines.append(line)
                self.hub.publish(line)

            rec = run_episode(
                env,
                agent,
                self.config.step_cap,
                episode=self._episode,
                learn=False,
                emit=emit,
                state_label=RunLifecycle.EVALUATING.value,
            )
            self.eval_records.append(rec)
            if self.out_dir is not None:
                try:
                    path = self.out_dir / "evals" / f"eval_{index:03d}.jsonl"
                    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
                except OSError as exc:
                    raise OutputUnwritable(str(exc)) from exc
            return rec
        finally:
            with self._lifecycle_lock:
                self._lifecycle = prior

    # -- read side for the service -------------------------------------

    def curve_text(self) -> str:
        return render_curve(self.records)

    def eval_trace(self, index: int) -> str | None:
        if self.out_dir is None:
            return None
        path = self.out_dir / "evals" / f"eval_{index:03d}.jsonl"
        if not path.exists():
            return None
        return path.read_text(encoding="utf-8")

    @property
    def telemetry_path(self):
        return None if self.out_dir is None else self.out_dir / "telemetry.jsonl"


def run_training(config: RunConfig, run_id: str = "run") -> TrainingRun:
    """Headless convenience: run every episode to completion, return the run."""
    run = TrainingRun(config, run_id)
    run.run_blocking()
    return run


def evaluate_checkpoint(config: RunConfig, checkpoint_path) -> EpisodeRecord:
    """Load saved weights and run a single greedy episode."""
    n_t, tiles, n_actions, table = load_checkpoint(checkpoint_path)
    coder = build_coder(config)
    if (n_t, tiles) != (coder.n_tilings, coder.tiles_per_dim):
        raise ConfigError(
            f"checkpoint layout {n_t}x{tiles} does not match config "
            f"{coder.n_tilings}x{coder.tiles_per_dim}"
        )
    streams = RngStreams.from_seed(config.seed)
    env = build_env(config, streams.perception)
    params = QLearningParams(config.qlearn.alpha, config.qlearn.gamma, 0.0)
    agent = QLearningAgent(coder, params, streams.agent, QWeights(table))
    return run_episode(env, agent, config.step_cap, learn=False)
