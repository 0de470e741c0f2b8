"""Episode loop, telemetry plumbing, run control and persistence tests."""

import json
import time

import numpy as np
import pytest

from hillcar.api import DoneReason, RunLifecycle
from hillcar.config import RunConfig, load_config
from hillcar.errors import ConfigError, IllegalTransition, OutputUnwritable
from hillcar.harness import (
    CURVE_HEADER,
    EpisodeRecord,
    RngStreams,
    TelemetryHub,
    TelemetrySample,
    TrainingRun,
    build_agent,
    build_env,
    curve_row,
    evaluate_checkpoint,
    render_curve,
    run_episode,
    run_training,
)


def ref_config(**kw):
    base = dict(agent="reference", episodes=1, step_cap=3000, seed=3)
    base.update(kw)
    return RunConfig(**base)


def q_config(**kw):
    base = dict(agent="qlearning", episodes=2, step_cap=600, seed=1)
    base.update(kw)
    return RunConfig(**base)


# -- rng streams -------------------------------------------------------


def test_rng_streams_reproducible_and_distinct():
    a = RngStreams.from_seed(5)
    b = RngStreams.from_seed(5)
    assert a.perception.random() == b.perception.random()
    assert a.agent.random() == b.agent.random()
    c = RngStreams.from_seed(6)
    assert RngStreams.from_seed(5).perception.random() != c.perception.random()
    # same master seed, different purposes: streams must not collide
    d = RngStreams.from_seed(5)
    assert d.perception.random() != d.agent.random()


# -- run_episode -------------------------------------------------------


def test_episode_reaches_goal_and_return_identity():
    cfg = ref_config()
    streams = RngStreams.from_seed(cfg.seed)
    env = build_env(cfg, streams.perception)
    agent = build_agent(cfg, streams.agent)
    rec = run_episode(env, agent, cfg.step_cap)
    assert rec.reason is DoneReason.GOAL
    assert rec.ret == -rec.steps
    assert 0 < rec.steps <= cfg.step_cap


def test_episode_timeout_at_cap():
    cfg = ref_config(step_cap=50)
    streams = RngStreams.from_seed(cfg.seed)
    env = build_env(cfg, streams.perception)
    agent = build_agent(cfg, streams.agent)
    rec = run_episode(env, agent, 50)
    assert rec.reason is DoneReason.TIMEOUT
    assert rec.steps == 50
    assert rec.ret == -50.0


def test_episode_telemetry_is_complete_and_ordered():
    cfg = ref_config()
    streams = RngStreams.from_seed(cfg.seed)
    env = build_env(cfg, streams.perception)
    agent = build_agent(cfg, streams.agent)
    samples = []
    rec = run_episode(env, agent, cfg.step_cap, episode=4, emit=samples.append)
    assert len(samples) == rec.steps
    for i, s in enumerate(samples, 1):
        assert s.step == i
        assert s.episode == 4
        assert s.t == pytest.approx(i * 0.01, abs=1e-12)
        assert s.reward == -1.0
        assert s.ret == -float(i)
        assert s.action in ("left", "right")
        assert s.state == "learning"


def test_control_hook_runs_every_step():
    cfg = ref_config(step_cap=25)
    streams = RngStreams.from_seed(cfg.seed)
    env = build_env(cfg, streams.perception)
    agent = build_agent(cfg, streams.agent)
    calls = []
    run_episode(env, agent, 25, control=lambda: calls.append(env.steps_taken))
    assert calls == list(range(25))  # before each of the 25 steps


# -- wire formats ------------------------------------------------------


def test_telemetry_json_wire_format():
    s = TelemetrySample(
        t=0.030000000000000002, episode=1, step=3, x_true=-1.5, x_est=-1.25,
        v_est=-30.0, action="right", reward=-1.0, ret=-3.0, state="learning",
    )
    assert s.to_json() == (
        '{"t":0.03,"episode":1,"step":3,"x_true":-1.5,"x_est":-1.25,'
        '"v_est":-30.0,"action":"right","reward":-1.0,"ret":-3.0,'
        '"state":"learning"}'
    )


def test_episode_record_json_and_curve_row():
    rec = EpisodeRecord(2, 955, -955.0, DoneReason.GOAL, 0.1234567)
    assert json.loads(rec.to_json()) == {
        "episode": 2, "steps": 955, "return": -955.0,
        "reason": "goal", "wall_time": 0.123457,
    }
    assert curve_row(rec) == "2,955,-955,goal"
    text = render_curve([rec])
    assert text == CURVE_HEADER + "\n2,955,-955,goal\n"


# -- telemetry hub -----------------------------------------------------


def test_hub_delivers_in_order():
    hub = TelemetryHub()
    sub = hub.subscribe()
    for i in range(5):
        hub.publish(f"line{i}")
    assert [sub.get() for _ in range(5)] == [f"line{i}" for i in range(5)]


def test_hub_drops_oldest_for_slow_consumers():
    hub = TelemetryHub(maxlen=3)
    sub = hub.subscribe()
    for i in range(10):
        hub.publish(str(i))
    assert [sub.get() for _ in range(3)] == ["7", "8", "9"]


def test_hub_close_and_timeout_semantics():
    hub = TelemetryHub()
    sub = hub.subscribe()
    assert sub.get(timeout=0.05) == ""  # timed out, stream still open
    hub.publish("a")
    hub.close()
    assert sub.get() == "a"  # buffered line survives the close
    assert sub.get() is None  # then end-of-stream


def test_hub_unsubscribe_stops_delivery():
    hub = TelemetryHub()
    sub = hub.subscribe()
    hub.unsubscribe(sub)
    hub.publish("x")
    assert sub.get(timeout=0.05) == ""


# -- training runs -----------------------------------------------------


def test_run_training_persists_everything(tmp_path):
    cfg = q_config(out=str(tmp_path / "run"))
    run = run_training(cfg)
    out = tmp_path / "run"
    assert run.lifecycle is RunLifecycle.FINISHED
    assert len(run.records) == cfg.episodes

    assert load_config(out / "config.snapshot") == cfg
    curve = (out / "curve.csv").read_text()
    assert curve == render_curve(run.records)

    lines = (out / "telemetry.jsonl").read_text().splitlines()
    assert len(lines) == sum(r.steps for r in run.records)
    first = json.loads(lines[0])
    assert first["episode"] == 1 and first["step"] == 1
    assert (out / "qweights.bin").exists()


def test_identical_seeds_reproduce_telemetry_bytes(tmp_path):
    def one(sub):
        cfg = q_config(out=str(tmp_path / sub))
        run_training(cfg)
        return (tmp_path / sub / "telemetry.jsonl").read_bytes()

    assert one("a") == one("b")


def test_different_seed_changes_telemetry(tmp_path):
    a = run_training(q_config(out=str(tmp_path / "a")))
    b = run_training(q_config(out=str(tmp_path / "b"), seed=2))
    ta = (tmp_path / "a" / "telemetry.jsonl").read_bytes()
    tb = (tmp_path / "b" / "telemetry.jsonl").read_bytes()
    assert ta != tb


def test_unwritable_output_refused(tmp_path):
    blocker = tmp_path / "not_a_dir"
    blocker.write_text("")
    cfg = ref_config(episodes=1, step_cap=10, out=str(blocker / "run"))
    with pytest.raises(OutputUnwritable):
        run_training(cfg)


def test_live_pause_resume_evaluate_stop(tmp_path):
    cfg = ref_config(episodes=50, out=str(tmp_path / "live"))
    run = TrainingRun(cfg, run_id="live")
    sub = run.hub.subscribe()
    run.start()
    assert sub.get(timeout=5.0) not in ("", None)  # telemetry is flowing

    assert run.send("pause") == "paused"
    assert run.lifecycle is RunLifecycle.PAUSED
    while sub.get(timeout=0.2) not in ("", None):
        pass  # drain what was in flight before the pause landed
    assert sub.get(timeout=0.2) == ""  # paused: nothing new arrives

    rec = run.send("evaluate")
    assert isinstance(rec, EpisodeRecord)
    assert run.lifecycle is RunLifecycle.PAUSED  # evaluation restored the hold
    assert run.eval_trace(0) is not None
    ev = json.loads(run.eval_trace(0).splitlines()[0])
    assert ev["state"] == "evaluating"

    assert run.send("resume") == "learning"
    assert sub.get(timeout=5.0) not in ("", None)

    assert run.send("stop") == "finished"
    run.join(timeout=10.0)
    assert run.lifecycle is RunLifecycle.FINISHED
    # outputs are closed and consistent after an early stop
    assert (tmp_path / "live" / "curve.csv").read_text().startswith(CURVE_HEADER)
    with pytest.raises(IllegalTransition):
        run.send("pause")


def test_send_rejects_unknown_and_illegal():
    run = TrainingRun(ref_config())
    with pytest.raises(ConfigError):
        run.send("warp")
    with pytest.raises(IllegalTransition):
        run.send("resume")  # still idle


def test_evaluation_uses_twin_env_training_unaffected(tmp_path):
    # same config: one run is interrupted by evaluations, one is not
    plain_cfg = q_config(out=str(tmp_path / "plain"))
    run_training(plain_cfg)
    run = TrainingRun(q_config(out=str(tmp_path / "evald")), run_id="evald")
    run.start()
    for _ in range(3):
        run.send("evaluate")
        time.sleep(0.01)
    run.join(timeout=60.0)
    plain = (tmp_path / "plain" / "telemetry.jsonl").read_bytes()
    evald = (tmp_path / "evald" / "telemetry.jsonl").read_bytes()
    assert plain == evald  # eval draws never touch the training streams
    assert len(run.eval_records) == 3
    for i in range(3):
        assert (tmp_path / "evald" / "evals" / f"eval_{i:03d}.jsonl").exists()


def test_evaluate_checkpoint_round_trip(tmp_path):
    cfg = q_config(out=str(tmp_path / "train"))
    run_training(cfg)
    rec = evaluate_checkpoint(cfg, tmp_path / "train" / "qweights.bin")
    assert rec.reason in (DoneReason.GOAL, DoneReason.TIMEOUT)
    assert rec.ret == -rec.steps

    shrunk = RunConfig(**{**cfg.__dict__, "tiles": cfg.tiles.__class__(n_tilings=4)})
    with pytest.raises(ConfigError, match="layout"):
        evaluate_checkpoint(shrunk, tmp_path / "train" / "qweights.bin")
