"""Monitor HTTP API tests against a live server on a loopback port."""

import http.client
import json
import threading
import time
import urllib.error
import urllib.request

import pytest

from hillcar.api import RunLifecycle
from hillcar.config import RunConfig
from hillcar.service import MonitorService


@pytest.fixture
def live(tmp_path):
    service = MonitorService(base_out=tmp_path / "runs")
    server = service.serve(port=0)
    port = server.server_address[1]
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield service, f"http://127.0.0.1:{port}"
    for run in list(service.runs.values()):
        try:
            run.send("stop", timeout=10.0)
        except Exception:
            pass
        run.join(timeout=10.0)
    service.shutdown()
    thread.join(timeout=5.0)


def req(base, path, method="GET", body=None):
    """Returns (status code, parsed or raw body)."""
    data = None
    if body is not None:
        data = body.encode() if isinstance(body, str) else json.dumps(body).encode()
    r = urllib.request.Request(base + path, data=data, method=method)
    try:
        with urllib.request.urlopen(r, timeout=30) as resp:
            raw = resp.read()
            code = resp.status
    except urllib.error.HTTPError as exc:
        raw = exc.read()
        code = exc.code
    try:
        return code, json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError):
        return code, raw


def start_run(base, **cfg):
    code, doc = req(base, "/api/runs", "POST", cfg)
    assert code == 201, doc
    return doc["id"]


def wait_finished(service, run_id, timeout=60.0):
    run = service.runs[run_id]
    run.join(timeout=timeout)
    assert run.lifecycle is RunLifecycle.FINISHED


SHORT = dict(agent="reference", episodes=2, step_cap=300, seed=3)
LONG = dict(agent="reference", episodes=2000, step_cap=3000, seed=3)


def test_status_starts_empty(live):
    _, base = live
    code, doc = req(base, "/api/status")
    assert code == 200
    assert doc["runs"] == []
    assert doc["busy"] is False
    assert doc["time"] == pytest.approx(time.time(), abs=30)


def test_start_run_and_track_to_completion(live):
    service, base = live
    run_id = start_run(base, **SHORT)
    assert run_id == "r001"
    wait_finished(service, run_id)
    code, doc = req(base, "/api/status")
    row = doc["runs"][0]
    assert row["id"] == run_id
    assert row["state"] == "finished"
    assert row["episodes_done"] == 2
    assert row["episodes_total"] == 2
    assert doc["busy"] is False


def test_flat_text_body_accepted(live):
    service, base = live
    r = urllib.request.Request(
        base + "/api/runs",
        data=b"agent = reference\nepisodes = 1\nstep_cap = 60\nseed = 3\n",
        method="POST",
    )
    with urllib.request.urlopen(r, timeout=30) as resp:
        doc = json.loads(resp.read())
        assert resp.status == 201
    wait_finished(service, doc["id"])
    assert service.runs[doc["id"]].config.step_cap == 60


def test_second_start_rejected_while_busy(live):
    service, base = live
    run_id = start_run(base, **LONG)
    code, doc = req(base, "/api/runs", "POST", SHORT)
    assert code == 409
    assert doc["error"] == "RigBusy"
    code, _ = req(base, f"/api/runs/{run_id}/stop", "POST")
    assert code == 200


def test_unknown_run_and_eval_404(live):
    _, base = live
    assert req(base, "/api/runs/nope/pause", "POST")[0] == 404
    assert req(base, "/api/runs/nope/curve")[0] == 404
    run_id = start_run(base, **LONG)
    assert req(base, f"/api/runs/{run_id}/evals/7")[0] == 404


def test_bad_config_rejected(live):
    _, base = live
    code, doc = req(base, "/api/runs", "POST", {"agent": "dqn"})
    assert code == 400 and doc["error"] == "ConfigError"
    code, doc = req(base, "/api/runs", "POST", {"bogus_key": 1})
    assert code == 400
    code, doc = req(base, "/api/runs", "POST", "{not json")
    assert code == 400


def test_method_mismatch_rejected(live):
    _, base = live
    assert req(base, "/api/runs", "GET")[0] == 405
    assert req(base, "/api/status", "POST", "")[0] == 405


def test_pause_lands_between_steps(live):
    service, base = live
    run_id = start_run(base, **LONG)
    code, doc = req(base, f"/api/runs/{run_id}/pause", "POST")
    assert code == 200 and doc["state"] == "paused"
    run = service.runs[run_id]
    # the ack means the sim thread is parked: the step counter must freeze
    n1 = run.env.steps_taken
    time.sleep(0.15)
    assert run.env.steps_taken == n1
    code, doc = req(base, f"/api/runs/{run_id}/resume", "POST")
    assert code == 200 and doc["state"] == "learning"
    deadline = time.monotonic() + 10.0
    while run.env.steps_taken == n1 and time.monotonic() < deadline:
        time.sleep(0.01)
    assert run.env.steps_taken != n1
    assert req(base, f"/api/runs/{run_id}/pause", "POST")[0] == 200
    assert req(base, f"/api/runs/{run_id}/pause", "POST")[0] == 409  # already paused


def test_single_rig_blocks_cross_run_resume(live):
    service, base = live
    a = start_run(base, **LONG)
    assert req(base, f"/api/runs/{a}/pause", "POST")[0] == 200
    b = start_run(base, **LONG)  # rig is free while a is paused
    code, doc = req(base, f"/api/runs/{a}/resume", "POST")
    assert code == 409 and doc["error"] == "RigBusy"
    code, doc = req(base, f"/api/runs/{a}/evaluate", "POST")
    assert code == 409 and doc["error"] == "RigBusy"
    assert req(base, f"/api/runs/{b}/stop", "POST")[0] == 200
    code, _ = req(base, f"/api/runs/{a}/resume", "POST")
    assert code == 200  # rig freed by the stop


def test_evaluate_endpoint_and_trace(live):
    service, base = live
    run_id = start_run(base, agent="qlearning", episodes=2000, step_cap=500, seed=1)
    code, doc = req(base, f"/api/runs/{run_id}/evaluate", "POST")
    assert code == 200
    assert doc["index"] == 0
    assert doc["record"]["return"] == -doc["record"]["steps"]
    assert doc["state"] == "learning"  # back to training after the eval

    code, raw = req(base, f"/api/runs/{run_id}/evals/0")
    assert code == 200
    lines = raw.decode().splitlines()
    assert len(lines) == doc["record"]["steps"]
    first = json.loads(lines[0])
    assert first["state"] == "evaluating"
    assert first["step"] == 1


def test_curve_endpoint_matches_file(live):
    service, base = live
    run_id = start_run(base, **SHORT)
    wait_finished(service, run_id)
    code, raw = req(base, f"/api/runs/{run_id}/curve")
    assert code == 200
    on_disk = (service.runs[run_id].out_dir / "curve.csv").read_bytes()
    assert raw == on_disk
    assert raw.decode().splitlines()[0] == "episode,steps,return,reason"
    assert len(raw.decode().splitlines()) == 1 + 2


def test_live_telemetry_stream(live):
    service, base = live
    run_id = start_run(base, **LONG)
    host, port = base.replace("http://", "").split(":")
    conn = http.client.HTTPConnection(host, int(port), timeout=30)
    conn.request("GET", f"/api/runs/{run_id}/telemetry")
    resp = conn.getresponse()
    assert resp.status == 200
    assert resp.headers["Content-Type"] == "application/x-ndjson"
    seen = []
    for _ in range(5):
        line = resp.fp.readline()
        assert line
        seen.append(json.loads(line))
    conn.close()
    steps = [s["step"] for s in seen]
    assert steps == sorted(steps)
    for s in seen:
        assert s["state"] == "learning"
        assert s["reward"] == -1.0


def test_finished_telemetry_replays_file(live):
    service, base = live
    run_id = start_run(base, **SHORT)
    wait_finished(service, run_id)
    code, raw = req(base, f"/api/runs/{run_id}/telemetry")
    assert code == 200
    on_disk = service.runs[run_id].telemetry_path.read_bytes()
    assert raw == on_disk
    assert len(raw.splitlines()) == sum(r.steps for r in service.runs[run_id].records)


def test_fallback_page_and_static_404(live):
    _, base = live
    code, raw = req(base, "/")
    assert code == 200 and b"monitor" in raw
    assert req(base, "/missing.js")[0] == 404


def test_static_dir_serving_and_traversal_guard(tmp_path):
    static = tmp_path / "dist"
    static.mkdir()
    (static / "index.html").write_text("<html>dash</html>")
    (static / "app.js").write_text("console.log(1)")
    (tmp_path / "secret.txt").write_text("keep out")
    service = MonitorService(base_out=tmp_path / "runs", static_dir=static)
    server = service.serve(port=0)
    port = server.server_address[1]
    threading.Thread(target=server.serve_forever, daemon=True).start()
    base = f"http://127.0.0.1:{port}"
    try:
        code, raw = req(base, "/")
        assert code == 200 and raw == b"<html>dash</html>"
        code, raw = req(base, "/app.js")
        assert code == 200 and b"console" in raw
        assert req(base, "/../secret.txt")[0] == 404
        assert req(base, "/%2e%2e/secret.txt")[0] == 404
    finally:
        service.shutdown()
