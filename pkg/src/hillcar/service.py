"""HTTP monitor: start and steer runs, stream telemetry, fetch curves.

Single-rig semantics: at most one run may be learning or evaluating at a
time, mirroring one physical track. Everything is stdlib http.server; a
run's simulation loop lives on its own thread and this layer only talks
to it through the command queue and the telemetry hub.
"""

from __future__ import annotations

import json
import mimetypes
import re
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .api import RunLifecycle
from .config import RunConfig, config_from_flat
from .errors import ConfigError, HillcarError, IllegalTransition, RigBusy, UnknownRun
from .harness import TrainingRun

_ACTIVE = (RunLifecycle.LEARNING, RunLifecycle.EVALUATING)

_FALLBACK_PAGE = b"""<!doctype html>
<meta charset="utf-8"><title>hillcar monitor</title>
<h1>hillcar monitor</h1>
<p>No dashboard build found. The API is live under <code>/api/</code>.</p>
"""


class MonitorService:
    def __init__(
        self,
        base_out: str = "runs",
        static_dir=None,
        base_config: RunConfig | None = None,
    ):
        self.base_out = Path(base_out)
        self.static_dir = Path(static_dir) if static_dir else None
        self.base_config = base_config if base_config is not None else RunConfig()
        self.runs: dict[str, TrainingRun] = {}
        self._lock = threading.Lock()
        self._counter = 0
        self._server: ThreadingHTTPServer | None = None

    # -- run registry --------------------------------------------------

    def _busy(self, exclude: TrainingRun | None = None) -> bool:
        return any(
            r is not exclude and r.lifecycle in _ACTIVE for r in self.runs.values()
        )

    def get_run(self, run_id: str) -> TrainingRun:
        run = self.runs.get(run_id)
        if run is None:
            raise UnknownRun(f"no run {run_id!r}")
        return run

    def start_run(self, raw: dict) -> TrainingRun:
        with self._lock:
            if self._busy():
                raise RigBusy("a run is already using the rig")
            config = config_from_flat(raw, self.base_config)
            self._counter += 1
            run_id = f"r{self._counter:03d}"
            out_dir = Path(config.out) if config.out else self.base_out / run_id
            run = TrainingRun(config, run_id, out_dir)
            self.runs[run_id] = run
            run.start()
            return run

    def command(self, run_id: str, cmd: str):
        run = self.get_run(run_id)
        if cmd in ("resume", "evaluate") and self._busy(exclude=run):
            raise RigBusy("another run is using the rig")
        return run.send(cmd)

    def status(self) -> dict:
        rows = []
        for run_id, run in self.runs.items():
            rows.append(
                {
                    "id": run_id,
                    "state": run.lifecycle.value,
                    "agent": run.config.agent,
                    "seed": run.config.seed,
                    "episodes_done": len(run.records),
                    "episodes_total": run.config.episodes,
                    "evals": len(run.eval_records),
                    "started_at": run.started_at,
                }
            )
        return {"runs": rows, "busy": self._busy(), "time": time.time()}

    # -- http ----------------------------------------------------------

    def serve(self, port: int = 8080, host: str = "127.0.0.1") -> ThreadingHTTPServer:
        server = ThreadingHTTPServer((host, port), _Handler)
        server.daemon_threads = True
        server.service = self
        self._server = server
        return server

    def serve_forever(self, port: int = 8080, host: str = "127.0.0.1") -> None:
        self.serve(port, host).serve_forever()

    def shutdown(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None


_ROUTES = (
    ("GET", re.compile(r"^/api/status$"), "_r_status"),
    ("POST", re.compile(r"^/api/runs$"), "_r_start"),
    ("POST", re.compile(r"^/api/runs/([^/]+)/(pause|resume|evaluate|stop)$"), "_r_command"),
    ("GET", re.compile(r"^/api/runs/([^/]+)/telemetry$"), "_r_telemetry"),
    ("GET", re.compile(r"^/api/runs/([^/]+)/curve$"), "_r_curve"),
    ("GET", re.compile(r"^/api/runs/([^/]+)/evals/(\d+)$"), "_r_eval"),
)

_STATUS_OF = {
    UnknownRun: 404,
    RigBusy: 409,
    IllegalTransition: 409,
    ConfigError: 400,
}


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    @property
    def service(self) -> MonitorService:
        return self.server.service

    def log_message(self, fmt, *args):
        pass

    def _dispatch(self, method: str) -> None:
        path = self.path.split("?", 1)[0]
        try:
            for verb, pattern, name in _ROUTES:
                m = pattern.match(path)
                if m:
                    if verb != method:
                        self._send_error(405, "method not allowed")
                        return
                    getattr(self, name)(*m.groups())
                    return
            if method == "GET":
                self._r_static(path)
                return
            self._send_error(404, "no such endpoint")
        except HillcarError as exc:
            self._send_error(_STATUS_OF.get(type(exc), 500), str(exc), type(exc).__name__)
        except (BrokenPipeError, ConnectionResetError):
            pass

    def do_GET(self) -> None:
        self._dispatch("GET")

    def do_POST(self) -> None:
        self._dispatch("POST")

    # -- responses -----------------------------------------------------

    def _send_bytes(self, body: bytes, content_type: str, code: int = 200) -> None:
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, doc, code: int = 200) -> None:
        self._send_bytes(
            json.dumps(doc).encode("utf-8"), "application/json; charset=utf-8", code
        )

    def _send_error(self, code: int, detail: str, kind: str = "Error") -> None:
        self._send_json({"error": kind, "detail": detail}, code)

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length) if length else b""

    # -- route handlers ------------------------------------------------

    def _r_status(self) -> None:
        self._send_json(self.service.status())

    def _r_start(self) -> None:
        body = self._read_body().decode("utf-8", errors="replace").strip()
        raw: dict = {}
        if body.startswith("{"):
            try:
                doc = json.loads(body)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"bad JSON body: {exc}") from exc
            if not isinstance(doc, dict):
                raise ConfigError("config body must be an object")
            for key, value in doc.items():
                if isinstance(value, bool):
                    raw[key] = "true" if value else "false"
                else:
                    raw[key] = str(value)
        elif body:
            from .config import parse_flat

            raw = parse_flat(body)
        run = self.service.start_run(raw)
        self._send_json({"id": run.run_id, "state": run.lifecycle.value}, 201)

    def _r_command(self, run_id: str, cmd: str) -> None:
        result = self.service.command(run_id, cmd)
        if cmd == "evaluate":
            run = self.service.get_run(run_id)
            self._send_json(
                {
                    "record": json.loads(result.to_json()),
                    "index": len(run.eval_records) - 1,
                    "state": run.lifecycle.value,
                }
            )
        else:
            self._send_json({"state": result})

    def _r_curve(self, run_id: str) -> None:
        run = self.service.get_run(run_id)
        self._send_bytes(run.curve_text().encode("utf-8"), "text/csv; charset=utf-8")

    def _r_eval(self, run_id: str, index: str) -> None:
        run = self.service.get_run(run_id)
        trace = run.eval_trace(int(index))
        if trace is None:
            raise UnknownRun(f"run {run_id} has no evaluation {index}")
        self._send_bytes(trace.encode("utf-8"), "application/x-ndjson")

    def _r_telemetry(self, run_id: str) -> None:
        run = self.service.get_run(run_id)
        sub = run.hub.subscribe()
        try:
            if run.lifecycle == RunLifecycle.FINISHED:
                run.hub.unsubscribe(sub)
                sub = None
                self._replay_file(run)
                return
            self.send_response(200)
            self.send_header("Content-Type", "application/x-ndjson")
            self.send_header("Cache-Control", "no-store")
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Connection", "close")
            self.end_headers()
            while True:
                line = sub.get(timeout=0.5)
                if line is None:
                    break
                if line == "":
                    continue
                self.wfile.write(line.encode("utf-8") + b"\n")
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError, ConnectionAbortedError):
            pass
        finally:
            if sub is not None:
                run.hub.unsubscribe(sub)

    def _replay_file(self, run: TrainingRun) -> None:
        path = run.telemetry_path
        data = b""
        if path is not None and path.exists():
            data = path.read_bytes()
        self._send_bytes(data, "application/x-ndjson")

    def _r_static(self, path: str) -> None:
        root = self.service.static_dir
        if root is None or not root.is_dir():
            if path in ("/", "/index.html"):
                self._send_bytes(_FALLBACK_PAGE, "text/html; charset=utf-8")
            else:
                self._send_error(404, "not found")
            return
        name = path.lstrip("/") or "index.html"
        target = (root / name).resolve()
        if not str(target).startswith(str(root.resolve())) or not target.is_file():
            self._send_error(404, "not found")
            return
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        self._send_bytes(target.read_bytes(), ctype)
