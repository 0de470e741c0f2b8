"""Command-line entry point: headless runs, checkpoint evaluation, or the
monitor service."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import RunConfig, load_config
from .errors import ConfigError, HillcarError
from .harness import evaluate_checkpoint, run_training
from .service import MonitorService


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hillcar",
        description="Simulated vision-sensed mountain-car rig: run episodes, "
        "train the tile-coded Q-learner, or serve the live monitor.",
    )
    p.add_argument("--agent", choices=("reference", "qlearning"), default=None,
                   help="controller to run (default: reference)")
    p.add_argument("--episodes", type=int, default=None, help="episode count")
    p.add_argument("--steps-cap", dest="step_cap", type=int, default=None,
                   help="per-episode step limit (timeout)")
    p.add_argument("--seed", type=int, default=None, help="master random seed")
    p.add_argument("--config", default=None, help="key = value config file")
    p.add_argument("--out", default=None, help="output directory for run artifacts")
    p.add_argument("--realtime", action="store_true", default=None,
                   help="pace steps to wall-clock control timing")
    p.add_argument("--serve", action="store_true", default=None,
                   help="start the HTTP monitor instead of a headless run")
    p.add_argument("--port", type=int, default=None, help="monitor port (default 8080)")
    p.add_argument("--eval", dest="eval_checkpoint", default=None, metavar="CHECKPOINT",
                   help="run one greedy episode from a saved weight file")
    return p


def _merge(args: argparse.Namespace) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    overrides = {
        name: getattr(args, name)
        for name in ("agent", "episodes", "step_cap", "seed", "out",
                     "realtime", "serve", "port")
        if getattr(args, name) is not None
    }
    return replace(config, **overrides).validate()


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _merge(args)
    except (HillcarError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.serve:
            static = Path("frontend") / "dist"
            service = MonitorService(
                base_out=config.out or "runs",
                static_dir=static if static.is_dir() else None,
                base_config=config,
            )
            print(f"monitor listening on http://127.0.0.1:{config.port}/", flush=True)
            try:
                service.serve_forever(port=config.port)
            except KeyboardInterrupt:
                service.shutdown()
            return 0

        if args.eval_checkpoint:
            rec = evaluate_checkpoint(config, args.eval_checkpoint)
            print(rec.to_json())
            return 0

        run = run_training(config)
        for rec in run.records:
            print(
                f"episode {rec.episode}: steps={rec.steps} return={int(rec.ret)} "
                f"reason={rec.reason.value}",
                flush=True,
            )
        if run.out_dir is not None:
            print(f"artifacts in {run.out_dir}")
        return 0
    except (HillcarError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
