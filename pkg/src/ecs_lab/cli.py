"""Command line entry point ``ecs-lab``.

Exit codes: 0 when every check passes, 1 when some check fails, 2 for
configuration or usage errors.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .config import TASKS, ConfigError, load_config
from .model import AdmissibilityError
from .runner import random_model_sweep, run_suite
from .scalar import EXACT, FLOAT, EcsLabError

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecs-lab", description="Verification lab for rank-one ECS model metrics.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="config file, or a bundled name (m1, m2, m3, ...)")
        p.add_argument("--mode", choices=[EXACT, FLOAT], help="arithmetic mode (default: from config, else exact)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="write the JSON report here")
        p.add_argument("--quiet", action="store_true", help="suppress the human-readable report")

    for task in TASKS:
        common(sub.add_parser(task, help=f"run the {task} task"))
    common(sub.add_parser("all", help="run every task listed in the config"))
    sweep = sub.add_parser("sweep", help="random admissible models: verify and classify")
    common(sweep, needs_config=False)
    sweep.add_argument("--count", type=int, default=10, help="models per dimension")
    sweep.add_argument("--dims", default="4,5", help="comma-separated dimensions in 4..8")
    sweep.add_argument("--points", type=int, default=3, help="sample points per model")
    return parser


def _dims(text: str) -> list[int]:
    dims = [int(d) for d in text.split(",") if d.strip()]
    if not dims or any(not 4 <= d <= 8 for d in dims):
        raise ValueError("dimensions must lie in 4..8")
    return dims


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        if args.command == "sweep":
            report = random_model_sweep(
                args.count, _dims(args.dims), args.seed or 0, args.points, args.mode or EXACT
            )
        else:
            cfg = load_config(args.config)
            tasks = None if args.command == "all" else [args.command]
            report = run_suite(cfg, tasks=tasks, mode=args.mode, seed=args.seed)
    except (ConfigError, AdmissibilityError, ValueError) as exc:
        print(f"ecs-lab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EcsLabError as exc:
        print(f"ecs-lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    runtime = time.perf_counter() - start
    if args.out:
        Path(args.out).write_text(report.to_json())
    if not args.quiet:
        sys.stdout.write(report.to_text(runtime))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
