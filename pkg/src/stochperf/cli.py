"""Command-line entry point.

Exit codes: 0 success, 2 bad input (parse or validation), 3 numerical failure.
Per-cell failures are reported inside the output, not through the exit code.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .errors import InputError, NumericalError
from .report import (
    PipelineConfig,
    dumps_json,
    etc_matrices,
    fmt_ms,
    load_calibration,
    render_markdown,
    run_pipeline,
)
from .scheduling import POLICIES, EtcMatrix, parse_task_csv, simulate
from .traces import parse_trace_csv

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
SEED_ENV = "STOCHPERF_SEED"

_SECTION_COMMANDS = {
    "summarize": ("summary",),
    "normality": ("normality",),
    "fit": ("fit",),
    "mips": ("mips",),
    "ci": ("ci",),
    "etc": ("fit", "etc"),
    "report": ("summary", "normality", "fit", "mips", "ci", "etc"),
}


def _common(p: argparse.ArgumentParser, traces_required: bool = True) -> None:
    p.add_argument("--traces", required=traces_required, help="trace CSV file")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level (default 0.05)")
    p.add_argument("--k", type=int, default=100, help="bootstrap resamples (default 100)")
    p.add_argument("--confidence", type=float, default=0.95, help="jackknife CI level (default 0.95)")
    p.add_argument("--seed", type=int, default=None, help=f"master seed (default ${SEED_ENV} or 0)")
    p.add_argument("--calibration", help="calibration JSON (object or list)")
    p.add_argument("--cloud", action="append", default=[], metavar="MACHINE", help="mark a machine as cloud (repeatable)")
    p.add_argument("--workers", type=int, default=1, help="bootstrap worker threads")
    p.add_argument("--format", choices=("json", "markdown"), default="json")
    p.add_argument("--out", help="write output here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stochperf", description="Stochastic performance analysis of execution traces.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "summarize": "mean/std/min/max per cell",
        "normality": "Shapiro-Wilk test per cell",
        "fit": "K-S best-fit family per cell",
        "mips": "point MIPS per cell (needs --calibration)",
        "ci": "jackknife and bootstrap MIPS intervals (needs --calibration)",
        "etc": "expected-time-to-compute matrix per platform",
        "report": "all sections",
    }
    for name, text in helps.items():
        _common(sub.add_parser(name, help=text))
    sim = sub.add_parser("simulate", help="run allocation heuristics over a task stream")
    _common(sim, traces_required=False)
    sim.add_argument("--etc", help="ETC matrix JSON (as written by the etc command)")
    sim.add_argument("--platform", help="platform to use when the ETC source has several")
    sim.add_argument("--tasks", required=True, help="task CSV: id,app_type,arrival_ms,deadline_ms,urgent")
    sim.add_argument("--policy", choices=POLICIES + ("all",), default="all")
    sim.add_argument("--stochastic", action="store_true", help="draw service times from fitted distributions")
    sim.add_argument("--cloud-offset", type=float, default=0.0, help="round-trip ms added to cloud finishes")
    return parser


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise InputError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def _config(args) -> PipelineConfig:
    calib = load_calibration(args.calibration) if args.calibration else ()
    return PipelineConfig(
        trace_path=args.traces,
        alpha=args.alpha,
        bootstrap_k=args.k,
        confidence=args.confidence,
        master_seed=_seed(args),
        calibration=calib,
        output_format=args.format,
        cloud_machines=tuple(args.cloud),
        workers=args.workers,
    )


def _read_traces(path: str):
    return parse_trace_csv(Path(path).read_bytes())


def _load_etc(args, cfg: PipelineConfig) -> EtcMatrix:
    if args.etc:
        data = json.loads(Path(args.etc).read_text(encoding="utf-8"))
        if "sections" in data:
            data = data["sections"].get("etc", {})
        if "apps" not in data:
            if not data:
                raise InputError("no ETC matrix in file")
            key = args.platform or sorted(data)[0]
            if key not in data:
                raise InputError(f"platform {key!r} not in ETC file")
            data = data[key]
        return EtcMatrix.from_dict(data)
    if not args.traces:
        raise InputError("simulate needs --etc or --traces")
    mats = etc_matrices(_read_traces(args.traces), cfg)
    key = args.platform or sorted(mats)[0]
    if key not in mats:
        raise InputError(f"platform {key!r} not in traces")
    return mats[key]


def _simulate_markdown(reports) -> str:
    lines = [
        "# stochperf simulation",
        "",
        "| policy | tasks | missed | miss rate | mean completion (ms) |",
        "|---|---|---|---|---|",
    ]
    for r in reports:
        lines.append(f"| {r.policy} | {r.tasks_total} | {r.tasks_missed} | {r.miss_rate:.4f} | {fmt_ms(r.mean_completion_ms)} |")
    return "\n".join(lines) + "\n"


def _run(args) -> str:
    cfg = _config(args)
    if args.command == "simulate":
        etc = _load_etc(args, cfg)
        tasks = parse_task_csv(Path(args.tasks).read_bytes())
        policies = POLICIES if args.policy == "all" else (args.policy,)
        reports = [simulate(tasks, p, etc, cfg.master_seed, args.stochastic, args.cloud_offset) for p in policies]
        if cfg.output_format == "markdown":
            return _simulate_markdown(reports)
        return dumps_json({"tool": "stochperf", "seed": cfg.master_seed, "simulations": [r.to_dict() for r in reports]})

    if args.command in ("mips", "ci") and not cfg.calibration:
        raise InputError(f"{args.command} needs --calibration")
    doc = run_pipeline(_read_traces(args.traces), cfg, _SECTION_COMMANDS[args.command])
    if args.command == "etc":
        del doc["sections"]["fit"]
        doc.pop("notes", None)
    return render_markdown(doc) if cfg.output_format == "markdown" else dumps_json(doc)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = _run(args)
    except (InputError, OSError, json.JSONDecodeError) as exc:
        print(f"stochperf: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, ArithmeticError) as exc:
        print(f"stochperf: numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
