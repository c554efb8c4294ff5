"""Deterministic synthetic traces, calibration and task streams.

The bundled files under ``stochperf/data`` are produced by :func:`write_fixture`
with the default arguments; tests regenerate them and compare bytes.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from .distributions import LogNormal, Normal, StudentT, sample, uniform_open
from .scheduling import Task, serialize_task_csv
from .traces import TraceSample, TraceSet, serialize_trace_csv

PLATFORM = "synthetic"
MACHINES = {"cloud_gpu": 0.35, "edge_a": 1.0, "edge_b": 1.6}
CLOUD_MACHINES = ("cloud_gpu",)
REFERENCE_MACHINE = "edge_a"
REFERENCE_MIPS = 1000.0
APPS = ("aie", "fire", "har", "oil")
RUNS = 30


def _cell(app: str, factor: float, seed: int) -> np.ndarray:
    if app == "aie":
        x = sample(Normal(40.0 * factor, 0.8 * factor), seed, RUNS)
    elif app == "oil":
        x = sample(LogNormal(float(np.log(120.0 * factor)), 0.15), seed, RUNS)
    elif app == "har":
        x = sample(StudentT(2.5, 60.0 * factor, 1.5 * factor), seed, RUNS)
    else:
        # two well separated modes (cold vs warm runs)
        u = uniform_open(seed + 1, RUNS)
        lo = sample(Normal(25.0 * factor, 0.5 * factor), seed, RUNS)
        x = np.where(u < 0.5, lo, lo + 20.0 * factor)
    return np.round(x, 4)


def make_traces(seed: int = 7) -> TraceSet:
    samples = []
    for i, app in enumerate(APPS):
        for j, (machine, factor) in enumerate(sorted(MACHINES.items())):
            cell_seed = int(np.random.SeedSequence([seed, i, j]).generate_state(1)[0])
            samples.append(TraceSample(PLATFORM, machine, app, tuple(float(v) for v in _cell(app, factor, cell_seed))))
    return TraceSet(samples)


def make_calibration() -> list[dict]:
    return [
        {"app_type": app, "reference_machine": REFERENCE_MACHINE, "reference_mips": REFERENCE_MIPS, "platform": PLATFORM}
        for app in APPS
    ]


def make_tasks(seed: int = 11, n: int = 60, mean_gap_ms: float = 20.0, urgent_share: float = 0.4) -> list[Task]:
    """Poisson arrivals; urgent tasks get a deadline of 1.5x, others 4x the edge_a mean time."""
    rng = np.random.Generator(np.random.PCG64(seed))
    base = {"aie": 40.0, "fire": 35.0, "har": 60.0, "oil": 120.0}
    arrivals = np.round(np.cumsum(rng.exponential(mean_gap_ms, n)), 3)
    apps = rng.choice(APPS, n)
    urgent = rng.random(n) < urgent_share
    tasks = []
    for i in range(n):
        slack = (1.5 if urgent[i] else 4.0) * base[str(apps[i])]
        arr = float(arrivals[i])
        tasks.append(Task(f"t{i:03d}", str(apps[i]), arr, round(arr + slack, 3), bool(urgent[i])))
    return tasks


def write_fixture(directory: str | Path) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    (d / "synthetic_traces.csv").write_text(serialize_trace_csv(make_traces()), encoding="utf-8")
    (d / "calibration.json").write_text(json.dumps(make_calibration(), indent=2) + "\n", encoding="utf-8")
    (d / "tasks.csv").write_text(serialize_task_csv(make_tasks()), encoding="utf-8")


def bundled(name: str) -> Path:
    """Path of a bundled data file (``synthetic_traces.csv``, ``calibration.json``, ``tasks.csv``)."""
    return Path(str(resources.files("stochperf") / "data" / name))
