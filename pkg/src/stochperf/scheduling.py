"""ETC matrix and deadline-aware allocation heuristics (MECT, MCC, TEC).

Queueing model: one non-preemptive FIFO queue per machine, zero transfer
cost.  A task's expected completion on machine m is
``max(arrival, available_at[m]) + delta[app, m]``.  Ties always go to the
lowest machine index.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .distributions import DistributionSpec, sample, spec_from_dict, spec_to_dict
from .errors import (
    InputError,
    MalformedRow,
    MissingCell,
    NoCloudMachines,
    NoEdgeMachines,
    NonPositiveMean,
    UnknownApp,
)
from .traces import SummaryStats

EDGE = "edge"
CLOUD = "cloud"
POLICIES = ("mect", "mcc", "tec")
TASK_CSV_HEADER = ("id", "app_type", "arrival_ms", "deadline_ms", "urgent")


@dataclass(frozen=True)
class Machine:
    id: str
    role: str = EDGE

    def __post_init__(self):
        if self.role not in (EDGE, CLOUD):
            raise InputError(f"machine role must be 'edge' or 'cloud', got {self.role!r}")


@dataclass(frozen=True)
class EtcMatrix:
    apps: tuple[str, ...]
    machines: tuple[Machine, ...]
    expected_ms: tuple[tuple[float, ...], ...]
    dist: Optional[tuple[tuple[DistributionSpec, ...], ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "apps", tuple(self.apps))
        object.__setattr__(self, "machines", tuple(self.machines))
        rows = tuple(tuple(float(v) for v in row) for row in self.expected_ms)
        object.__setattr__(self, "expected_ms", rows)
        if len(rows) != len(self.apps) or any(len(r) != len(self.machines) for r in rows):
            raise InputError("expected_ms must be |apps| x |machines|")
        if any(not (math.isfinite(v) and v > 0.0) for r in rows for v in r):
            raise NonPositiveMean("every ETC entry must be positive and finite")
        if len(set(self.apps)) != len(self.apps) or len({m.id for m in self.machines}) != len(self.machines):
            raise InputError("duplicate app or machine identifiers")
        if self.dist is not None:
            d = tuple(tuple(row) for row in self.dist)
            if len(d) != len(self.apps) or any(len(r) != len(self.machines) for r in d):
                raise InputError("dist must be |apps| x |machines|")
            for row in d:
                for spec in row:
                    m = spec.mean()
                    if not (math.isfinite(m) and m > 0.0):
                        raise NonPositiveMean(f"distribution {spec!r} has no finite positive mean")
            object.__setattr__(self, "dist", d)

    @property
    def machine_ids(self) -> list[str]:
        return [m.id for m in self.machines]

    def app_index(self, app: str) -> int:
        try:
            return self.apps.index(app)
        except ValueError:
            raise UnknownApp(f"app {app!r} not in ETC matrix") from None

    def row(self, app: str) -> np.ndarray:
        return np.asarray(self.expected_ms[self.app_index(app)])

    def to_dict(self) -> dict:
        out = {
            "apps": list(self.apps),
            "machines": [{"id": m.id, "role": m.role} for m in self.machines],
            "expected_ms": [list(r) for r in self.expected_ms],
        }
        if self.dist is not None:
            out["dist"] = [[spec_to_dict(s) for s in row] for row in self.dist]
        return out

    @classmethod
    def from_dict(cls, d: Mapping) -> "EtcMatrix":
        try:
            machines = tuple(Machine(m["id"], m.get("role", EDGE)) for m in d["machines"])
            dist = None
            if d.get("dist") is not None:
                dist = tuple(tuple(spec_from_dict(s) for s in row) for row in d["dist"])
            return cls(tuple(d["apps"]), machines, tuple(tuple(r) for r in d["expected_ms"]), dist)
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed ETC matrix: {exc}") from None


Fit = Union[SummaryStats, DistributionSpec]


def _fit_mean(fit: Fit) -> float:
    return fit.mean if isinstance(fit, SummaryStats) else fit.mean()


def build_etc(
    fits: Mapping[tuple[str, str], Fit],
    machine_roles: Mapping[str, str],
    apps: Optional[Sequence[str]] = None,
    machines: Optional[Sequence[str]] = None,
    dists: Optional[Mapping[tuple[str, str], DistributionSpec]] = None,
) -> EtcMatrix:
    """Assemble the ETC matrix from per-(app, machine) fits.

    ``expected_ms`` is the arithmetic mean of each fit.  ``dist`` is filled
    when every cell has a distribution, taken from ``dists`` if given or else
    from ``fits`` when those are all distributions.
    """
    apps = list(apps) if apps is not None else sorted({a for a, _ in fits})
    machines = list(machines) if machines is not None else list(machine_roles)
    rows = []
    for a in apps:
        row = []
        for m in machines:
            if (a, m) not in fits:
                raise MissingCell(a, m)
            mean = _fit_mean(fits[(a, m)])
            if not (math.isfinite(mean) and mean > 0.0):
                raise NonPositiveMean(f"cell ({a}, {m}) has mean {mean!r}")
            row.append(mean)
        rows.append(tuple(row))
    source = dists
    if source is None and all(not isinstance(f, SummaryStats) for f in fits.values()):
        source = fits
    dist = None
    if source is not None and all((a, m) in source for a in apps for m in machines):
        dist = tuple(tuple(source[(a, m)] for m in machines) for a in apps)
    roles = tuple(Machine(m, machine_roles.get(m, EDGE)) for m in machines)
    return EtcMatrix(tuple(apps), roles, tuple(rows), dist)


@dataclass(frozen=True)
class Task:
    id: str
    app_type: str
    arrival_ms: float
    deadline_ms: float
    urgent: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.arrival_ms) and self.arrival_ms >= 0.0):
            raise InputError(f"task {self.id}: arrival must be non-negative")
        if not self.deadline_ms > self.arrival_ms:
            raise InputError(f"task {self.id}: deadline must be after arrival")


@dataclass(frozen=True)
class MachineState:
    machine: str
    available_at_ms: float = 0.0


@dataclass(frozen=True)
class TaskOutcome:
    task_id: str
    machine: str
    start_ms: float
    finish_ms: float
    met_deadline: bool

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "machine": self.machine,
            "start_ms": self.start_ms,
            "finish_ms": self.finish_ms,
            "met_deadline": self.met_deadline,
        }


@dataclass(frozen=True)
class SimReport:
    policy: str
    tasks_total: int
    tasks_missed: int
    miss_rate: float
    mean_completion_ms: float
    per_task: tuple[TaskOutcome, ...]
    stochastic: bool = False
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "stochastic": self.stochastic,
            "seed": self.seed,
            "tasks_total": self.tasks_total,
            "tasks_missed": self.tasks_missed,
            "miss_rate": self.miss_rate,
            "mean_completion_ms": self.mean_completion_ms,
            "per_task": [o.to_dict() for o in self.per_task],
        }


def _availability(etc: EtcMatrix, states: Iterable[MachineState]) -> np.ndarray:
    avail = {s.machine: s.available_at_ms for s in states}
    missing = [m for m in etc.machine_ids if m not in avail]
    if missing:
        raise InputError(f"no state for machines {missing}")
    return np.array([avail[m] for m in etc.machine_ids], dtype=np.float64)


def expected_completion(task: Task, etc: EtcMatrix, states: Iterable[MachineState]) -> np.ndarray:
    row = etc.row(task.app_type)
    return np.maximum(task.arrival_ms, _availability(etc, states)) + row


def mect_assign(task: Task, etc: EtcMatrix, states: Iterable[MachineState]) -> str:
    """Machine with the minimum expected completion time."""
    completion = expected_completion(task, etc, states)
    return etc.machine_ids[int(np.argmin(completion))]


def mcc_assign(task: Task, etc: EtcMatrix, states: Iterable[MachineState]) -> tuple[str, float]:
    """Machine with the largest certainty ``deadline - expected completion``.

    The certainty may be negative; the task is assigned regardless.
    """
    certainty = task.deadline_ms - expected_completion(task, etc, states)
    j = int(np.argmax(certainty))
    return etc.machine_ids[j], float(certainty[j])


def tec_assign(task: Task, etc: EtcMatrix, rng: np.random.Generator) -> str:
    """Urgent tasks to a uniformly random edge machine, others to the first cloud machine."""
    edges = [m.id for m in etc.machines if m.role == EDGE]
    clouds = [m.id for m in etc.machines if m.role == CLOUD]
    if not edges:
        raise NoEdgeMachines("TEC needs at least one edge machine")
    if not clouds:
        raise NoCloudMachines("TEC needs at least one cloud machine")
    etc.app_index(task.app_type)
    if task.urgent:
        return edges[int(rng.integers(len(edges)))]
    return clouds[0]


def _task_seed(seed: int, i: int) -> int:
    return int(np.random.SeedSequence([seed, 1, i]).generate_state(1, dtype=np.uint64)[0])


def _service_time(etc: EtcMatrix, a: int, j: int, stochastic: bool, seed: int, i: int) -> float:
    mean = etc.expected_ms[a][j]
    if not stochastic:
        return mean
    draws = sample(etc.dist[a][j], _task_seed(seed, i), 16)
    positive = draws[draws > 0.0]
    # execution times are positive; a fitted normal can still put mass below 0
    return float(positive[0]) if positive.size else mean


def simulate(
    tasks: Sequence[Task],
    policy: str,
    etc: EtcMatrix,
    seed: int = 0,
    stochastic: bool = False,
    cloud_offset_ms: float = 0.0,
) -> SimReport:
    """Run one policy over an arrival-ordered task stream.

    Deterministic mode serves each task in exactly its ETC entry; stochastic
    mode draws the service time from the fitted distribution using a stream
    derived from ``(seed, task index)``.  ``cloud_offset_ms`` is added to the
    finish time of tasks placed on cloud machines (round trip); the
    heuristics do not see it.  ``mean_completion_ms`` is the mean finish time.
    """
    if policy not in POLICIES:
        raise InputError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    if stochastic and etc.dist is None:
        raise InputError("stochastic mode needs an ETC matrix with distributions")
    if seed < 0:
        raise InputError("seed must be non-negative")
    if any(b.arrival_ms < a.arrival_ms for a, b in zip(tasks, tasks[1:])):
        raise InputError("tasks must be sorted by arrival_ms")

    ids = etc.machine_ids
    roles = [m.role for m in etc.machines]
    states = [MachineState(m, 0.0) for m in ids]
    tec_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0])))
    outcomes = []
    for i, task in enumerate(tasks):
        if policy == "mect":
            chosen = mect_assign(task, etc, states)
        elif policy == "mcc":
            chosen = mcc_assign(task, etc, states)[0]
        else:
            chosen = tec_assign(task, etc, tec_rng)
        j = ids.index(chosen)
        a = etc.app_index(task.app_type)
        start = max(task.arrival_ms, states[j].available_at_ms)
        busy_until = start + _service_time(etc, a, j, stochastic, seed, i)
        states[j] = replace(states[j], available_at_ms=busy_until)
        finish = busy_until + (cloud_offset_ms if roles[j] == CLOUD else 0.0)
        outcomes.append(TaskOutcome(task.id, chosen, start, finish, finish <= task.deadline_ms))

    total = len(outcomes)
    missed = sum(not o.met_deadline for o in outcomes)
    mean_finish = float(np.mean([o.finish_ms for o in outcomes])) if outcomes else 0.0
    return SimReport(policy, total, missed, missed / total if total else 0.0, mean_finish, tuple(outcomes), stochastic, seed)


# --------------------------------------------------------------- task CSV

def parse_task_csv(content: bytes | str) -> list[Task]:
    text = content.decode("utf-8-sig") if isinstance(content, bytes) else content
    reader = csv.reader(io.StringIO(text, newline=""))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != TASK_CSV_HEADER:
        raise MalformedRow(1, f"expected header {','.join(TASK_CSV_HEADER)}")
    tasks = []
    for row in reader:
        line = reader.line_num
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(TASK_CSV_HEADER):
            raise MalformedRow(line, f"expected {len(TASK_CSV_HEADER)} fields")
        tid, app, arr, dl, urg = (f.strip() for f in row)
        if urg not in ("0", "1"):
            raise MalformedRow(line, f"urgent must be 0 or 1, got {urg!r}")
        try:
            tasks.append(Task(tid, app, float(arr), float(dl), urg == "1"))
        except ValueError as exc:
            raise MalformedRow(line, str(exc)) from None
    tasks.sort(key=lambda t: t.arrival_ms)
    return tasks


def serialize_task_csv(tasks: Iterable[Task]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(TASK_CSV_HEADER)
    for t in tasks:
        w.writerow([t.id, t.app_type, repr(t.arrival_ms), repr(t.deadline_ms), int(t.urgent)])
    return out.getvalue()
