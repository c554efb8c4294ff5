"""Execution-time trace model, CSV ingestion and descriptive summaries."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import DuplicateRunIndex, EmptyFile, MalformedRow, NonPositiveTime, SampleTooSmall

CSV_HEADER = ("platform", "machine_type", "app_type", "run_index", "inference_ms")
MIN_RUNS = 3

Key = tuple[str, str, str]


@dataclass(frozen=True)
class TraceSample:
    """Observed execution times (ms) of one application on one machine type."""

    platform: str
    machine_type: str
    app_type: str
    times_ms: tuple[float, ...]

    def __post_init__(self):
        times = tuple(float(t) for t in self.times_ms)
        object.__setattr__(self, "times_ms", times)
        if len(times) < MIN_RUNS:
            raise SampleTooSmall(f"{'/'.join(self.key)}: {len(times)} runs, need at least {MIN_RUNS}")
        for t in times:
            if not (math.isfinite(t) and t > 0.0):
                raise NonPositiveTime(0, t)

    @property
    def key(self) -> Key:
        return (self.platform, self.machine_type, self.app_type)

    @property
    def run_count(self) -> int:
        return len(self.times_ms)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.times_ms, dtype=np.float64)


@dataclass(frozen=True)
class TraceSet:
    """Samples keyed by (platform, machine_type, app_type), kept in key order."""

    samples: tuple[TraceSample, ...]

    def __post_init__(self):
        ordered = tuple(sorted(self.samples, key=lambda s: s.key))
        keys = [s.key for s in ordered]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate (platform, machine_type, app_type) in TraceSet")
        object.__setattr__(self, "samples", ordered)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[TraceSample]:
        return iter(self.samples)

    def __getitem__(self, key: Key) -> TraceSample:
        for s in self.samples:
            if s.key == tuple(key):
                return s
        raise KeyError(key)

    def keys(self) -> list[Key]:
        return [s.key for s in self.samples]

    def platforms(self) -> list[str]:
        return sorted({s.platform for s in self.samples})

    def machines(self, platform: str) -> list[str]:
        return sorted({s.machine_type for s in self.samples if s.platform == platform})

    def apps(self, platform: str) -> list[str]:
        return sorted({s.app_type for s in self.samples if s.platform == platform})

    def for_platform(self, platform: str) -> "TraceSet":
        return TraceSet(tuple(s for s in self.samples if s.platform == platform))


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    std_dev: float
    min: float
    max: float
    count: int

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std_dev": self.std_dev, "min": self.min, "max": self.max, "count": self.count}


def parse_trace_csv(content: bytes | str) -> TraceSet:
    """Parse a trace CSV into a TraceSet.

    The whole file is rejected on the first bad row.  Line numbers in errors
    are 1-based and count the header as line 1.
    """
    if isinstance(content, bytes):
        try:
            text = content.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise MalformedRow(1, f"not UTF-8: {exc}") from None
    else:
        text = content
    if not text.strip():
        raise EmptyFile("trace file is empty")

    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except csv.Error as exc:
        raise MalformedRow(1, str(exc)) from None
    if tuple(h.strip() for h in header) != CSV_HEADER:
        raise MalformedRow(1, f"expected header {','.join(CSV_HEADER)}")

    runs: dict[Key, dict[int, float]] = {}
    line = 1
    try:
        for row in reader:
            line = reader.line_num
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(CSV_HEADER):
                raise MalformedRow(line, f"expected {len(CSV_HEADER)} fields, got {len(row)}")
            platform, machine, app, idx_s, t_s = (f.strip() for f in row)
            if not (platform and machine and app):
                raise MalformedRow(line, "empty identifier")
            try:
                idx = int(idx_s)
            except ValueError:
                raise MalformedRow(line, f"bad run_index {idx_s!r}") from None
            if idx < 0:
                raise MalformedRow(line, f"negative run_index {idx}")
            try:
                t = float(t_s)
            except ValueError:
                raise MalformedRow(line, f"bad inference_ms {t_s!r}") from None
            if not (math.isfinite(t) and t > 0.0):
                raise NonPositiveTime(line, t)
            key = (platform, machine, app)
            cell = runs.setdefault(key, {})
            if idx in cell:
                raise DuplicateRunIndex(key, idx)
            cell[idx] = t
    except csv.Error as exc:
        raise MalformedRow(line, str(exc)) from None

    if not runs:
        raise EmptyFile("trace file has a header but no rows")
    samples = []
    for key, cell in runs.items():
        times = tuple(cell[i] for i in sorted(cell))
        samples.append(TraceSample(*key, times))
    return TraceSet(tuple(samples))


def serialize_trace_csv(traces: TraceSet | Iterable[TraceSample]) -> str:
    """Inverse of :func:`parse_trace_csv`; run_index is rewritten 0..n-1, LF line endings."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for s in traces:
        for i, t in enumerate(s.times_ms):
            w.writerow([s.platform, s.machine_type, s.app_type, i, repr(t)])
    return out.getvalue()


def summarize(sample: TraceSample | Iterable[float]) -> SummaryStats:
    """Arithmetic mean and sample standard deviation (denominator n - 1)."""
    x = sample.as_array() if isinstance(sample, TraceSample) else np.asarray(list(sample), dtype=np.float64)
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        # exact for constant samples; summation could drift by an ulp
        return SummaryStats(lo, 0.0, lo, hi, int(x.size))
    mean = float(np.mean(x))
    mean = min(max(mean, lo), hi)
    std = float(np.std(x, ddof=1))
    return SummaryStats(mean, std, lo, hi, int(x.size))


def summarize_all(traces: TraceSet) -> Mapping[Key, SummaryStats]:
    return {s.key: summarize(s) for s in traces}
