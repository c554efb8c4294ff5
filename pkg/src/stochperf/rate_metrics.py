"""MIPS rate metric, instruction-count calibration and normalization helpers.

Times are milliseconds everywhere; the conversion to seconds happens only
inside :func:`mips` and :func:`calibrate_instructions`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import DegenerateRange, InputError, NonPositiveValue


@dataclass(frozen=True)
class InstructionCount:
    app_type: str
    n_instructions: float
    calibration_machine: str
    calibration_mips: float
    calibration_time_s: float
    platform: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "app_type": self.app_type,
            "platform": self.platform,
            "n_instructions": self.n_instructions,
            "calibration_machine": self.calibration_machine,
            "calibration_mips": self.calibration_mips,
            "calibration_time_s": self.calibration_time_s,
        }


@dataclass(frozen=True)
class RateEstimate:
    mips: float
    ci_low: float
    ci_high: float
    method: str  # "jackknife" | "bootstrap" | "point"
    confidence: float

    def __post_init__(self):
        if self.method not in ("jackknife", "bootstrap", "point"):
            raise InputError(f"unknown method {self.method!r}")
        if self.ci_low > self.ci_high:
            raise InputError("ci_low must not exceed ci_high")
        if self.method == "point" and not (self.ci_low == self.ci_high == self.mips):
            raise InputError("a point estimate has a zero-width interval at the estimate")

    @classmethod
    def point(cls, value: float) -> "RateEstimate":
        return cls(value, value, value, "point", 1.0)

    def to_dict(self) -> dict:
        return {
            "mips": self.mips,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "method": self.method,
            "confidence": self.confidence,
        }


def _positive_array(values: Iterable[float]) -> np.ndarray:
    x = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=np.float64).ravel()
    if x.size == 0:
        raise InputError("at least one value is required")
    if not np.all(np.isfinite(x) & (x > 0.0)):
        raise NonPositiveValue("values must be positive and finite")
    return x


def harmonic_mean(values: Iterable[float]) -> float:
    x = _positive_array(values)
    if np.all(x == x[0]):
        return float(x[0])
    return float(x.size / np.sum(1.0 / x))


def calibrate_instructions(
    app: str,
    reference_times_ms: Iterable[float],
    reference_mips: float,
    reference_machine: str = "reference",
    platform: Optional[str] = None,
) -> InstructionCount:
    """Instruction count of ``app`` from its run times on a machine of known MIPS.

    n = reference_mips * 1e6 * (harmonic mean of the times, in seconds)
    """
    if not (math.isfinite(reference_mips) and reference_mips > 0.0):
        raise NonPositiveValue(f"reference_mips must be positive, got {reference_mips!r}")
    t_s = harmonic_mean(reference_times_ms) / 1000.0
    return InstructionCount(app, reference_mips * 1e6 * t_s, reference_machine, float(reference_mips), t_s, platform)


def mips(n: InstructionCount | float, time_ms: float) -> float:
    count = n.n_instructions if isinstance(n, InstructionCount) else float(n)
    if not (math.isfinite(time_ms) and time_ms > 0.0):
        raise NonPositiveValue(f"time_ms must be positive, got {time_ms!r}")
    if not (math.isfinite(count) and count > 0.0):
        raise NonPositiveValue(f"instruction count must be positive, got {count!r}")
    return count / ((time_ms / 1000.0) * 1e6)


def mips_series(n: InstructionCount | float, times_ms: Iterable[float]) -> np.ndarray:
    """One MIPS value per observed time; this is what the resampling CIs consume."""
    count = n.n_instructions if isinstance(n, InstructionCount) else float(n)
    t = _positive_array(times_ms)
    return count / ((t / 1000.0) * 1e6)


def point_mips(n: InstructionCount | float, times_ms: Iterable[float]) -> float:
    """MIPS at the harmonic-mean time, the same summary calibration uses.

    On the calibration machine this returns the reference MIPS exactly.
    """
    return mips(n, harmonic_mean(times_ms))


def minmax_normalize(values: Iterable[float]) -> np.ndarray:
    x = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=np.float64).ravel()
    if x.size < 2:
        raise InputError("need at least two values")
    lo, hi = float(x.min()), float(x.max())
    if hi == lo:
        raise DegenerateRange("max equals min")
    out = (x - lo) / (hi - lo)
    out[x == lo] = 0.0
    out[x == hi] = 1.0
    return out
