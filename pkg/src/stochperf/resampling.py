"""Jackknife (pseudo-harmonic values) and percentile bootstrap CIs for rate metrics.

Bootstrap resample ``i`` draws its indices from
``PCG64(SeedSequence([seed, i]))``, so the result is identical whatever the
number of workers and the order in which resamples are evaluated.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import _kernels
from .errors import InputError, NonPositiveValue, SampleTooSmall

DEFAULT_K = 100
DEFAULT_ALPHA = 0.05
DEFAULT_CONFIDENCE = 0.95
SE_CONVENTION = "jackknife: sqrt((p-1)/p * sum((y_i - y_bar)^2))"


def _positive(values, min_len: int) -> np.ndarray:
    x = np.asarray(values, dtype=np.float64).ravel()
    if x.size < min_len:
        raise SampleTooSmall(f"need at least {min_len} observations, got {x.size}")
    if not np.all(np.isfinite(x) & (x > 0.0)):
        raise NonPositiveValue("values must be positive and finite")
    return x


def _mean(v: np.ndarray) -> float:
    if np.all(v == v[0]):
        return float(v[0])
    return float(np.mean(v))


@dataclass(frozen=True)
class JackknifeTrace:
    pseudo_values: tuple[float, ...]
    mean_pseudo: float
    std_error: float
    t_critical: float
    ci_low: float
    ci_high: float
    confidence: float = DEFAULT_CONFIDENCE

    def to_dict(self) -> dict:
        return {
            "method": "jackknife",
            "pseudo_values": list(self.pseudo_values),
            "mean_pseudo": self.mean_pseudo,
            "std_error": self.std_error,
            "se_convention": SE_CONVENTION,
            "t_critical": self.t_critical,
            "confidence": self.confidence,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
        }


@dataclass(frozen=True)
class BootstrapTrace:
    k: int
    alpha: float
    resample_means: tuple[float, ...]
    ci_low: float
    ci_high: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "method": "bootstrap",
            "k": self.k,
            "alpha": self.alpha,
            "seed": self.seed,
            "resample_means": list(self.resample_means),
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
        }


def jackknife_pseudo_values(values) -> np.ndarray:
    """Leave-one-out harmonic means y_i = (p-1) / sum_{j != i} 1/x_j, in input order."""
    x = _positive(values, 2)
    if np.all(x == x[0]):
        return np.full(x.size, x[0])
    return _kernels.loo_harmonic(x)


def jackknife_ci(values, confidence: float = DEFAULT_CONFIDENCE) -> JackknifeTrace:
    """Mean of the pseudo-harmonic values +/- t_{p-1} * jackknife standard error."""
    if not 0.0 < confidence < 1.0:
        raise InputError("confidence must lie in (0, 1)")
    x = _positive(values, 3)
    p = x.size
    y = jackknife_pseudo_values(x)
    y_bar = _mean(y)
    se = math.sqrt((p - 1) / p * float(np.sum((y - y_bar) ** 2)))
    t_crit = float(special.stdtrit(p - 1, 0.5 * (1.0 + confidence)))
    half = t_crit * se
    return JackknifeTrace(tuple(float(v) for v in y), y_bar, se, t_crit, y_bar - half, y_bar + half, confidence)


def resample_indices(seed: int, index: int, p: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))
    return rng.integers(0, p, size=p, dtype=np.int64)


def _resample_block(x: np.ndarray, seed: int, start: int, stop: int) -> np.ndarray:
    idx = np.stack([resample_indices(seed, i, x.size) for i in range(start, stop)])
    return _kernels.resample_harmonic(x, idx)


def order_statistic(sorted_values: np.ndarray, position: float) -> float:
    """Value at a fractional 1-based position, interpolating linearly; clamped to [1, k]."""
    k = sorted_values.size
    pos = min(max(position, 1.0), float(k))
    lo = int(math.floor(pos))
    frac = pos - lo
    if frac == 0.0 or lo >= k:
        return float(sorted_values[lo - 1])
    a, b = float(sorted_values[lo - 1]), float(sorted_values[lo])
    return a + frac * (b - a)


def bootstrap_ci(
    values,
    k: int = DEFAULT_K,
    alpha: float = DEFAULT_ALPHA,
    seed: int = 0,
    workers: int = 1,
) -> BootstrapTrace:
    """Percentile bootstrap CI of the harmonic mean.

    ``k`` resamples of size p with replacement; their harmonic means are
    sorted and the bounds are read at 1-based positions ``alpha/2 * k`` and
    ``(1 - alpha/2) * k``.
    """
    x = _positive(values, 2)
    if k < 2:
        raise InputError("k must be at least 2")
    if not 0.0 < alpha < 1.0:
        raise InputError("alpha must lie in (0, 1)")
    if seed < 0:
        raise InputError("seed must be non-negative")
    if np.all(x == x[0]):
        means = np.full(k, x[0])
    elif workers <= 1:
        means = _resample_block(x, seed, 0, k)
    else:
        bounds = np.linspace(0, k, min(workers, k) + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(lambda ab: _resample_block(x, seed, ab[0], ab[1]), zip(bounds[:-1], bounds[1:]))
            means = np.concatenate(list(parts))
    means = np.sort(means)
    lo = order_statistic(means, alpha / 2.0 * k)
    hi = order_statistic(means, (1.0 - alpha / 2.0) * k)
    return BootstrapTrace(k, alpha, tuple(float(v) for v in means), lo, hi, seed)
