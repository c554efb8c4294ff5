"""Candidate execution-time distributions: CDF, quantile, sampling and MLE fits.

Four families are supported, each a frozen dataclass:

========================  ==========================================
``Normal``                location, scale
``LogNormal``             log_location, log_scale
``Exponential``           location (shift), scale
``StudentT``              dof, location, scale (location-scale t)
========================  ==========================================
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass
from typing import Union

import numpy as np
from scipy import optimize, special

from . import _kernels
from .errors import DegenerateSample, FitDiverged, InputError, NonPositiveValue, OutOfDomain, SampleTooSmall

_SQRT2 = math.sqrt(2.0)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

DOF_MIN = 0.5
DOF_MAX = 1e6


class Family(str, enum.Enum):
    NORMAL = "normal"
    LOG_NORMAL = "log_normal"
    EXPONENTIAL = "exponential"
    STUDENT_T = "student_t"

    @property
    def n_params(self) -> int:
        return 3 if self is Family.STUDENT_T else 2


def _positive(name, value):
    value = float(value)
    if not (math.isfinite(value) and value > 0.0):
        raise InputError(f"{name} must be positive and finite, got {value!r}")
    return value


def _finite(name, value):
    value = float(value)
    if not math.isfinite(value):
        raise InputError(f"{name} must be finite, got {value!r}")
    return value


def _check_prob(p):
    arr = np.asarray(p, dtype=np.float64)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise OutOfDomain("probability must lie strictly inside (0, 1)")
    return arr


def _std_normal_cdf(z):
    return 0.5 * special.erfc(-np.asarray(z, dtype=np.float64) / _SQRT2)


def _scalar_or_array(x, out):
    return float(out) if np.ndim(x) == 0 else out


@dataclass(frozen=True)
class Normal:
    location: float
    scale: float

    family = Family.NORMAL

    def __post_init__(self):
        object.__setattr__(self, "location", _finite("location", self.location))
        object.__setattr__(self, "scale", _positive("scale", self.scale))

    def cdf(self, x):
        return _scalar_or_array(x, _std_normal_cdf((np.asarray(x, dtype=np.float64) - self.location) / self.scale))

    def quantile(self, p):
        return _scalar_or_array(p, self.location + self.scale * special.ndtri(_check_prob(p)))

    def logpdf(self, x):
        z = (np.asarray(x, dtype=np.float64) - self.location) / self.scale
        return -0.5 * z * z - math.log(self.scale) - _HALF_LOG_2PI

    def mean(self) -> float:
        return self.location


@dataclass(frozen=True)
class LogNormal:
    log_location: float
    log_scale: float

    family = Family.LOG_NORMAL

    def __post_init__(self):
        object.__setattr__(self, "log_location", _finite("log_location", self.log_location))
        object.__setattr__(self, "log_scale", _positive("log_scale", self.log_scale))

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = (np.log(np.where(x > 0.0, x, 1.0)) - self.log_location) / self.log_scale
        return _scalar_or_array(x, np.where(x > 0.0, _std_normal_cdf(z), 0.0))

    def quantile(self, p):
        return _scalar_or_array(p, np.exp(self.log_location + self.log_scale * special.ndtri(_check_prob(p))))

    def logpdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            lx = np.log(np.where(x > 0.0, x, 1.0))
        z = (lx - self.log_location) / self.log_scale
        return np.where(x > 0.0, -0.5 * z * z - math.log(self.log_scale) - _HALF_LOG_2PI - lx, -np.inf)

    def mean(self) -> float:
        return math.exp(self.log_location + 0.5 * self.log_scale**2)


@dataclass(frozen=True)
class Exponential:
    location: float
    scale: float

    family = Family.EXPONENTIAL

    def __post_init__(self):
        object.__setattr__(self, "location", _finite("location", self.location))
        object.__setattr__(self, "scale", _positive("scale", self.scale))

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        z = (x - self.location) / self.scale
        return _scalar_or_array(x, np.where(z > 0.0, -np.expm1(-np.maximum(z, 0.0)), 0.0))

    def quantile(self, p):
        return _scalar_or_array(p, self.location - self.scale * np.log1p(-_check_prob(p)))

    def logpdf(self, x):
        z = (np.asarray(x, dtype=np.float64) - self.location) / self.scale
        return np.where(z >= 0.0, -z - math.log(self.scale), -np.inf)

    def mean(self) -> float:
        return self.location + self.scale


@dataclass(frozen=True)
class StudentT:
    dof: float
    location: float
    scale: float

    family = Family.STUDENT_T

    def __post_init__(self):
        object.__setattr__(self, "dof", _positive("dof", self.dof))
        object.__setattr__(self, "location", _finite("location", self.location))
        object.__setattr__(self, "scale", _positive("scale", self.scale))

    def cdf(self, x):
        t = (np.asarray(x, dtype=np.float64) - self.location) / self.scale
        v = self.dof
        t2 = t * t
        # central region: I_y(1/2, v/2) with y = t^2/(v+t^2) keeps precision near 0;
        # tails: I_x(v/2, 1/2) with x = v/(v+t^2) keeps precision far out.
        with np.errstate(over="ignore", invalid="ignore"):
            central = 0.5 + np.sign(t) * 0.5 * special.betainc(0.5, 0.5 * v, t2 / (v + t2))
            tail = 0.5 * special.betainc(0.5 * v, 0.5, v / (v + t2))
        tails = np.where(t > 0.0, 1.0 - tail, tail)
        out = np.where(t2 < v, central, tails)
        return _scalar_or_array(x, np.clip(out, 0.0, 1.0))

    def quantile(self, p):
        return _scalar_or_array(p, self.location + self.scale * special.stdtrit(self.dof, _check_prob(p)))

    def logpdf(self, x):
        v = self.dof
        z = (np.asarray(x, dtype=np.float64) - self.location) / self.scale
        const = math.lgamma(0.5 * (v + 1.0)) - math.lgamma(0.5 * v) - 0.5 * math.log(v * math.pi) - math.log(self.scale)
        return const - 0.5 * (v + 1.0) * np.log1p(z * z / v)

    def mean(self) -> float:
        return self.location if self.dof > 1.0 else math.nan


DistributionSpec = Union[Normal, LogNormal, Exponential, StudentT]

_BY_FAMILY = {
    Family.NORMAL: Normal,
    Family.LOG_NORMAL: LogNormal,
    Family.EXPONENTIAL: Exponential,
    Family.STUDENT_T: StudentT,
}


def cdf(spec: DistributionSpec, x):
    return spec.cdf(x)


def quantile(spec: DistributionSpec, p):
    return spec.quantile(p)


def uniform_open(seed: int, n: int) -> np.ndarray:
    """``n`` uniforms strictly inside (0, 1), reproducible from ``seed``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    k = rng.integers(0, 2**53, size=n, dtype=np.int64)
    return (k.astype(np.float64) + 0.5) * 2.0**-53


def sample(spec: DistributionSpec, seed: int, n: int) -> np.ndarray:
    """Inverse-transform draws; identical output for identical (spec, seed, n)."""
    if n < 1:
        raise InputError("n must be at least 1")
    return np.asarray(spec.quantile(uniform_open(seed, n)), dtype=np.float64)


def log_likelihood(spec: DistributionSpec, values) -> float:
    return float(np.sum(spec.logpdf(values)))


def spec_to_dict(spec: DistributionSpec) -> dict:
    return {"family": spec.family.value, **asdict(spec)}


def spec_from_dict(d: dict) -> DistributionSpec:
    d = dict(d)
    try:
        cls = _BY_FAMILY[Family(d.pop("family"))]
    except (KeyError, ValueError) as exc:
        raise InputError(f"unknown distribution family in {d!r}") from exc
    return cls(**d)


# ------------------------------------------------------------------ fitting

def _prepare(values, family: Family) -> np.ndarray:
    x = np.asarray(values, dtype=np.float64).ravel()
    if x.size < 3:
        raise SampleTooSmall(f"need at least 3 observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise InputError("sample contains non-finite values")
    if family in (Family.LOG_NORMAL, Family.EXPONENTIAL) and np.any(x <= 0.0):
        raise NonPositiveValue(f"{family.value} fit needs strictly positive values")
    if np.all(x == x[0]):
        raise DegenerateSample(f"{family.value} fit of a constant sample")
    return x


def _t_profile(x: np.ndarray, dof: float, loc0: float, scale0: float, max_iter=2000):
    loc, scale, acc, _, ok = _kernels.t_em(x, dof, loc0, scale0, 1e-10, max_iter)
    n = x.size
    if not math.isfinite(acc):
        return loc, scale, -math.inf, False
    ll = n * (
        math.lgamma(0.5 * (dof + 1.0)) - math.lgamma(0.5 * dof) - 0.5 * math.log(dof * math.pi) - math.log(scale)
    ) - 0.5 * (dof + 1.0) * acc
    return loc, scale, ll, ok


def _fit_student_t(x: np.ndarray) -> StudentT:
    loc0 = float(np.median(x))
    mad = float(np.median(np.abs(x - loc0))) * 1.482602218505602
    scale0 = mad if mad > 0.0 else float(np.std(x))

    def neg_ll(log_dof):
        return -_t_profile(x, math.exp(log_dof), loc0, scale0)[2]

    res = optimize.minimize_scalar(
        neg_ll, bounds=(math.log(DOF_MIN), math.log(DOF_MAX)), method="bounded", options={"xatol": 1e-6}
    )
    if not res.success or not math.isfinite(res.fun):
        raise FitDiverged(f"student_t dof search failed: {res.message}")
    dof = math.exp(float(res.x))
    loc, scale, ll, ok = _t_profile(x, dof, loc0, scale0)
    if not ok:
        loc, scale, ll, ok = _t_profile(x, dof, loc, scale, max_iter=50_000)
    if not ok or not (math.isfinite(loc) and math.isfinite(scale) and scale > 0.0):
        raise FitDiverged(f"student_t location/scale did not converge at dof={dof:g}")
    return StudentT(dof, loc, scale)


def fit_mle(family: Family | str, values) -> DistributionSpec:
    """Fit one family to a sample.

    Normal and LogNormal use the sample mean and the (n - 1) standard
    deviation (of the logs for LogNormal).  Exponential takes the sample
    minimum as its shift and ``mean - min`` as scale.  Student's t maximises
    the likelihood over dof on a log scale, profiling location and scale at
    each candidate dof.
    """
    family = Family(family)
    x = _prepare(values, family)
    if family is Family.NORMAL:
        return Normal(float(np.mean(x)), float(np.std(x, ddof=1)))
    if family is Family.LOG_NORMAL:
        lx = np.log(x)
        s = float(np.std(lx, ddof=1))
        if s == 0.0:
            raise DegenerateSample("log_normal fit: zero log-variance")
        return LogNormal(float(np.mean(lx)), s)
    if family is Family.EXPONENTIAL:
        lo = float(x.min())
        return Exponential(lo, float(np.mean(x)) - lo)
    return _fit_student_t(x)
