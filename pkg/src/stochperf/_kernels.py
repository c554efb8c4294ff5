"""Hot numeric kernels.

Every kernel exists twice: an explicit-loop version compiled with numba
``@njit`` and a vectorized numpy version.  The public names at the bottom of
the module are bound once, at import time:

* ``STOCHPERF_DISABLE_NUMBA=1`` (or ``true``/``yes``) forces the numpy path;
* if numba cannot be imported the numpy path is used silently.

Both variants are kept importable (``*_numba`` / ``*_numpy``) so tests can
check they agree and ``benchmarks/bench_kernels.py`` can time them.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


def _env_disabled() -> bool:
    return os.environ.get("STOCHPERF_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}


USE_NUMBA = HAVE_NUMBA and not _env_disabled()
BACKEND = "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------- K-S gap

def ks_gap_numpy(cdf_sorted):
    """Largest vertical distance between the EDF and CDF values at the sorted sample."""
    f = np.asarray(cdf_sorted, dtype=np.float64)
    n = f.size
    i = np.arange(1, n + 1, dtype=np.float64)
    upper = np.abs(i / n - f)
    lower = np.abs((i - 1.0) / n - f)
    return float(max(upper.max(), lower.max()))


@njit(cache=True)
def _ks_gap_loop(f):
    n = f.shape[0]
    d = 0.0
    for k in range(n):
        hi = abs((k + 1.0) / n - f[k])
        lo = abs(k / n - f[k])
        if hi > d:
            d = hi
        if lo > d:
            d = lo
    return d


def ks_gap_numba(cdf_sorted):
    return float(_ks_gap_loop(np.ascontiguousarray(cdf_sorted, dtype=np.float64)))


# ------------------------------------------------- leave-one-out harmonic

def loo_harmonic_numpy(x):
    """y_i = (p-1) / sum_{j != i} 1/x_j."""
    x = np.asarray(x, dtype=np.float64)
    recip = 1.0 / x
    # prefix + suffix sums instead of total - recip: no cancellation when one
    # reciprocal dominates
    before = np.concatenate(([0.0], np.cumsum(recip)[:-1]))
    after = np.concatenate((np.cumsum(recip[::-1])[::-1][1:], [0.0]))
    return (x.size - 1) / (before + after)


@njit(cache=True)
def _loo_harmonic_loop(x):
    p = x.shape[0]
    after = np.zeros(p)
    acc = 0.0
    for j in range(p - 1, 0, -1):
        acc += 1.0 / x[j]
        after[j - 1] = acc
    out = np.empty(p)
    before = 0.0
    for i in range(p):
        out[i] = (p - 1) / (before + after[i])
        before += 1.0 / x[i]
    return out


def loo_harmonic_numba(x):
    return _loo_harmonic_loop(np.ascontiguousarray(x, dtype=np.float64))


# ------------------------------------------- resampled harmonic means

def resample_harmonic_numpy(x, idx):
    """Harmonic mean of ``x[idx[r]]`` for every row ``r`` of the index matrix."""
    x = np.asarray(x, dtype=np.float64)
    recip = 1.0 / x
    return idx.shape[1] / recip[idx].sum(axis=1)


@njit(cache=True)
def _resample_harmonic_loop(x, idx):
    k, p = idx.shape
    recip = 1.0 / x
    out = np.empty(k)
    for r in range(k):
        s = 0.0
        for c in range(p):
            s += recip[idx[r, c]]
        out[r] = p / s
    return out


def resample_harmonic_numba(x, idx):
    return _resample_harmonic_loop(
        np.ascontiguousarray(x, dtype=np.float64), np.ascontiguousarray(idx, dtype=np.int64)
    )


# ------------------------------------- Student's t location/scale EM

# Fixed-dof maximum likelihood for location and scale by the standard
# iteratively reweighted (EM) scheme.  Returns
# (location, scale, sum(log1p(z**2/dof)), iterations, converged).

def t_em_numpy(x, dof, loc, scale, tol=1e-10, max_iter=2000):
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        z2 = ((x - loc) / scale) ** 2
        w = (dof + 1.0) / (dof + z2)
        new_loc = float(np.dot(w, x) / w.sum())
        new_scale = math.sqrt(float(np.dot(w, (x - new_loc) ** 2)) / n)
        if new_scale <= 0.0 or not math.isfinite(new_scale):
            return new_loc, new_scale, math.nan, it, False
        dl = abs(new_loc - loc)
        ds = abs(new_scale - scale)
        loc, scale = new_loc, new_scale
        if dl <= tol * scale and ds <= tol * scale:
            converged = True
            break
    z2 = ((x - loc) / scale) ** 2
    return loc, scale, float(np.log1p(z2 / dof).sum()), it, converged


@njit(cache=True)
def _t_em_loop(x, dof, loc, scale, tol, max_iter):
    n = x.shape[0]
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        sw = 0.0
        swx = 0.0
        for i in range(n):
            z = (x[i] - loc) / scale
            w = (dof + 1.0) / (dof + z * z)
            sw += w
            swx += w * x[i]
        new_loc = swx / sw
        ss = 0.0
        for i in range(n):
            z = (x[i] - loc) / scale
            w = (dof + 1.0) / (dof + z * z)
            d = x[i] - new_loc
            ss += w * d * d
        new_scale = math.sqrt(ss / n)
        if not (new_scale > 0.0) or not math.isfinite(new_scale):
            return new_loc, new_scale, math.nan, it, False
        dl = abs(new_loc - loc)
        ds = abs(new_scale - scale)
        loc = new_loc
        scale = new_scale
        if dl <= tol * scale and ds <= tol * scale:
            converged = True
            break
    acc = 0.0
    for i in range(n):
        z = (x[i] - loc) / scale
        acc += math.log1p(z * z / dof)
    return loc, scale, acc, it, converged


def t_em_numba(x, dof, loc, scale, tol=1e-10, max_iter=2000):
    loc, scale, acc, it, ok = _t_em_loop(
        np.ascontiguousarray(x, dtype=np.float64), float(dof), float(loc), float(scale), float(tol), int(max_iter)
    )
    return float(loc), float(scale), float(acc), int(it), bool(ok)


if USE_NUMBA:
    ks_gap = ks_gap_numba
    loo_harmonic = loo_harmonic_numba
    resample_harmonic = resample_harmonic_numba
    t_em = t_em_numba
else:
    ks_gap = ks_gap_numpy
    loo_harmonic = loo_harmonic_numpy
    resample_harmonic = resample_harmonic_numpy
    t_em = t_em_numpy
