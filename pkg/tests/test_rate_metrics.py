import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from stochperf.errors import DegenerateRange, NonPositiveValue
from stochperf.rate_metrics import (
    InstructionCount,
    RateEstimate,
    calibrate_instructions,
    harmonic_mean,
    minmax_normalize,
    mips,
    point_mips,
)

positive = st.floats(1e-6, 1e9, allow_nan=False, allow_infinity=False)


def test_harmonic_mean_examples():
    assert harmonic_mean([3.7, 3.7, 3.7]) == 3.7
    assert math.isclose(harmonic_mean([1.0, 2.0, 4.0]), 12 / 7, rel_tol=1e-15)
    with pytest.raises(NonPositiveValue):
        harmonic_mean([1.0, 0.0])


def test_calibration_examples():
    assert calibrate_instructions("a", [1000.0], 2000.0).n_instructions == 2e9
    assert calibrate_instructions("a", [500.0, 500.0], 1000.0).n_instructions == 5e8
    assert mips(2e9, 1000.0) == 2000.0
    assert mips(1e6, 1000.0) == 1.0


def test_rate_estimate_validation():
    assert RateEstimate.point(5.0).ci_low == 5.0
    with pytest.raises(ValueError):
        RateEstimate(5.0, 6.0, 4.0, "jackknife", 0.95)
    with pytest.raises(ValueError):
        RateEstimate(5.0, 4.0, 6.0, "point", 0.95)


def test_point_mips_uses_harmonic_mean_time():
    n = InstructionCount("a", 3e9, "ref", 1000.0, 3.0)
    t = [100.0, 110.0, 95.0, 130.0]
    assert math.isclose(point_mips(n, t), 3e9 / (stats.hmean(t) / 1000 * 1e6), rel_tol=1e-14)


@given(st.lists(st.floats(1e-2, 1e5), min_size=1, max_size=40), st.floats(1e-2, 1e5))
def test_reference_machine_recovers_reference_mips(t, m):
    n = calibrate_instructions("a", t, m)
    assert abs(point_mips(n, t) - m) <= 1e-12 * m


def test_minmax_examples():
    np.testing.assert_array_equal(minmax_normalize([10.0, 20.0, 30.0]), [0.0, 0.5, 1.0])
    with pytest.raises(DegenerateRange):
        minmax_normalize([5.0, 5.0])


@given(st.lists(positive, min_size=1, max_size=50))
def test_harmonic_not_above_arithmetic(xs):
    h, a = harmonic_mean(xs), float(np.mean(xs))
    assert h <= a * (1 + 1e-12)
    if len(set(xs)) == 1:
        assert h == xs[0]


@given(st.lists(positive, min_size=2, max_size=50))
def test_harmonic_matches_scipy(xs):
    assert math.isclose(harmonic_mean(xs), stats.hmean(xs), rel_tol=1e-12)


@given(st.floats(1e-3, 1e7), st.floats(1e-3, 1e6))
def test_mips_round_trip(t, m):
    n = calibrate_instructions("a", [t], m)
    assert abs(mips(n, t) - m) <= 1e-12 * m


@given(st.floats(1.0, 1e12), st.floats(1e-3, 1e6), st.floats(1e-3, 1e3))
def test_mips_scale_consistent(n, t, c):
    assert math.isclose(mips(n, c * t), mips(n, t) / c, rel_tol=1e-14)


@given(st.floats(1.0, 1e12), st.floats(1e-3, 1e6))
def test_mips_doubling_time_halves_exactly(n, t):
    assert mips(n, 2.0 * t) == mips(n, t) / 2.0


@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=50))
def test_minmax_monotone(xs):
    if max(xs) == min(xs):
        return
    y = minmax_normalize(xs)
    assert y.min() == 0.0 and y.max() == 1.0
    order = np.argsort(xs, kind="stable")
    assert np.all(np.diff(y[order]) >= 0.0)
