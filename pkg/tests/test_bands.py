import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distband.bands import band_at, bands_cross, build_band

from oracles import band_bounds


def test_band_boundary_conventions():
    band = build_band(7, 0.05)
    assert band_at(band, 0)[0] == 0.0
    assert band_at(band, 7)[1] == 1.0


@pytest.mark.parametrize("n", [1, 4, 10])
@pytest.mark.parametrize("a", [0.01, 0.05, 0.2])
def test_single_observation_closed_forms(n, a):
    band = build_band(n, a)
    # count n: lower = a^(1/n); count 0: upper = 1 - a^(1/n)
    assert band.lower_at_count[n] == pytest.approx(a ** (1 / n), abs=1e-12)
    assert band.upper_at_count[0] == pytest.approx(1 - a ** (1 / n), abs=1e-12)


@pytest.mark.parametrize("n", [3, 20, 77])
def test_band_matches_scipy(n):
    band = build_band(n, 0.037)
    for k in range(n + 1):
        lo, hi = band_bounds(0.037, k, n)
        assert band_at(band, k) == pytest.approx((float(lo), float(hi)), abs=1e-12)


def test_band_monotone_in_count():
    band = build_band(30, 0.05)
    assert np.all(np.diff(band.lower_at_count) > 0)
    assert np.all(np.diff(band.upper_at_count) > 0)
    assert np.all(band.lower_at_count < band.upper_at_count)


@pytest.mark.parametrize("n, a", [(0, 0.1), (5, 0.0), (5, 0.5), (5, 0.7), (2.5, 0.1)])
def test_build_band_validation(n, a):
    with pytest.raises(ValueError):
        build_band(n, a)


def test_band_at_range():
    with pytest.raises(ValueError):
        band_at(build_band(3, 0.1), 4)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 60), a1=st.floats(0.001, 0.49), a2=st.floats(0.001, 0.49))
def test_bands_shrink_as_level_grows(n, a1, a2):
    small, large = sorted((a1, a2))
    wide, narrow = build_band(n, small), build_band(n, large)
    assert np.all(narrow.lower_at_count >= wide.lower_at_count - 1e-15)
    assert np.all(narrow.upper_at_count <= wide.upper_at_count + 1e-15)


def test_bands_cross_vectorised():
    bx, by = build_band(5, 0.05), build_band(5, 0.05)
    out = bands_cross(bx, by, np.array([5, 3, 0]), np.array([0, 3, 5]))
    assert out.tolist() == [True, False, True]


def test_pointwise_coverage_analytic():
    # the interval for the k-th order statistic is [B^a_{k,n}, B^{1-a}_{k,n}],
    # which has probability exactly 1 - 2a under Beta(k, n + 1 - k)
    from scipy import stats

    n, a = 20, 0.05
    band = build_band(n, a)
    for k in range(1, n + 1):
        lo, hi = band.lower_at_count[k], band.upper_at_count[k - 1]
        cover = stats.beta.cdf(hi, k, n + 1 - k) - stats.beta.cdf(lo, k, n + 1 - k)
        assert cover == pytest.approx(1 - 2 * a, abs=1e-10)
