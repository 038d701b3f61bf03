import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from distband.specfun import (
    BetaParams,
    beta_quantile,
    beta_quantile_params,
    binomial_upper_tail,
    log_gamma,
    reg_inc_beta,
)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 10, 20, 50, 100, 170])
def test_log_gamma_factorials(n):
    want = math.log(math.factorial(n - 1))
    got = log_gamma(n)
    assert abs(got - want) <= 1e-12 * max(1.0, abs(want))


@pytest.mark.parametrize("x, want", [
    (0.5, 0.5 * math.log(math.pi)),
    (1.5, math.log(math.sqrt(math.pi) / 2)),
    (1e6, math.lgamma(1e6)),
])
def test_log_gamma_half_integers_and_large(x, want):
    assert log_gamma(x) == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.nan])
def test_log_gamma_domain(bad):
    with pytest.raises(ValueError):
        log_gamma(bad)


@pytest.mark.parametrize("x", [0.0, 0.01, 0.2, 0.5, 0.77, 0.999, 1.0])
@pytest.mark.parametrize("b", [1, 2, 5, 17])
def test_reg_inc_beta_a_equals_one(x, b):
    assert reg_inc_beta(x, 1, b) == pytest.approx(1 - (1 - x) ** b, abs=1e-12)


@pytest.mark.parametrize("x", [0.0, 0.01, 0.2, 0.5, 0.77, 0.999, 1.0])
@pytest.mark.parametrize("n", [1, 2, 6, 30])
def test_reg_inc_beta_b_equals_one(x, n):
    assert reg_inc_beta(x, n, 1) == pytest.approx(x**n, abs=1e-12)


@pytest.mark.parametrize("x", [0.0, 0.1, 0.25, 0.5, 0.9, 1.0])
def test_reg_inc_beta_two_two(x):
    assert reg_inc_beta(x, 2, 2) == pytest.approx(3 * x**2 - 2 * x**3, abs=1e-12)


@pytest.mark.parametrize("n", range(1, 13))
def test_binomial_identity(n):
    # I_x(k, n - k + 1) = P(Bin(n, x) >= k)
    for k in range(1, n + 1):
        for x in (0.03, 0.3, 0.5, 0.71, 0.96):
            assert abs(reg_inc_beta(x, k, n - k + 1) - binomial_upper_tail(k, n, x)) <= 1e-10


def test_reg_inc_beta_against_scipy_moderate_parameters():
    rng = np.random.default_rng(3)
    a = rng.integers(1, 150, 400).astype(float)
    b = rng.integers(1, 150, 400).astype(float)
    x = rng.uniform(size=400)
    assert np.max(np.abs(reg_inc_beta(x, a, b) - special.betainc(a, b, x))) < 1e-12


@pytest.mark.parametrize("x, a, b", [(-0.1, 1, 1), (1.1, 2, 2), (0.5, 0, 1), (0.5, 1, -2)])
def test_reg_inc_beta_domain(x, a, b):
    with pytest.raises(ValueError):
        reg_inc_beta(x, a, b)


def test_reg_inc_beta_returns_float_for_scalars():
    assert isinstance(reg_inc_beta(0.3, 2, 5), float)
    assert reg_inc_beta(np.array([0.3, 0.4]), 2, 5).shape == (2,)


@pytest.mark.parametrize("n", [1, 2, 5, 20, 100, 1000])
def test_quantile_round_trip(n):
    ks = np.arange(1, n + 1)
    for p in (1e-6, 0.01, 0.05, 0.3, 0.5, 0.9, 0.999):
        q = beta_quantile(np.full(ks.size, p), ks, n)
        back = reg_inc_beta(q, ks, n + 1 - ks)
        assert np.max(np.abs(back - p)) <= 1e-10


def test_quantile_closed_forms():
    # Beta(1, 2): F(q) = 1 - (1 - q)^2
    assert beta_quantile(0.1, 1, 2) == pytest.approx(1 - math.sqrt(0.9), abs=1e-13)
    # Beta(n, 1): F(q) = q^n
    assert beta_quantile(0.5, 4, 4) == pytest.approx(0.5**0.25, abs=1e-13)


def test_quantile_boundary_conventions():
    assert beta_quantile(0.3, 0, 7) == 0.0
    assert beta_quantile(0.3, 8, 7) == 1.0


@pytest.mark.parametrize("p, k, n", [(0.0, 1, 3), (1.0, 1, 3), (0.5, -1, 3), (0.5, 5, 3), (0.5, 1, 0)])
def test_quantile_domain(p, k, n):
    with pytest.raises(ValueError):
        beta_quantile(p, k, n)


def test_quantile_params_matches_scipy():
    params = BetaParams(k=3, n=10)
    assert (params.a, params.b) == (3, 8)
    assert beta_quantile_params(0.2, params) == pytest.approx(stats.beta.ppf(0.2, 3, 8), abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(
    x=st.floats(0.0, 1.0),
    a=st.integers(1, 400),
    b=st.integers(1, 400),
)
def test_reg_inc_beta_reflection(x, a, b):
    assert reg_inc_beta(x, a, b) + reg_inc_beta(1 - x, b, a) == pytest.approx(1.0, abs=1e-11)


@settings(max_examples=100, deadline=None)
@given(
    x1=st.floats(0.0, 1.0),
    x2=st.floats(0.0, 1.0),
    a=st.integers(1, 200),
    b=st.integers(1, 200),
)
def test_reg_inc_beta_monotone_and_bounded(x1, x2, a, b):
    lo, hi = sorted((x1, x2))
    v_lo, v_hi = reg_inc_beta(lo, a, b), reg_inc_beta(hi, a, b)
    assert 0.0 <= v_lo <= v_hi + 1e-15 <= 1.0 + 1e-15


@settings(max_examples=150, deadline=None)
@given(p=st.floats(1e-9, 1 - 1e-9), n=st.integers(1, 300), data=st.data())
def test_quantile_inverts_cdf(p, n, data):
    k = data.draw(st.integers(1, n))
    q = beta_quantile(p, k, n)
    assert 0.0 <= q <= 1.0
    assert abs(reg_inc_beta(q, k, n + 1 - k) - p) <= 1e-10


@settings(max_examples=80, deadline=None)
@given(p1=st.floats(1e-6, 1 - 1e-6), p2=st.floats(1e-6, 1 - 1e-6), n=st.integers(2, 100), data=st.data())
def test_quantile_monotone_in_p_and_k(p1, p2, n, data):
    k = data.draw(st.integers(1, n - 1))
    lo, hi = sorted((p1, p2))
    assert beta_quantile(lo, k, n) <= beta_quantile(hi, k, n)
    assert beta_quantile(lo, k, n) <= beta_quantile(lo, k + 1, n)
