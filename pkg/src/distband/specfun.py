"""Special functions behind the order-statistic bands.

Everything here is vectorised over numpy arrays and returns a plain float
when called with scalars.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betaln, gammaln, ndtri

TINY = 1e-300
MAX_ITER = 300
CF_EPS = 1e-15
QUANTILE_TOL = 1e-12


@dataclass(frozen=True)
class BetaParams:
    """Law of ``F(X_{n:k})``, i.e. Beta(k, n + 1 - k).

    ``k = 0`` and ``k = n + 1`` are the degenerate boundaries (point masses
    at 0 and 1).
    """

    k: int
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0 <= self.k <= self.n + 1:
            raise ValueError(f"k must lie in [0, n + 1], got k={self.k}, n={self.n}")

    @property
    def a(self) -> int:
        return self.k

    @property
    def b(self) -> int:
        return self.n + 1 - self.k


def _scalar_or_array(out, *inputs):
    if all(np.ndim(v) == 0 for v in inputs):
        return float(out)
    return out


def log_gamma(x):
    """ln Gamma(x) for positive finite x."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError("log_gamma requires finite x > 0")
    return _scalar_or_array(gammaln(arr), x)


def _beta_cf(x, a, b, max_iter):
    """Modified Lentz evaluation of the incomplete-beta continued fraction.

    Lanes freeze once converged so that each element's result does not depend
    on what else is in the batch.
    """
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < TINY, TINY, d)
    d = 1.0 / d
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d_new = 1.0 + aa * d
        d_new = np.where(np.abs(d_new) < TINY, TINY, d_new)
        c_new = 1.0 + aa / c
        c_new = np.where(np.abs(c_new) < TINY, TINY, c_new)
        d_new = 1.0 / d_new
        h_new = h * d_new * c_new
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d_new = 1.0 + aa * d_new
        d_new = np.where(np.abs(d_new) < TINY, TINY, d_new)
        c_new = 1.0 + aa / c_new
        c_new = np.where(np.abs(c_new) < TINY, TINY, c_new)
        d_new = 1.0 / d_new
        delta = d_new * c_new
        h_new = h_new * delta

        h = np.where(active, h_new, h)
        c = np.where(active, c_new, c)
        d = np.where(active, d_new, d)
        active &= np.abs(delta - 1.0) >= CF_EPS
        if not active.any():
            return h
    raise ArithmeticError(
        f"incomplete beta continued fraction did not converge in {max_iter} iterations"
    )


def reg_inc_beta(x, a, b, max_iter: int = MAX_ITER):
    """Regularized incomplete beta function I_x(a, b).

    Uses the continued fraction directly when ``x < a / (a + b)`` and the
    reflection ``I_x(a, b) = 1 - I_{1-x}(b, a)`` otherwise.
    """
    xs, as_, bs = np.broadcast_arrays(
        np.asarray(x, dtype=float), np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    )
    if np.any(~np.isfinite(xs)) or np.any((xs < 0) | (xs > 1)):
        raise ValueError("reg_inc_beta requires 0 <= x <= 1")
    if np.any(~(as_ > 0)) or np.any(~(bs > 0)):
        raise ValueError("reg_inc_beta requires a > 0 and b > 0")

    out = np.where(xs >= 1.0, 1.0, 0.0)
    interior = (xs > 0) & (xs < 1)
    if interior.any():
        xi, ai, bi = xs[interior], as_[interior], bs[interior]
        flip = xi > ai / (ai + bi)
        xx = np.where(flip, 1.0 - xi, xi)
        aa = np.where(flip, bi, ai)
        bb = np.where(flip, ai, bi)
        log_front = aa * np.log(xx) + bb * np.log1p(-xx) - betaln(aa, bb)
        val = np.exp(log_front) * _beta_cf(xx, aa, bb, max_iter) / aa
        val = np.where(flip, 1.0 - val, val)
        out[interior] = np.clip(val, 0.0, 1.0)
    return _scalar_or_array(out, x, a, b)


def _log_beta_pdf(x, a, b):
    return (a - 1.0) * np.log(x) + (b - 1.0) * np.log1p(-x) - betaln(a, b)


def _initial_guess(p, a, b):
    # normal approximation to Beta(a, b), clipped away from the endpoints
    mean = a / (a + b)
    sd = np.sqrt(a * b / ((a + b) ** 2 * (a + b + 1.0)))
    guess = mean + sd * ndtri(p)
    return np.clip(guess, 1e-12, 1.0 - 1e-12)


def _beta_ppf(p, a, b, max_iter: int = 100):
    """Safeguarded Newton for I_x(a, b) = p with a bisection fallback."""
    lo = np.zeros_like(p)
    hi = np.ones_like(p)
    x = _initial_guess(p, a, b)
    # residual target is relative for tiny p, where absolute accuracy is free
    f_tol = 1e-15 * np.minimum(p, 1.0)
    active = np.ones(p.shape, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        xa, pa, aa, ba = x[idx], p[idx], a[idx], b[idx]
        f = reg_inc_beta(xa, aa, ba) - pa
        lo_a = np.where(f < 0, xa, lo[idx])
        hi_a = np.where(f > 0, xa, hi[idx])
        pdf = np.exp(_log_beta_pdf(xa, aa, ba))
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            newton = xa - f / pdf
        ok = np.isfinite(newton) & (newton > lo_a) & (newton < hi_a)
        x_new = np.where(ok, newton, 0.5 * (lo_a + hi_a))
        done = (
            (np.abs(f) <= f_tol[idx])
            | (np.abs(x_new - xa) <= 2e-16 * xa)
            | (hi_a - lo_a <= 2e-16 * hi_a)
        )
        x[idx] = np.where(done & (np.abs(f) <= f_tol[idx]), xa, x_new)
        lo[idx] = lo_a
        hi[idx] = hi_a
        active[idx[done]] = False
    return x


def beta_quantile(p, k, n):
    """p-quantile of Beta(k, n + 1 - k), written B^p_{k,n} below.

    ``k = 0`` gives exactly 0 and ``k = n + 1`` exactly 1 whatever ``p`` is.
    Accepts arrays for all three arguments.
    """
    ps, ks, ns = np.broadcast_arrays(
        np.asarray(p, dtype=float), np.asarray(k), np.asarray(n)
    )
    if np.any(ns < 1):
        raise ValueError("beta_quantile requires n >= 1")
    if np.any(ks < 0) or np.any(ks > ns + 1):
        raise ValueError("beta_quantile requires 0 <= k <= n + 1")
    out = np.where(ks == 0, 0.0, 1.0)
    interior = (ks >= 1) & (ks <= ns)
    if interior.any():
        pi = ps[interior]
        if np.any(~((pi > 0) & (pi < 1))):
            raise ValueError("beta_quantile requires 0 < p < 1 for 1 <= k <= n")
        a = ks[interior].astype(float)
        b = (ns[interior] + 1 - ks[interior]).astype(float)
        out[interior] = _beta_ppf(pi.copy(), a, b)
    return _scalar_or_array(out, p, k, n)


def beta_quantile_params(p, params: BetaParams) -> float:
    return beta_quantile(p, params.k, params.n)


def binomial_upper_tail(k: int, n: int, x: float) -> float:
    """Pr(Binomial(n, x) >= k) by direct summation; reference for small n."""
    return math.fsum(math.comb(n, j) * x**j * (1 - x) ** (n - j) for j in range(k, n + 1))
