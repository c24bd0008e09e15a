"""Harmonic clock h_a and the quantile coupling of V_a(m, b) with Exp(b)."""
from __future__ import annotations

import math

import numpy as np
from numba import njit

DIRECT_SUM_MAX = 1000
SEARCH_CAP = float(2**53)


@njit(cache=True)
def _stirling_tail(z):
    z2 = z * z
    return 1.0 / (12.0 * z) - 1.0 / (360.0 * z * z2) + 1.0 / (1260.0 * z * z2 * z2) \
        - 1.0 / (1680.0 * z * z2 * z2 * z2)


@njit(cache=True)
def log_gamma_ratio(x, c):
    """lgamma(x + c) - lgamma(x) without cancellation for large x."""
    if x >= 10.0 and x + c >= 10.0:
        return c * math.log(x) + (x + c - 0.5) * math.log1p(c / x) - c \
            + _stirling_tail(x + c) - _stirling_tail(x)
    return math.lgamma(x + c) - math.lgamma(x)


@njit(cache=True)
def digamma(x):
    acc = 0.0
    while x < 10.0:
        acc -= 1.0 / x
        x += 1.0
    x2 = 1.0 / (x * x)
    return acc + math.log(x) - 0.5 / x - x2 * (1.0 / 12.0 - x2 * (1.0 / 120.0 - x2 * (
        1.0 / 252.0 - x2 * (1.0 / 240.0 - x2 / 132.0))))


@njit(cache=True)
def harmonic_gap(m, n, a):
    """h_a(n) - h_a(m) = sum_{l=m+1}^{n} 1/(l+a) for integers n >= m >= 0."""
    if n - m <= DIRECT_SUM_MAX:
        s = 0.0
        for l in range(int(m) + 1, int(n) + 1):
            s += 1.0 / (l + a)
        return s
    x, y = n + a + 1.0, m + a + 1.0
    if y < 10.0:
        return digamma(x) - digamma(y)
    # psi(x) - psi(y) via asymptotic series, log part kept as a ratio
    d = math.log1p((x - y) / y) - 0.5 / x + 0.5 / y
    ix2, iy2 = 1.0 / (x * x), 1.0 / (y * y)
    d -= ix2 * (1.0 / 12.0 - ix2 * (1.0 / 120.0 - ix2 / 252.0)) \
        - iy2 * (1.0 / 12.0 - iy2 * (1.0 / 120.0 - iy2 / 252.0))
    return d


@njit(cache=True)
def harmonic(j, a):
    """h_a(j) = sum_{l=1}^{j} 1/(l+a)."""
    return harmonic_gap(0, j, a)


@njit(cache=True)
def _log_survival(m, n, a, b):
    # log P(N > n) = log prod_{l=m}^{n-1} (1 - b/(l+a+1))
    return log_gamma_ratio(n + a + 1.0, -b) - log_gamma_ratio(m + a + 1.0, -b)


@njit(cache=True)
def landing_step(m, a, b, u):
    """Smallest n > m with P(N > n) <= 1-u: the step at which the jump lands.

    Returned as float so that the asymptotic fallback above SEARCH_CAP fits.
    """
    if b >= m + a + 1.0:
        return m + 1.0
    if b <= 0.0:
        return np.inf
    target = math.log1p(-u)
    if target >= 0.0:
        return m + 1.0
    lo = float(m)
    d = 1.0
    while True:
        hi = min(m + d, SEARCH_CAP)
        if _log_survival(m, hi, a, b) <= target:
            break
        if hi >= SEARCH_CAP:
            # S(n) ~ C n^{-b}: invert the leading term
            logn = (log_gamma_ratio(m + a + 1.0, -b) + target) / (-b)
            return max(math.exp(logn) - a - 1.0, SEARCH_CAP + 1.0)
        lo = hi
        d *= 2.0
    # invariant: S(lo) > target (or lo == m), S(hi) <= target
    while hi - lo > 1.0:
        mid = math.floor(0.5 * (lo + hi))
        if _log_survival(m, mid, a, b) <= target:
            hi = mid
        else:
            lo = mid
    return hi


@njit(cache=True)
def v_from_landing(m, n, a):
    if n >= SEARCH_CAP:
        return digamma(n + a + 1.0) - digamma(m + a + 1.0)
    return harmonic_gap(m, int(n), a)


@njit(cache=True)
def quantile_couple(m, a, b, u):
    """(E_b, V, r) driven by one uniform u; r is the index of the jumping transition."""
    e = -math.log1p(-u) / b
    n = landing_step(m, a, b, u)
    v = v_from_landing(m, n, a)
    return e, v, n - 1.0


@njit(cache=True)
def quantile_couple_many(m, a, b, u):
    n_s = u.shape[0]
    e = np.empty(n_s)
    v = np.empty(n_s)
    r = np.empty(n_s)
    for i in range(n_s):
        e[i], v[i], r[i] = quantile_couple(m, a, b, u[i])
    return e, v, r


def c_phi(phi: float) -> float:
    return (-math.log1p(-phi) - phi) / phi**2


def sandwich_violations(m, a, b, e, v, r, phi=None, slack=1e-12) -> int:
    """Count samples breaking -1/(r+1+a) <= E_b - V <= c_phi b V/(m+a+1)."""
    phi = b / (m + a + 1.0) if phi is None else phi
    d = np.asarray(e) - np.asarray(v)
    lo = -1.0 / (np.asarray(r) + 1.0 + a)
    hi = c_phi(phi) * b * np.asarray(v) / (m + a + 1.0)
    return int(np.sum(d < lo - slack) + np.sum(d > hi + slack))


def check_precondition(m, a, b, phi):
    if b / (m + a + 1.0) > phi:
        raise ValueError(f"b/(m+a+1) = {b / (m + a + 1.0):.4g} exceeds phi = {phi}")
