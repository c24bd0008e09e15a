import math

import numpy as np
import pytest
import mpmath as mp
from scipy import special

from dupdiv.timechange import (SEARCH_CAP, c_phi, check_precondition, digamma, harmonic,
                               harmonic_gap, landing_step, log_gamma_ratio, quantile_couple,
                               quantile_couple_many, sandwich_violations, v_from_landing)


def test_log_gamma_ratio_matches_high_precision():
    mp.mp.dps = 40
    for x in (0.5, 3.0, 12.0, 1e3, 1e7):
        for c in (-0.7, -0.1, 0.3, 1.5):
            if x + c <= 0:
                continue
            ref = float(mp.loggamma(mp.mpf(x) + mp.mpf(c)) - mp.loggamma(mp.mpf(x)))
            assert log_gamma_ratio(x, c) == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_log_gamma_ratio_large_argument_precise():
    # lgamma difference cancels catastrophically at 1e15; the ratio stays accurate
    x, c = 1e15, -0.5
    assert log_gamma_ratio(x, c) == pytest.approx(c * math.log(x), rel=1e-14)


def test_digamma():
    for x in (0.3, 1.0, 7.5, 50.0, 1e6):
        assert digamma(x) == pytest.approx(float(special.digamma(x)), rel=1e-13, abs=1e-14)


@pytest.mark.parametrize("a", [0.0, -0.6, 0.68, 2.0])
def test_harmonic_switchover(a):
    # direct sum against the asymptotic branch across the threshold
    for m, n in ((0, 999), (0, 1001), (5, 5000), (100, 1200), (2000, 10**6)):
        direct = math.fsum(1.0 / (l + a) for l in range(m + 1, n + 1))
        assert harmonic_gap(m, n, a) == pytest.approx(direct, rel=1e-13)


def test_harmonic_values():
    assert harmonic(1, 0.0) == 1.0
    assert harmonic(4, 0.0) == pytest.approx(1 + 1 / 2 + 1 / 3 + 1 / 4)
    assert harmonic_gap(7, 7, 0.3) == 0.0


def test_landing_step_small_exact():
    m, a, b = 3, 0.0, 0.5
    # survival after each step: prod_{l=m}^{n-1} (1 - b/(l+a+1))
    surv, n = 1.0, m
    table = []
    while n < 100_000:
        surv *= 1 - b / (n + a + 1)
        n += 1
        table.append((n, surv))
    for u in np.linspace(0.01, 0.95, 40):
        expect = next(n for n, s in table if s <= 1 - u)
        assert landing_step(m, a, b, u) == expect


def test_landing_step_degenerate():
    assert landing_step(2, 0.0, 5.0, 0.3) == 3.0   # b >= m+a+1 jumps at once
    assert landing_step(10, 0.0, 0.5, 0.0) == 11.0


def test_landing_step_near_cap():
    # the root lies just below 2^53; the search must bisect there, not fall back
    m, a, b = 1e5, 0.0, 0.5
    u = 0.9999955001796353
    n = landing_step(m, a, b, u)
    assert n < SEARCH_CAP
    lhs = log_gamma_ratio(n + 1.0, -b) - log_gamma_ratio(m + 1.0, -b)
    prev = log_gamma_ratio(n, -b) - log_gamma_ratio(m + 1.0, -b)
    assert lhs <= math.log1p(-u) < prev


def test_landing_step_beyond_cap_asymptotic():
    m, a, b = 10.0, 0.0, 0.5
    u = 1 - 1e-12
    n = landing_step(m, a, b, u)
    assert n > SEARCH_CAP
    e, v, r = quantile_couple(m, a, b, u)
    assert sandwich_violations(m, a, b, np.array([e]), np.array([v]), np.array([r]), slack=1e-6) == 0


def test_v_from_landing_is_harmonic_gap():
    assert v_from_landing(10, 20, 0.0) == pytest.approx(sum(1 / l for l in range(11, 21)))


def test_mean_v_matches_exponential():
    rng = np.random.default_rng(11)
    for m, b in ((10, 0.5), (1000, 0.5), (10**5, 0.9)):
        e, v, r = quantile_couple_many(float(m), 0.0, b, rng.random(200_000))
        se = v.std() / math.sqrt(len(v))
        assert abs(v.mean() - 1 / b) <= 4 * se
        assert np.all(r >= m)


def test_sandwich_and_monotonicity():
    rng = np.random.default_rng(3)
    u = np.sort(rng.random(20_000))
    for m, a, b in ((10, 0.0, 0.5), (50, -0.6, 1.3), (1000, 0.7, 0.9)):
        e, v, r = quantile_couple_many(float(m), a, b, u)
        assert sandwich_violations(m, a, b, e, v, r) == 0
        assert np.all(np.diff(v) >= 0) and np.all(np.diff(e) >= 0)


def test_second_moment_slope():
    rng = np.random.default_rng(5)
    ms = np.array([100, 1000, 10_000])
    sec = []
    for m in ms:
        e, v, _ = quantile_couple_many(float(m), 0.0, 0.5, rng.random(100_000))
        sec.append(np.mean((e - v) ** 2))
    slope = np.polyfit(np.log(ms + 1.0), np.log(sec), 1)[0]
    assert slope == pytest.approx(-2.0, abs=0.1)


def test_c_phi_and_precondition():
    assert c_phi(0.5) == pytest.approx((math.log(2) - 0.5) / 0.25)
    with pytest.raises(ValueError):
        check_precondition(1, 0.0, 1.0, 0.1)
    check_precondition(100, 0.0, 1.0, 0.1)
