import math

import numpy as np
import pytest
from scipy import stats

from dupdiv.forward import DistributionVector, discrete_recursion, weighted_discrete_recursion
from dupdiv.model import ModelSpec, SpecError, ThinningFamily, basic, q_row
from dupdiv.tagged import (basic_fast_many, binomial_thin, build_coupled_pair, ctmc_at_times,
                           discrete_at_steps, harmonic_time, occupation_law, quantile_couple,
                           simulate_basic_fast, simulate_ctmc, simulate_discrete_tagged, streams,
                           w_limit_samples, yule_mean, yule_step)


def test_streams_deterministic_and_distinct():
    a = [g.random() for g in streams(7)]
    b = [g.random() for g in streams(7)]
    assert a == b and len(set(a)) == 3
    ss = np.random.SeedSequence(7)
    assert [g.random() for g in streams(ss)] == a


def test_ctmc_path_reproducible():
    s = basic(0.4, 0.55)
    p1 = simulate_ctmc(s, "base", 3, 10.0, seed=5)
    p2 = simulate_ctmc(s, "base", 3, 10.0, seed=5)
    assert np.array_equal(p1.states, p2.states) and np.array_equal(p1.times, p2.times)


def test_ctmc_path_structure():
    s = basic(0.3, 0.0)
    for seed in range(20):
        p = simulate_ctmc(s, "base", 2, 20.0, seed)
        d = np.diff(p.states)
        dz = np.diff(p.z_counts)
        # births are +1 with no ring; rings never raise the state
        assert np.all(d[dz == 0] == 1)
        assert np.all(d[dz == 1] <= 0)
        if p.absorbed_at is not None:
            assert p.states[-1] == 0 and p.state_at(20.0) == 0


def test_weighted_never_hits_zero_and_z_is_poisson():
    s = basic(0.4, 0.2)
    t = 6.0
    xs, zs, _ = ctmc_at_times(s, 1, [t], 20_000, seed=3, weighted=True)
    assert xs.min() >= 1
    lam = s.p * s.beta * t
    z = zs[:, 0]
    assert abs(z.mean() - lam) <= 4 * math.sqrt(lam / len(z))
    disp = z.var() / z.mean()
    assert abs(disp - 1) <= 0.05


def test_z_is_poisson_before_absorption():
    # large start: absorption is negligible, so Z_t ~ Po(beta t)
    s = basic(0.6, 0.5)
    out = basic_fast_many(s, 200, [2.0, 5.0], 20_000, seed=2)
    z = out["z"]
    for c, t in enumerate((2.0, 5.0)):
        lam = s.beta * t
        assert abs(z[:, c].mean() - lam) <= 4 * math.sqrt(lam / z.shape[0])
    inc = z[:, 1] - z[:, 0]
    assert abs(inc.mean() - 3 * s.beta) <= 4 * math.sqrt(3 * s.beta / len(inc))
    assert abs(np.corrcoef(z[:, 0], inc)[0, 1]) < 0.03


def test_event_driven_and_fast_forward_agree():
    s = basic(0.4, 0.55)
    t = 8.0
    xe, ze, _ = ctmc_at_times(s, 1, [t], 20_000, seed=11)
    ff = basic_fast_many(s, 1, [t], 20_000, seed=12)
    assert stats.ks_2samp(xe[:, 0], ff["x"][:, 0]).pvalue >= 0.01
    assert stats.ks_2samp(ze[:, 0], ff["z"][:, 0]).pvalue >= 0.01


def test_mean_growth_basic_and_deaths():
    # d/dt E X = (alpha - delta - beta(1-p)) E X
    for spec, variant in ((basic(0.5, 0.3), "base"),
                          (ModelSpec(ThinningFamily(0.5), q=0.3, delta=0.2), "deaths")):
        x0, t, n = 5, 3.0, 4000
        finals = np.array([simulate_ctmc(spec, variant, x0, t, seed).state_at(t)
                           for seed in np.random.SeedSequence(1).spawn(n)], dtype=float)
        rate = spec.alpha - spec.delta - spec.beta * (1 - spec.p)
        expect = x0 * math.exp(rate * t)
        assert abs(finals.mean() - expect) <= 4 * finals.std() / math.sqrt(n)


def test_star_variant_leaves_zero():
    s = basic(0.3, 0.0, star_rate=1.0)
    p = simulate_ctmc(s, "star", 0, 5.0, seed=1)
    assert p.states.max() >= 1 and p.absorbed_at is None


def test_generic_simulator_perturbed_thinning():
    s = ModelSpec(ThinningFamily(0.4, kind="perturbed", c2=0.1, gamma2=1.0), q=0.3)
    p = simulate_ctmc(s, "base", 3, 5.0, seed=4)
    assert p.states[0] == 3 and np.all(p.states >= 0)


def test_unknown_variant_rejected():
    with pytest.raises(SpecError):
        simulate_ctmc(basic(0.3, 0.1), "nope", 1, 1.0, 0)
    with pytest.raises(SpecError):
        simulate_ctmc(basic(0.3, 0.1), "weighted", 0, 1.0, 0)


def test_path_sample_horizon_guard():
    p = simulate_ctmc(basic(0.3, 0.1), "base", 1, 2.0, 0)
    with pytest.raises(ValueError):
        p.state_at(3.0)


def test_yule_step_moments():
    rng = np.random.default_rng(0)
    n = np.full(200_000, 7.0)
    s = 0.4
    out = yule_step(rng, n, np.full_like(n, s))
    assert abs(out.mean() - 7 / s) <= 4 * out.std() / math.sqrt(len(out))
    assert out.var() == pytest.approx(7 * (1 - s) / s**2, rel=0.02)
    assert yule_mean(7, 0.5, 2.0) == pytest.approx(7 * math.e)


def test_large_state_gaussian_branch():
    rng = np.random.default_rng(1)
    n = np.full(20_000, 1e16)
    out = binomial_thin(rng, n, 0.3)
    assert out.mean() == pytest.approx(3e15, rel=1e-6)
    with pytest.raises(OverflowError):
        yule_step(rng, np.array([1e200]), np.array([1e-150]))


def test_fast_single_path_absorbs_and_freezes():
    s = basic(0.2, 0.0)
    p = simulate_basic_fast(s, 1, 50.0, seed=3)
    assert p.absorbed_at is not None
    assert p.state_at(50.0) == 0
    assert len(p.meta["before_thinning"]) == len(p.states)


def test_w_limit_samples_survival_flag():
    s = basic(0.4, 0.55)
    paths = [simulate_basic_fast(s, 1, 40.0, seed) for seed in range(60)]
    out = w_limit_samples(paths, [20.0, 40.0], threshold=50)
    assert out["w"].shape == (60, 2)
    dead = np.array([p.absorbed_at is not None for p in paths])
    assert not out["surviving"][dead].any()
    assert np.all(out["w"][dead, 1] == 0)


def test_occupation_weighted_has_no_zero():
    occ = occupation_law(basic(0.2, 0.0), 1, 10_000, 100, 50, seed=1)
    assert occ[0] == 0.0 and occ.sum() == pytest.approx(1.0)


# ---------------------------------------------------------------- discrete chains

def _hist(vals, K):
    return np.bincount(np.minimum(vals, K + 1), minlength=K + 2)[: K + 1] / len(vals)


def test_discrete_chain_matches_recursion():
    s = basic(0.5, 0.2)
    m, n, K = 300, 20_000, 40
    ys, _ = discrete_at_steps(s, 1, 2, [m], n, seed=8)
    emp = _hist(ys[:, 0], K)
    rec = discrete_recursion(DistributionVector.point(1, 1000), s, 2, m, K=1000).mass[: K + 1]
    se = np.sqrt(rec * (1 - rec) / n)
    assert np.all(np.abs(emp - rec) <= 4 * se + 1e-12)


def test_weighted_discrete_chain_matches_recursion():
    s = basic(0.3, 0.1)
    m, n, K = 300, 20_000, 40
    ys, _ = discrete_at_steps(s, 1, 2, [m], n, seed=9, weighted=True)
    emp = _hist(ys[:, 0], K)
    v, _ = weighted_discrete_recursion(DistributionVector.point(1, 1000), s, 2, m, K=1000)
    rec = v.mass[: K + 1]
    se = np.sqrt(rec * (1 - rec) / n)
    assert np.all(np.abs(emp - rec) <= 4 * se + 1e-12)


def test_generic_discrete_matches_kernel():
    s = basic(0.5, 0.2)
    m, n = 100, 4000
    fast, _ = discrete_at_steps(s, 1, 2, [m], n, seed=1)
    slow = np.array([simulate_discrete_tagged(s, "rewiring_inhomogeneous", 1, 2, m, seed)
                     .state_at(m) for seed in np.random.SeedSequence(2).spawn(n)])
    assert stats.ks_2samp(fast[:, 0], slow).pvalue >= 0.01


def test_discrete_start_validation():
    with pytest.raises(SpecError):
        simulate_discrete_tagged(basic(0.5, 0.2), "plain", 5, 3, 100, 0)
    p = simulate_discrete_tagged(basic(0.5, 0.2), "plain", 5, 3, 100, 0, relaxed=True)
    assert p.states[0] == 5


def test_rewiring_limit_mean_increment_bound():
    s = basic(0.45, 0.3, r=1.2)
    for k in range(0, 200):
        row = q_row(s, "rewiring_limit", k)
        drift = float(((row.targets - k) * row.rates).sum())
        assert drift <= (2 * s.alpha - 1) * k + 2 * s.r + 1e-12


def test_harmonic_time():
    assert harmonic_time(2, 4) == pytest.approx(1 / 3 + 1 / 4)


# ---------------------------------------------------------------- coupling

def test_quantile_couple_precondition():
    with pytest.raises(ValueError):
        quantile_couple(1, 0.0, 1.5, 0.3, phi=0.5)
    with pytest.raises(ValueError):
        quantile_couple(10, -1.0, 1.0, 0.3)
    e, v, r = quantile_couple(100, 0.0, 0.5, 0.3)
    assert e == pytest.approx(-math.log(0.7) / 0.5)
    assert r >= 100


def test_coupled_pair_identity_and_convergence():
    s = basic(0.4, 0.55)
    pair = build_coupled_pair(s, 1, 2, 300, seed=4)
    t = np.linspace(0.0, pair.S_tilde[-1], 500, endpoint=False)
    assert pair.identity_mismatches(t) == 0
    assert pair.identity_mismatches(pair.S_tilde[:-1]) == 0
    if not pair.absorbed:
        d = pair.delta
        assert abs(d[-1] - d[-50]) < abs(d[50] - d[10]) + 1e-12


def test_coupled_pair_landing_steps_increase():
    pair = build_coupled_pair(basic(0.4, 0.55), 1, 2, 100, seed=1)
    assert np.all(np.diff(pair.N) >= 1)
    with pytest.raises(SpecError):
        build_coupled_pair(basic(0.4, 0.55), 0, 2, 10, 0)
