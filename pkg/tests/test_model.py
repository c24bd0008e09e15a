import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import optimize, stats

from dupdiv.model import (VARIANTS, ModelSpec, MultiBirth, SpecError, ThinningFamily, basic,
                          classify, config_digest, dense_generator, eta_star, p_star, q_row,
                          region, region_boundaries, size_biased, spec_from_config, x_star)


# ---------------------------------------------------------------- thinning

def test_binomial_thinning_exact_moments():
    th = ThinningFamily(0.3)
    for k in (1, 5, 40):
        assert th.p_k(k) == 0.3
        assert th.variance(k) == pytest.approx(k * 0.3 * 0.7, rel=1e-15)
        np.testing.assert_allclose(th.pmf(k), stats.binom.pmf(np.arange(k + 1), k, 0.3))


@pytest.mark.parametrize("kind,kw", [("binomial", {}), ("perturbed", {"c2": 0.2, "gamma2": 0.5})])
def test_thinning_invariants_sweep(kind, kw):
    rep = ThinningFamily(0.4, kind=kind, **kw).check(k_max=10_000)
    assert rep["ok"], rep


def test_custom_thinning_checks_length():
    th = ThinningFamily(0.5, kind="custom", mass_fn=lambda k: np.ones(k) / k)
    with pytest.raises(SpecError):
        th.pmf(3)


def test_thinning_rejects_bad_p():
    for p in (0.0, 1.0, -0.1):
        with pytest.raises(SpecError):
            ThinningFamily(p)


def test_size_biased_point_mass_at_one():
    np.testing.assert_allclose(size_biased(ThinningFamily(0.37), 1), [0.0, 1.0])


def test_size_biased_mean_brute_force():
    p = 0.35
    th = ThinningFamily(p)
    for k in range(1, 31):
        pmf = stats.binom.pmf(np.arange(k + 1), k, p)
        oracle = sum(j * j * pmf[j] for j in range(k + 1)) / (k * p)
        sb = size_biased(th, k)
        assert sb.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.arange(k + 1) @ sb == pytest.approx(oracle, rel=1e-12)
        assert np.arange(k + 1) @ sb == pytest.approx(k * p + 1 - p, rel=1e-12)


def test_size_biased_normalised_to_1000():
    th = ThinningFamily(0.6)
    for k in (10, 100, 1000):
        assert size_biased(th, k).sum() == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------- spec

def test_basic_constants():
    s = basic(0.8, 0.2)
    assert s.alpha == pytest.approx(0.84)
    assert s.beta == pytest.approx(0.8)
    assert s.is_basic and s.is_dd


def test_constrained_family_keeps_alpha_constant():
    s = ModelSpec(ThinningFamily(0.4, kind="perturbed", c2=0.1, gamma2=0.7), q=0.2)
    for k in (1, 2, 10, 1000):
        assert s.alpha_k(k) == pytest.approx(s.alpha, abs=1e-14)


def test_multibirth_validation():
    with pytest.raises(SpecError):
        MultiBirth({0: 1.0})
    with pytest.raises(SpecError):
        MultiBirth({1: 0.0})
    mb = MultiBirth({1: 0.3, 2: 0.1, -1: 0.05})
    assert mb.alpha_b == pytest.approx(0.3 + 0.2 - 0.05)


def test_config_roundtrip_and_unknown_keys():
    cfg = {"p": 0.4, "q": 0.1, "r": 0.5, "thinning": {"kind": "binomial"}}
    s = spec_from_config(cfg)
    assert spec_from_config(s.to_config()) == s
    with pytest.raises(SpecError):
        spec_from_config({"p": 0.4, "qq": 0.1})
    with pytest.raises(SpecError):
        spec_from_config({"p": 0.4, "thinning": {"kind": "binomial", "extra": 1}})


def test_config_digest_is_order_independent():
    assert config_digest({"a": 1, "b": [1, 2]}) == config_digest({"b": [1, 2], "a": 1})
    assert config_digest({"a": 1}) != config_digest({"a": 2})


# ---------------------------------------------------------------- rows

def test_base_row_k1():
    p, q = 0.3, 0.2
    s = basic(p, q)
    row = q_row(s, "base", 1)
    alpha = q + p * (1 - q)
    assert dict(row.entries) == pytest.approx({0: (1 - q) * (1 - p), 2: alpha})
    assert row.diagonal == pytest.approx(-(alpha + (1 - q) * (1 - p)))


def test_base_row_zero_absorbing():
    for s in (basic(0.3, 0.0), basic(0.7, 0.5)):
        row = q_row(s, "base", 0)
        assert row.entries == [] and row.diagonal == 0.0


def test_weighted_row_k1():
    s = basic(0.45, 0.3)
    row = q_row(s, "weighted", 1)
    assert dict(row.entries) == pytest.approx({2: 2 * s.alpha})
    assert row.diagonal == pytest.approx(-2 * s.alpha)


def test_basic_row_support():
    s = basic(0.5, 0.1)
    for k in (1, 4, 9):
        t = set(q_row(s, "base", k).targets.tolist())
        assert t <= set(range(k)) | {k + 1}


def _all_specs():
    mb = MultiBirth({1: 0.4, 3: 0.05, -1: 0.1}, {1: 0.1})
    return [
        ("base", basic(0.4, 0.3), None),
        ("bivariate", basic(0.4, 0.3), None),
        ("weighted", basic(0.4, 0.3), None),
        ("weighted", ModelSpec(ThinningFamily(0.4, kind="perturbed", c2=0.1), q=0.3), None),
        ("deaths", ModelSpec(ThinningFamily(0.4), q=0.3, delta=0.1, c5=0.05), None),
        ("multibirth", ModelSpec(ThinningFamily(0.4), q=0.3, multi_births=mb), None),
        ("rewiring_limit", basic(0.4, 0.3, r=1.5), None),
        ("rewiring_at_m", basic(0.4, 0.3, r=1.5), 3000),
        ("star", basic(0.4, 0.3, star_rate=0.7), None),
    ]


@pytest.mark.parametrize("variant,spec,m", _all_specs(), ids=lambda x: str(x)[:20])
def test_rows_conservative_sweep(variant, spec, m):
    ks = list(range(0 if variant != "weighted" else 1, 60)) + [100, 500, 1000, 2999]
    for k in ks:
        row = q_row(spec, variant, k, m)
        scale = max(1.0, row.total_rate)
        assert abs(row.residual) <= 1e-12 * scale, (variant, k, row.residual)
        assert (row.rates >= 0).all()


def test_every_variant_listed():
    assert {v for v, _, _ in _all_specs()} == set(VARIANTS)


def test_rewiring_reduces_to_basic_at_r0():
    s = basic(0.5, 0.2)
    for k in (0, 1, 5):
        a = q_row(s, "rewiring_limit", k)
        b = q_row(s, "base", k)
        n = k + 3
        if k == 0:
            # the limit chain without rewiring still has a copy law but no moves
            assert a.total_rate == 0.0
        else:
            np.testing.assert_allclose(a.dense(n), b.dense(n), atol=1e-15)
        c = q_row(s, "rewiring_at_m", k, 50)
        np.testing.assert_allclose(c.dense(n), a.dense(n), atol=1e-15)


def test_rewiring_row_k0_values():
    r, m = 1.0, 5
    s = basic(0.5, 0.2, r=r)
    row = q_row(s, "rewiring_at_m", 0, m)
    b = stats.binom.pmf(np.arange(5), m - 1, r / m)
    expect = {1: r * (1 - 1 / m) + b[1]}
    expect.update({j: b[j] for j in range(2, 5)})
    assert dict(row.entries) == pytest.approx(expect, rel=1e-12)


def test_rewiring_at_m_range():
    with pytest.raises(SpecError):
        q_row(basic(0.5, 0.2, r=1.0), "rewiring_at_m", 10, 10)


def test_weighted_requires_constraint():
    s = ModelSpec(ThinningFamily(0.4), q=0.2, alpha_override=0.5)
    with pytest.raises(SpecError):
        q_row(s, "weighted", 3)


def test_generator_identity():
    for s in (basic(0.3, 0.0), basic(0.5, 0.1), basic(0.8, 0.6)):
        K = 1000
        Q = dense_generator(s, "base", K)[:, : K + 1]
        Qw = dense_generator(s, "weighted", K)[:, : K + 1]
        i = np.arange(K + 1, dtype=float)
        lhs = Qw[1:, 1:]
        rhs = (Q[1:, 1:] + (1 - 2 * s.alpha) * np.eye(K)) * i[None, 1:] / i[1:, None]
        assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_dense_generator_leak_column():
    s = basic(0.5, 0.1)
    G = dense_generator(s, "base", 4)
    assert G[4, 5] == pytest.approx(4 * s.alpha)
    np.testing.assert_allclose(G.sum(axis=1), 0.0, atol=1e-14)


# ---------------------------------------------------------------- roots

def test_p_star_values():
    assert p_star(0.0) == pytest.approx(0.5671432904097838, abs=1e-10)
    root = optimize.brentq(lambda p: p * math.exp(p) - math.exp(-1.0), 1e-9, 1.0, xtol=1e-15)
    assert p_star(0.5) == pytest.approx(root, abs=1e-10)
    qs = np.linspace(0, 0.99, 50)
    vals = [p_star(q) for q in qs]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert p_star(1 - 1e-9) < 1e-6


def test_region_boundaries():
    _, q2 = region_boundaries(math.exp(-2))
    assert q2 == pytest.approx(1 / (math.e**2 + 1), abs=1e-12)
    assert region_boundaries(math.exp(-1))[1] == pytest.approx(0.0, abs=1e-15)
    L = math.log(1 / 0.3)
    assert region_boundaries(0.3)[1] == pytest.approx((0.3 * L - 0.3) / (1 - 0.3 + 0.3 * L))
    assert region_boundaries(0.8)[1] < 0


def test_q1_inverts_p_star():
    for q in (0.0, 0.2, 0.5, 0.8):
        assert region_boundaries(p_star(q))[0] == pytest.approx(q, abs=1e-9)


def test_x_star():
    root = optimize.brentq(lambda x: 2 * (1 - math.exp(-x)) - x, 0.1, 2.0, xtol=1e-15)
    assert x_star(2.0) == pytest.approx(root, abs=1e-10)
    assert x_star(1 + 1e-6) < 1e-5
    for u in np.linspace(1.01, 100, 60):
        x = x_star(u)
        # u - x* = u e^{-x*} is below one ulp of u once u exceeds about 36
        assert x < u if u * math.exp(-u) > 4 * np.spacing(u) else x <= u
        assert abs(u * -math.expm1(-x) - x) <= 1e-10 * u
    with pytest.raises(SpecError):
        x_star(1.0)


# ---------------------------------------------------------------- classification

def test_classify_examples():
    rep = classify(basic(0.8, 0.2), "X_star")
    assert rep.verdict == "Transient"
    assert rep.margin == pytest.approx(0.84 - 0.8 * math.log(1.25), abs=1e-12)
    assert rep.region == "C"
    rep = classify(basic(0.3, 0.0), "X_tilde")
    assert rep.verdict == "GeometricallyErgodic" and rep.region == "A"


def test_classify_null_boundary():
    p = 0.4
    alpha = 0.5
    s = ModelSpec(ThinningFamily(p), alpha_override=alpha, beta_override=alpha / math.log(1 / p))
    assert classify(s).verdict == "NullRecurrent"


def test_classify_flips_at_q2():
    for p in (0.05, 0.135, 0.3):
        _, q2 = region_boundaries(p)
        lo, hi = 0.0, 0.99
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if classify(basic(p, mid), "X_tilde").verdict == "GeometricallyErgodic":
                lo = mid
            else:
                hi = mid
        assert lo == pytest.approx(q2, abs=1e-8)


def test_classify_ignores_perturbation_constants():
    a = ModelSpec(ThinningFamily(0.3), q=0.1)
    b = ModelSpec(ThinningFamily(0.3, kind="perturbed", c2=0.05, gamma2=0.4), q=0.1)
    for proc in ("X_star", "X_tilde"):
        assert classify(a, proc).verdict == classify(b, proc).verdict


def test_region_labels():
    assert region(basic(0.1, 0.05)) == "A"
    assert region(basic(0.5, 0.1)) == "B"
    assert region(basic(0.5, 0.6)) == "C"
    assert region(basic(0.5, 0.1, r=1.0)) is None


def test_eta_star():
    s = basic(0.2, 0.3)
    eta = eta_star(s, "X_star")
    L = math.log(5)
    assert eta == pytest.approx(x_star(s.beta * L / s.alpha) / L)
    assert eta < s.beta / s.alpha
    with pytest.raises(SpecError):
        eta_star(basic(0.8, 0.2))


def test_multibirth_classification_uses_alpha_b():
    mb = MultiBirth({1: 0.1, 2: 0.05})
    s = ModelSpec(ThinningFamily(0.5), q=0.0, multi_births=mb)
    rep = classify(s, "X_star_b")
    assert rep.margin == pytest.approx(0.2 - math.log(2))


def test_discrete_row_fractions_match_floats():
    from dupdiv.graph import discrete_row_exact
    row = discrete_row_exact(3, 7, Fraction(1, 2), Fraction(1, 10))
    s = basic(0.5, 0.1)
    dense = q_row(s, "base", 3).dense(6) / 8
    dense[3] += 1
    for j, w in row.items():
        assert float(w) == pytest.approx(dense[j], abs=1e-15)
