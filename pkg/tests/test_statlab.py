import json
import math

import numpy as np
import pytest

from dupdiv import statlab
from dupdiv.model import ModelSpec, SpecError, ThinningFamily, basic


def test_report_schema_and_determinism():
    s = basic(0.4, 0.55)
    a = statlab.absorption_probability(s, 1, 20.0, N=2000, seed=3)
    b = statlab.absorption_probability(s, 1, 20.0, N=2000, seed=3)
    assert a.to_json() == b.to_json()
    d = json.loads(a.to_json())
    assert d["schema"] == statlab.SCHEMA
    for key in ("experiment", "config_digest", "sample_size", "statistics", "tolerance", "passed",
                "seeds", "status"):
        assert key in d
    lo, hi = d["statistics"]["ci95"]
    assert lo <= d["statistics"]["absorbed_fraction"] <= hi


def test_plain_handles_numpy_and_nonfinite():
    out = statlab._plain({"a": np.int64(3), "b": np.array([1.0, np.inf]), "c": np.bool_(True)})
    assert out == {"a": 3, "b": [1.0, "inf"], "c": True}
    json.dumps(out)


def test_wilson():
    lo, hi = statlab.wilson(0, 100)
    assert lo == 0.0 and 0.03 < hi < 0.04
    lo, hi = statlab.wilson(50, 100)
    assert lo == pytest.approx(1 - hi) and lo == pytest.approx(0.4038, abs=1e-3)
    assert statlab.wilson(0, 0) == (0.0, 1.0)


def test_absorption_from_zero_and_subcritical():
    s = basic(0.2, 0.0)
    r0 = statlab.absorption_probability(s, 0, 5.0, N=100)
    assert r0.statistics["absorbed_fraction"] == 1.0
    r = statlab.absorption_probability(s, 1, 200.0, N=2000, seed=1)
    assert r.statistics["absorbed_fraction"] > 0.99
    assert r.statistics["verdict"] == "NullRecurrentOrAbsorbing" or r.statistics["margin"] < 0


def test_absorption_generic_path():
    s = ModelSpec(ThinningFamily(0.5), q=0.3, delta=0.2)
    r = statlab.absorption_probability(s, 1, 5.0, N=300, seed=2)
    assert 0 < r.statistics["absorbed_fraction"] < 1


def test_clt_small_run_and_regime_check():
    s = basic(0.4, 0.55)
    r = statlab.clt_test(s, T=20.0, N=4000, discrete_m=10**4, discrete_N=2000, seed=4)
    assert r.statistics["nu"] == pytest.approx(0.3177, abs=1e-4)
    assert r.statistics["v2"] == pytest.approx(0.3778, abs=1e-4)
    assert 0 < r.statistics["max_deviation"] < 0.2
    with pytest.raises(SpecError):
        statlab.clt_test(basic(0.2, 0.0), N=10)


def test_clt_deviation_shrinks_with_T():
    s = basic(0.4, 0.55)
    devs = [statlab.clt_test(s, T=T, N=20_000, discrete_m=None, seed=1).statistics["max_deviation"]
            for T in (10.0, 160.0)]
    assert devs[1] < devs[0]


def test_poisson_surrogate_within_berry_esseen():
    r = statlab.clt_poisson_surrogate(0.45, 0.4, 100.0, 50_000, seed=0)
    assert r.passed


def test_w_stabilization_small():
    s = basic(0.4, 0.55)
    r = statlab.w_stabilization(s, T_list=(20, 40, 80), N=3000, discrete_m=(10**3, 10**4),
                                discrete_N=2000, seed=5)
    med = r.statistics["medians"]
    assert med[0] > med[1] > med[2]


def test_w_stabilization_inconclusive_and_regime():
    s = basic(0.4, 0.55)
    r = statlab.w_stabilization(s, T_list=(10, 20), N=50, discrete_m=None, seed=1)
    assert r.status == "inconclusive" and not r.passed
    with pytest.raises(SpecError):
        statlab.w_stabilization(basic(0.2, 0.0), N=10)


def test_stationary_small():
    s = basic(0.2, 0.0)
    r = statlab.stationary_agreement(s, burn_in=10**4, run_len=10**5, K=200, cond_paths=5000,
                                     discrete_m=None, t_cond=120.0)
    st = r.statistics
    assert st["occupation_sup"] < 0.05
    assert st["occupation_at_zero"] == 0.0
    assert st["solver_conditional_sup"] < 1e-3
    assert st["mc_conditional_sup"] < 0.05
    with pytest.raises(SpecError):
        statlab.stationary_agreement(basic(0.8, 0.2))


def test_quasi_report():
    r = statlab.quasi_report(basic(0.3, 0.0), i_list=(1, 3), t_grid=(0.5, 1.0), K=200)
    assert r.passed and r.statistics["max_rel_error"] <= 1e-6


def test_quantile_coupling_small():
    out = statlab.quantile_coupling_check(N=50_000, slope_m=(100, 1000, 10_000), seed=2)
    assert out["violations"] == 0
    assert all(abs(c["z"]) <= 4 for c in out["mean_check"])
    assert out["slope"] == pytest.approx(-2, abs=0.15)


def test_delta_cauchy_small():
    out = statlab.delta_cauchy_check(basic(0.4, 0.55), n_jumps=200, n_pairs=150,
                                     n0_list=(25, 50, 100), seed=3)
    assert out["identity_mismatches"] == 0
    assert out["pairs_kept"] > 0


def test_rewiring_r_zero():
    s = basic(0.5, 0.2)
    tv = statlab.rewiring_tv_scan(s, k_max=10, m_max=50)
    assert tv["violations"] == 0 and tv["worst_ratio"] == 0.0
    ex = statlab.rewiring_coupling_experiment(s)
    assert ex["fractions"] == [0.0, 0.0, 0.0] and ex["passed"]


def test_rewiring_tv_bound_holds_away_from_mean_shift():
    # at k = 0 the mean-shift term is small and the bound holds for every m
    s = basic(0.5, 0.2, r=1.0)
    tv = statlab.rewiring_tv_scan(s, k_max=0, m_max=300)
    assert tv["violations"] == 0


def test_rewiring_coupling_small():
    s = basic(0.5, 0.2, r=1.0)
    ex = statlab.rewiring_coupling_experiment(s, m1_list=(100, 1000), N=20_000, seed=1)
    assert ex["fractions"][0] > ex["fractions"][-1]
    assert ex["slope"] < -0.5


def test_graph_forward_small():
    r = statlab.graph_forward_agreement(basic(0.5, 0.1), m=40, replicas=400, k_max=10, seed=2)
    assert r.passed
    assert sum(r.statistics["mc"]) == pytest.approx(sum(r.statistics["forward"]), abs=0.02)


def test_enumeration_report():
    r = statlab.enumeration_report("1/3", "1/5", max_n=4)
    assert r.passed and r.statistics["rows_checked"] == 1 + 4 + 12 + 44


def test_digest_depends_on_parameters():
    s = basic(0.4, 0.55)
    a = statlab.absorption_probability(s, 1, 20.0, N=100)
    b = statlab.absorption_probability(s, 2, 20.0, N=100)
    assert a.config_digest != b.config_digest
    assert math.isfinite(a.statistics["margin"])
