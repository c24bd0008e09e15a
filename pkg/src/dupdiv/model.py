"""Model parameterisations, Q-matrix rows, regime classification and phase constants."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np
from scipy import stats

NULL_TOL = 1e-12
ROOT_TOL = 1e-10
POISSON_TAIL = 1e-16


class SpecError(ValueError):
    """Invalid model parameterisation."""


@lru_cache(maxsize=8192)
def _binom_pmf(k: int, p: float) -> np.ndarray:
    out = stats.binom.pmf(np.arange(k + 1), k, p)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=256)
def poisson_pmf(r: float, tail: float = POISSON_TAIL) -> np.ndarray:
    """Po(r) on 0..E with the right tail beyond E (mass < tail) folded into E."""
    if r <= 0:
        out = np.ones(1)
    else:
        e_max = int(stats.poisson.isf(tail, r)) + 1
        out = stats.poisson.pmf(np.arange(e_max + 1), r)
        out[-1] += stats.poisson.sf(e_max, r)
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------- thinning

@dataclass(frozen=True)
class ThinningFamily:
    """Law Pi_k of the number of edges kept when a degree-k vertex is copied.

    kind "binomial": Bi(k, p).  kind "perturbed": Bi(k, p + c2 k^-gamma2).
    kind "custom": ``mass_fn(k)`` returns the exact pmf on 0..k.
    """

    p: float
    kind: str = "binomial"
    c2: float = 0.0
    gamma2: float = 1.0
    c3: float = 0.25
    gamma3: float = 1.0
    mass_fn: Callable[[int], np.ndarray] | None = field(default=None, compare=False)

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise SpecError(f"thinning p must lie in (0,1), got {self.p}")
        if self.kind not in ("binomial", "perturbed", "custom"):
            raise SpecError(f"unknown thinning kind {self.kind!r}")
        if self.kind == "custom" and self.mass_fn is None:
            raise SpecError("custom thinning needs mass_fn")
        if self.kind == "perturbed" and not (self.c2 >= 0 and self.p + self.c2 < 1):
            raise SpecError("perturbed thinning needs 0 <= c2 < 1 - p")

    def p_k(self, k: int) -> float:
        if self.kind == "binomial" or k == 0:
            return self.p
        if self.kind == "perturbed":
            return self.p + self.c2 * k ** (-self.gamma2)
        pmf = self.pmf(k)
        return float(np.arange(k + 1) @ pmf) / k

    def variance(self, k: int) -> float:
        if self.kind != "custom":
            pk = self.p_k(k)
            return k * pk * (1.0 - pk)
        pmf = self.pmf(k)
        j = np.arange(k + 1)
        mu = j @ pmf
        return float((j - mu) ** 2 @ pmf)

    def pmf(self, k: int) -> np.ndarray:
        if k == 0:
            return np.ones(1)
        if self.kind == "custom":
            out = np.asarray(self.mass_fn(k), dtype=float)
            if out.shape != (k + 1,):
                raise SpecError(f"custom mass_fn({k}) must have length {k + 1}")
            return out
        return _binom_pmf(int(k), float(self.p_k(k)))

    def mass(self, k: int, j: int) -> float:
        return float(self.pmf(k)[j])

    def check(self, k_max: int = 10_000, n_probe: int = 400) -> dict:
        """Sample the stated invariants and envelopes over k <= k_max."""
        ks = np.unique(np.concatenate([np.arange(1, min(k_max, 200) + 1),
                                       np.geomspace(1, k_max, n_probe).astype(int)]))
        worst = {"norm": 0.0, "p_env": 0.0, "var_env": 0.0}
        ok = True
        for k in ks:
            k = int(k)
            pmf = self.pmf(k)
            worst["norm"] = max(worst["norm"], abs(pmf.sum() - 1.0))
            ok &= bool(pmf.min() >= 0 and pmf[k] < 1)
            dp = abs(self.p_k(k) - self.p) - self.c2 * k ** (-self.gamma2)
            dv = self.variance(k) / k**2 - self.c3 * k ** (-self.gamma3)
            worst["p_env"] = max(worst["p_env"], dp)
            worst["var_env"] = max(worst["var_env"], dv)
        worst["ok"] = ok and worst["norm"] <= 1e-12 and worst["p_env"] <= 1e-12 \
            and worst["var_env"] <= 1e-12
        return worst


def size_biased(thinning: ThinningFamily, k: int) -> np.ndarray:
    """pmf of the size-biased law on 0..k (entry 0 is zero)."""
    if k < 1:
        raise SpecError("size-biasing needs k >= 1")
    pk = thinning.p_k(k)
    if k * pk <= 0:
        raise SpecError("degenerate thinning: k p_k = 0")
    pmf = thinning.pmf(k)
    return np.arange(k + 1) * pmf / (k * pk)


# ---------------------------------------------------------------- multi-births

@dataclass(frozen=True)
class MultiBirth:
    """Jump sizes j in {-1, 1, 2, ...} at per-edge rate a_{k,j} = a_j + c_j k^-gamma."""

    limits: Mapping[int, float]
    c: Mapping[int, float] = field(default_factory=dict)
    j_max: int = 16

    def __post_init__(self):
        for j, a in self.limits.items():
            if j == 0 or j < -1 or j > self.j_max:
                raise SpecError(f"multi-birth jump size {j} outside {{-1}} U 1..{self.j_max}")
            if a < 0:
                raise SpecError("multi-birth rates must be nonnegative")
        if sum(self.limits.values()) <= 0:
            raise SpecError("multi-birth total rate must be positive")
        if set(self.c) - set(self.limits):
            raise SpecError("multi-birth perturbation for a jump size without a limit")

    def rates(self, k: int, gamma: float) -> dict[int, float]:
        kk = max(k, 1)
        return {j: a + self.c.get(j, 0.0) * kk ** (-gamma) for j, a in sorted(self.limits.items())}

    @property
    def alpha_b(self) -> float:
        return float(sum(j * a for j, a in self.limits.items()))


# ---------------------------------------------------------------- model spec

@dataclass(frozen=True)
class ModelSpec:
    """Full parameterisation of a tagged-degree process and its graph model.

    With ``constrained`` (the duplication-divergence family) q_k is derived
    from p_k so that alpha_k = q_k + p_k (1 - q_k) is constant.  ``alpha`` and
    ``beta`` overrides turn the model into a general birth-catastrophe chain.
    """

    thinning: ThinningFamily
    q: float = 0.0
    c1: float = 0.0
    gamma1: float = 1.0
    constrained: bool = True
    delta: float = 0.0
    c5: float = 0.0
    multi_births: MultiBirth | None = None
    r: float = 0.0
    alpha_override: float | None = None
    beta_override: float | None = None
    star_rate: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.q < 1.0:
            raise SpecError(f"q must lie in [0,1), got {self.q}")
        if self.r < 0 or self.delta < 0 or self.c5 < 0 or self.c1 < 0 or self.star_rate < 0:
            raise SpecError("r, delta, c1, c5 and star_rate must be nonnegative")
        if self.constrained and self.c1 > 0:
            raise SpecError("c1 perturbation of q_k is only meaningful for unconstrained specs")
        for k in (1, 2, 3, 5, 10, 100, 1000, 10_000):
            qk = self.q_k(k)
            if not 0.0 <= qk < 1.0:
                raise SpecError(f"q_k outside [0,1) at k={k}: {qk}")

    # limits
    @property
    def p(self) -> float:
        return self.thinning.p

    @property
    def alpha(self) -> float:
        if self.alpha_override is not None:
            return float(self.alpha_override)
        return self.q + self.p * (1.0 - self.q)

    @property
    def beta(self) -> float:
        if self.beta_override is not None:
            return float(self.beta_override)
        return 1.0 - self.q

    @property
    def gamma(self) -> float:
        gs = [1.0, self.thinning.gamma2, self.thinning.gamma3]
        if self.c1 > 0:
            gs.append(self.gamma1)
        return min(gs)

    @property
    def is_dd(self) -> bool:
        """True when alpha_k is constant and beta_k (1 - p_k) = 1 - alpha."""
        return (self.alpha_override is None and self.beta_override is None
                and (self.constrained or self.thinning.kind == "binomial") and self.c1 == 0)

    @property
    def is_basic(self) -> bool:
        return (self.is_dd and self.thinning.kind == "binomial" and self.delta == 0
                and self.multi_births is None and self.r == 0 and self.star_rate == 0)

    # sequences
    def q_k(self, k: int) -> float:
        if self.constrained and self.thinning.kind != "binomial" and k > 0:
            pk = self.thinning.p_k(k)
            return (self.alpha - pk) / (1.0 - pk)
        return self.q + (self.c1 * k ** (-self.gamma1) if k > 0 and self.c1 else 0.0)

    def alpha_k(self, k: int) -> float:
        if self.alpha_override is not None:
            return float(self.alpha_override)
        qk = self.q_k(k)
        return qk + self.thinning.p_k(k) * (1.0 - qk)

    def beta_k(self, k: int) -> float:
        if self.beta_override is not None:
            return float(self.beta_override)
        return 1.0 - self.q_k(k)

    def delta_k(self, k: int) -> float:
        return self.delta + (self.c5 * k ** (-self.gamma) if k > 0 and self.c5 else 0.0)

    # config
    def to_config(self) -> dict:
        th = {"kind": self.thinning.kind}
        if self.thinning.kind == "custom":
            raise SpecError("custom thinning families are not serialisable")
        pert = {}
        if self.thinning.kind == "perturbed":
            pert["p"] = {"c": self.thinning.c2, "gamma": self.thinning.gamma2}
        if self.c1:
            pert["q"] = {"c": self.c1, "gamma": self.gamma1}
        if self.c5:
            pert["delta"] = {"c": self.c5}
        cfg = {"p": self.p, "q": self.q, "r": self.r, "delta": self.delta, "thinning": th}
        if self.multi_births is not None:
            mb = self.multi_births
            cfg["multi_births"] = {"limits": {str(j): a for j, a in sorted(mb.limits.items())},
                                   "c": {str(j): a for j, a in sorted(mb.c.items())},
                                   "j_max": mb.j_max}
        if pert:
            cfg["perturbations"] = pert
        if not self.constrained:
            cfg["constrained"] = False
        return cfg


MODEL_KEYS = {"p", "q", "r", "delta", "thinning", "multi_births", "perturbations", "constrained"}


def basic(p: float, q: float = 0.0, **kw) -> ModelSpec:
    return ModelSpec(ThinningFamily(p), q=q, **kw)


def _reject_unknown(d: Mapping, allowed: set, where: str):
    extra = set(d) - allowed
    if extra:
        raise SpecError(f"unknown key(s) in {where}: {', '.join(sorted(extra))}")


def spec_from_config(cfg: Mapping) -> ModelSpec:
    """Build a ModelSpec from a JSON-compatible document, rejecting unknown keys."""
    if not isinstance(cfg, Mapping):
        raise SpecError("model config must be an object")
    _reject_unknown(cfg, MODEL_KEYS, "model")
    if "p" not in cfg:
        raise SpecError("model.p is required")
    th = cfg.get("thinning", {"kind": "binomial"})
    _reject_unknown(th, {"kind"}, "model.thinning")
    pert = cfg.get("perturbations", {})
    _reject_unknown(pert, {"p", "q", "delta"}, "model.perturbations")
    for name, sub in pert.items():
        _reject_unknown(sub, {"c", "gamma"}, f"model.perturbations.{name}")
    kind = th.get("kind", "binomial")
    if kind == "custom":
        raise SpecError("thinning.kind 'custom' cannot be given in a config document")
    pp = pert.get("p", {})
    if pp and kind != "perturbed":
        raise SpecError("perturbations.p requires thinning.kind = 'perturbed'")
    try:
        thinning = ThinningFamily(float(cfg["p"]), kind=kind, c2=float(pp.get("c", 0.0)),
                                  gamma2=float(pp.get("gamma", 1.0)))
        mb = None
        if cfg.get("multi_births") is not None:
            d = cfg["multi_births"]
            _reject_unknown(d, {"limits", "c", "j_max"}, "model.multi_births")
            mb = MultiBirth({int(j): float(a) for j, a in d["limits"].items()},
                            {int(j): float(a) for j, a in d.get("c", {}).items()},
                            int(d.get("j_max", 16)))
        pq = pert.get("q", {})
        return ModelSpec(thinning, q=float(cfg.get("q", 0.0)), r=float(cfg.get("r", 0.0)),
                         delta=float(cfg.get("delta", 0.0)), multi_births=mb,
                         c1=float(pq.get("c", 0.0)), gamma1=float(pq.get("gamma", 1.0)),
                         c5=float(pert.get("delta", {}).get("c", 0.0)),
                         constrained=bool(cfg.get("constrained", True)))
    except (TypeError, KeyError) as exc:
        raise SpecError(f"malformed model config: {exc}") from exc


def config_digest(doc) -> str:
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# ---------------------------------------------------------------- Q rows

@dataclass(frozen=True)
class QRow:
    k: int
    targets: np.ndarray
    rates: np.ndarray
    diagonal: float
    z_flags: np.ndarray | None = None

    @property
    def entries(self) -> list[tuple[int, float]]:
        return [(int(t), float(r)) for t, r in zip(self.targets, self.rates)]

    @property
    def residual(self) -> float:
        """diagonal + off-diagonal sum; zero for a conservative row."""
        return float(self.rates.sum() + self.diagonal)

    @property
    def total_rate(self) -> float:
        return float(self.rates.sum())

    def dense(self, n: int) -> np.ndarray:
        """Row on states 0..n-1; mass for targets >= n is dropped."""
        out = np.zeros(n)
        keep = self.targets < n
        np.add.at(out, self.targets[keep], self.rates[keep])
        if self.k < n:
            out[self.k] += self.diagonal
        return out


def _row(k, pairs: dict, diagonal: float, z=None) -> QRow:
    t = np.fromiter(pairs.keys(), dtype=np.int64, count=len(pairs))
    r = np.fromiter(pairs.values(), dtype=float, count=len(pairs))
    order = np.argsort(t, kind="stable")
    keep = r[order] > 0
    return QRow(int(k), t[order][keep], r[order][keep], float(diagonal),
                None if z is None else np.asarray(z)[order][keep])


def _arr_row(k, t, r, diagonal) -> QRow:
    keep = r > 0
    return QRow(int(k), t[keep].astype(np.int64), r[keep], float(diagonal))


def _add(d: dict, j: int, rate: float):
    if rate > 0:
        d[j] = d.get(j, 0.0) + rate


VARIANTS = ("base", "bivariate", "weighted", "deaths", "multibirth", "rewiring_limit",
            "rewiring_at_m", "star")


def q_row(spec: ModelSpec, variant: str, k: int, m: int | None = None) -> QRow:
    """Exact generator row of the requested process at state k."""
    if k < 0:
        raise SpecError("state must be nonnegative")
    if variant not in VARIANTS:
        raise SpecError(f"unknown variant {variant!r}")
    a, b = spec.alpha_k(k), spec.beta_k(k)
    pmf = spec.thinning.pmf(k)

    if variant in ("base", "star"):
        if k == 0:
            rate = spec.star_rate if variant == "star" else 0.0
            return _row(0, {1: rate} if rate else {}, -rate)
        t = np.append(np.arange(k), k + 1)
        r = np.append(b * pmf[:k], k * a)
        return _arr_row(k, t, r, -(k * a + b * (1.0 - pmf[k])))

    if variant == "bivariate":
        if k == 0:
            return _row(0, {}, 0.0, [])
        t = np.concatenate([np.arange(k + 1), [k + 1]])
        r = np.concatenate([b * pmf, [k * a]])
        z = np.concatenate([np.ones(k + 1, dtype=np.int8), [0]]).astype(np.int8)
        keep = r > 0
        return QRow(k, t[keep], r[keep], -(k * a + b), z[keep])

    if variant == "weighted":
        if k < 1:
            raise SpecError("weighted process lives on k >= 1")
        if not spec.is_dd:
            raise SpecError("weighted generator needs the constrained family (alpha_k = alpha)")
        alpha = spec.alpha
        if abs(a - alpha) > 1e-12:
            raise SpecError(f"alpha_k = {a} differs from alpha = {alpha} at k={k}")
        j = np.arange(1, k)
        t = np.append(j, k + 1)
        r = np.append(b * j * pmf[1:k] / k, alpha * (k + 1))
        return _arr_row(k, t, r, -(-1.0 + k * alpha + b * (1.0 - pmf[k]) + 2 * alpha))

    if variant == "deaths":
        if k == 0:
            return _row(0, {}, 0.0)
        dk = spec.delta_k(k)
        d = {k + 1: k * a}
        _add(d, k - 1, k * dk)
        for j in range(k):
            _add(d, j, b * pmf[j])
        return _row(k, d, -(k * (a + dk) + b * (1.0 - pmf[k])))

    if variant == "multibirth":
        if spec.multi_births is None:
            raise SpecError("multibirth variant needs spec.multi_births")
        if k == 0:
            return _row(0, {}, 0.0)
        ak = spec.multi_births.rates(k, spec.gamma)
        d: dict = {}
        for j, aj in ak.items():
            _add(d, k + j, k * aj)
        for j in range(k):
            _add(d, j, b * pmf[j])
        return _row(k, d, -(k * sum(ak.values()) + b * (1.0 - pmf[k])))

    # rewiring
    r = spec.r
    qk = spec.q_k(k) if k > 0 else 1.0
    if variant == "rewiring_limit":
        extra = poisson_pmf(r)
        up = a * k + r
    else:
        if m is None or not 0 <= k <= m - 1:
            raise SpecError(f"rewiring_at_m needs 0 <= k <= m-1 (k={k}, m={m})")
        extra = _binom_pmf(m - 1 - k, r / m) if r > 0 else np.ones(1)
        up = a * k + r * (1.0 - (k + 1) / m)
    kept = (1.0 - qk) * pmf
    kept[k] += qk
    copy = np.convolve(kept, extra)
    copy[k] = 0.0
    t = np.append(np.arange(len(copy)), k + 1)
    rates = np.append(copy, up)
    # displayed diagonal: -{up + (1-q)(1 - pi^(r)_kk) + q(1 - pihat_kk)}
    n = min(k + 1, len(extra))
    pi_rkk = float(np.dot(pmf[::-1][:n], extra[:n]))
    diag = -(up + (1.0 - qk) * (1.0 - pi_rkk) + qk * (1.0 - float(extra[0])))
    return _merged_row(k, t, rates, diag)


def _merged_row(k, t, r, diagonal) -> QRow:
    n = int(t.max()) + 1 if len(t) else 0
    acc = np.bincount(t, weights=r, minlength=n)
    idx = np.flatnonzero(acc > 0)
    return QRow(int(k), idx.astype(np.int64), acc[idx], float(diagonal))


def dense_generator(spec: ModelSpec, variant: str, K: int, m: int | None = None,
                    rows: int | None = None) -> np.ndarray:
    """Generator on states 0..K with one extra column collecting rates to states > K."""
    G = np.zeros((K + 1, K + 2))
    n_rows = K + 1 if rows is None else min(rows, K + 1)
    start = 1 if variant == "weighted" else 0
    for k in range(start, n_rows):
        if variant == "rewiring_at_m" and k > m - 1:
            break
        row = q_row(spec, variant, k, m)
        inside = row.targets <= K
        np.add.at(G[k], row.targets[inside], row.rates[inside])
        G[k, K + 1] += row.rates[~inside].sum()
        G[k, k] += row.diagonal
    return G


# ---------------------------------------------------------------- root solvers

def _bisect_newton(f, df, lo: float, hi: float, tol: float = ROOT_TOL) -> float:
    """Root of a monotone f on [lo, hi] with f(lo), f(hi) of opposite sign."""
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < 1e-4 * max(1.0, abs(hi)):
            break
    x = 0.5 * (lo + hi)
    for _ in range(50):
        d = df(x)
        step = f(x) / d if d != 0 else 0.0
        nx = x - step
        if not lo <= nx <= hi:
            nx = 0.5 * (lo + hi)
        if f(nx) == 0:
            return nx
        if (f(nx) > 0) == (flo > 0):
            lo = nx
        else:
            hi = nx
        if abs(nx - x) <= tol * 1e-3 * max(1.0, abs(x)):
            return nx
        x = nx
    return x


def p_star(q: float) -> float:
    """Root in (0,1] of p e^p = exp(-q/(1-q))."""
    if not 0.0 <= q < 1.0:
        raise SpecError("p_star needs 0 <= q < 1")
    c = q / (1.0 - q)
    # solve for y = log p: y + e^y + c = 0 is monotone and never underflows
    f = lambda y: y + math.exp(y) + c
    df = lambda y: 1.0 + math.exp(y)
    return math.exp(_bisect_newton(f, df, -c - 1.0, 0.0, tol=ROOT_TOL * 1e-3))


def region_boundaries(p: float) -> tuple[float, float]:
    """(q1, q2): X* ergodic iff q < q1; X~ ergodic iff q < q2."""
    if not 0.0 < p < 1.0:
        raise SpecError("region_boundaries needs 0 < p < 1")
    L = math.log(1.0 / p)
    q1 = (L - p) / (1.0 + L - p)
    q2 = (p * L - p) / (1.0 - p + p * L)
    return q1, q2


def x_star(u: float) -> float:
    """Positive root of x = u (1 - e^-x), u > 1."""
    if not u > 1.0:
        raise SpecError("x_star needs u > 1")
    f = lambda x: u * (-math.expm1(-x)) - x
    df = lambda x: u * math.exp(-x) - 1.0
    lo = (u - 1.0) / u * 0.5
    return _bisect_newton(f, df, lo, u)


# ---------------------------------------------------------------- classification

@dataclass(frozen=True)
class RegimeReport:
    process: str
    verdict: str
    margin: float
    eta_star: float | None = None
    region: str | None = None


def _verdict(margin: float) -> str:
    if abs(margin) <= NULL_TOL:
        return "NullRecurrent"
    return "GeometricallyErgodic" if margin < 0 else "Transient"


def _growth(spec: ModelSpec, process: str) -> float:
    if process == "X_star_b":
        if spec.multi_births is None:
            raise SpecError("X_star_b needs multi_births")
        return spec.multi_births.alpha_b
    return spec.alpha - spec.delta


def region(spec: ModelSpec) -> str | None:
    if not spec.is_basic:
        return None
    L = math.log(1.0 / spec.p)
    m_tilde = spec.alpha - spec.p * spec.beta * L
    m_star = spec.alpha - spec.beta * L
    if m_tilde < -NULL_TOL:
        return "A"
    if m_star > NULL_TOL:
        return "C"
    return "B"


def classify(spec: ModelSpec, process: str = "X_star") -> RegimeReport:
    if process not in ("X_star", "X_tilde", "X_star_b"):
        raise SpecError(f"unknown process {process!r}")
    L = math.log(1.0 / spec.p)
    a = _growth(spec, process)
    scale = spec.p if process == "X_tilde" else 1.0
    margin = a - scale * spec.beta * L
    verdict = _verdict(margin)
    eta = None
    if verdict == "GeometricallyErgodic" and a > 0:
        eta = x_star(scale * spec.beta * L / a) / L
    return RegimeReport(process, verdict, float(margin), eta, region(spec))


def eta_star(spec: ModelSpec, process: str = "X_star") -> float:
    rep = classify(spec, process)
    if rep.eta_star is None:
        raise SpecError(f"eta_star undefined: {process} is {rep.verdict}")
    return rep.eta_star
