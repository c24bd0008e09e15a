"""Deterministic expected degree distributions: discrete recursions, truncated semigroups,
stationary and conditional limits."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .model import ModelSpec, SpecError, classify, dense_generator


class TruncationWarning(UserWarning):
    pass


@dataclass
class DistributionVector:
    mass: np.ndarray
    deficit: float = 0.0
    status: str = "ok"
    meta: dict = field(default_factory=dict)

    @property
    def K(self) -> int:
        return len(self.mass) - 1

    @property
    def total(self) -> float:
        return float(self.mass.sum() + self.deficit)

    def mean(self) -> float:
        return float(np.arange(len(self.mass)) @ self.mass)

    def padded(self, K: int) -> np.ndarray:
        out = np.zeros(K + 1)
        n = min(K, self.K) + 1
        out[:n] = self.mass[:n]
        return out

    @classmethod
    def point(cls, j: int, K: int) -> "DistributionVector":
        if not 0 <= j <= K:
            raise ValueError("point mass outside 0..K")
        mass = np.zeros(K + 1)
        mass[j] = 1.0
        return cls(mass)


def _extend(p: DistributionVector, K: int) -> tuple[np.ndarray, float]:
    mass = p.padded(K)
    return mass, p.deficit + float(p.mass[K + 1:].sum()) if p.K > K else p.deficit


def _flag(out: DistributionVector, bound: float | None) -> DistributionVector:
    if bound is not None and out.deficit > bound:
        out.status = "truncated"
        warnings.warn(f"truncation deficit {out.deficit:.3g} exceeds {bound:.3g}",
                      TruncationWarning, stacklevel=3)
    return out


def discrete_recursion(p_m0: DistributionVector, spec: ModelSpec, m0: int, m: int,
                       K: int | None = None, variant: str = "base",
                       deficit_bound: float | None = 1e-6) -> DistributionVector:
    """Expected degree proportions after steps m0 -> m: p <- p (I + j^-1 [Q]_j)."""
    if m < m0:
        raise ValueError("need m >= m0")
    K = max(2 * m, 64) if K is None else K
    if K < m0 - 1:
        raise ValueError("truncation K below the initial support")
    p, deficit = _extend(p_m0, K)
    rewiring = variant == "rewiring"
    if not rewiring:
        G = dense_generator(spec, variant, K)
    for j in range(m0 + 1, m + 1):
        rows = min(j, K + 1)
        if rewiring:
            # graph size before the step is j-1
            G = dense_generator(spec, "rewiring_at_m", K, m=j - 1, rows=rows)
        step = p[:rows] @ G[:rows] / j
        p += step[: K + 1]
        deficit += step[K + 1]
        if p.min() < -1e-12:
            raise FloatingPointError(f"negative mass {p.min():.3g} at step {j}: generator bug")
    np.maximum(p, 0.0, out=p)
    return _flag(DistributionVector(p, float(deficit)), deficit_bound)


def weighted_discrete_recursion(p_m0: DistributionVector, spec: ModelSpec, m0: int, m: int,
                                K: int | None = None,
                                deficit_bound: float | None = 1e-6):
    """Degree-weighted recursion v <- v (I + (s + 2 alpha)^-1 [Q~]_{s+1}).

    Returns (v_m, prefactor); the unweighted law is recovered as
    p_{m,k} = mean_0 k^-1 prefactor v_{m,k} with mean_0 = sum_k k p_{m0,k}.
    """
    if m < m0:
        raise ValueError("need m >= m0")
    K = max(2 * m, 64) if K is None else K
    p, deficit = _extend(p_m0, K)
    k = np.arange(K + 1)
    mean0 = float(k @ p)
    if mean0 <= 0:
        raise ValueError("initial law has zero mean degree")
    v = k * p / mean0
    alpha = spec.alpha
    G = dense_generator(spec, "weighted", K)
    pref = 1.0
    vdef = 0.0
    for j in range(m0 + 1, m + 1):
        rows = min(j, K + 1)
        step = v[:rows] @ G[:rows] / (j - 1 + 2 * alpha)
        v += step[: K + 1]
        vdef += step[K + 1]
        pref *= 1.0 + (2 * alpha - 1.0) / j
        if v.min() < -1e-12:
            raise FloatingPointError("negative mass in weighted recursion: generator bug")
    np.maximum(v, 0.0, out=v)
    out = DistributionVector(v, float(vdef), meta={"mean0": mean0})
    return _flag(out, deficit_bound), pref


def recover_unweighted(v: DistributionVector, prefactor: float) -> np.ndarray:
    k = np.arange(len(v.mass), dtype=float)
    out = np.zeros_like(v.mass)
    out[1:] = v.meta.get("mean0", 1.0) * prefactor * v.mass[1:] / k[1:]
    return out


def _poisson_cutoff(mu: float, tol: float) -> int:
    """Smallest n with P(Po(mu) > n) < tol, via a geometric bound on the tail."""
    n = int(mu + 10.0 * math.sqrt(mu) + 10)
    log_tol = math.log(tol)
    while True:
        ratio = mu / (n + 2.0)
        if ratio < 1.0:
            tail = stats.poisson.logpmf(n + 1, mu) - math.log1p(-ratio)
            if tail < log_tol:
                return n
        n = int(n * 1.1) + 10


def _uniformize(v0: np.ndarray, G: np.ndarray, t: float, tol: float) -> tuple[np.ndarray, float]:
    """v0 exp(G t) on 0..K plus leaked mass, G of shape (K+1, K+2)."""
    K1 = G.shape[0]
    lam = float(np.max(-np.diag(G[:, :K1]))) if K1 else 0.0
    v = np.append(v0, 0.0)
    if t == 0 or lam == 0:
        return v[:K1].copy(), 0.0
    P = np.zeros((K1 + 1, K1 + 1))
    P[:K1] = G / lam
    P[np.arange(K1), np.arange(K1)] += 1.0
    P[K1, K1] = 1.0
    mu = lam * t
    n_max = _poisson_cutoff(mu, tol)
    logw = stats.poisson.logpmf(np.arange(n_max + 1), mu)
    w = np.exp(logw)
    acc = w[0] * v
    for n in range(1, n_max + 1):
        v = v @ P
        if w[n] > 0:
            acc += w[n] * v
    lost = max(0.0, 1.0 - float(w.sum()))
    return acc[:K1], float(acc[K1]) + lost


def semigroup(p0: DistributionVector, spec: ModelSpec, variant: str = "base", t: float = 1.0,
              K: int = 400, tol: float = 1e-20,
              deficit_bound: float | None = 1e-6,
              boundary: str = "absorb") -> DistributionVector:
    """p0 exp(Q t) on the truncation 0..K by uniformisation.

    boundary "absorb" sends rates leaving 0..K to the deficit; "reflect" keeps
    them on state K, so the truncated chain has the same stationary law as
    ``stationary(spec, K_solve=K)``.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    v0, deficit = _extend(p0, K)
    G = dense_generator(spec, variant, K)
    if boundary == "reflect":
        G[:, K] += G[:, K + 1]
        G[:, K + 1] = 0.0
    elif boundary != "absorb":
        raise ValueError(f"unknown boundary {boundary!r}")
    mass, leak = _uniformize(v0, G, t, tol)
    np.maximum(mass, 0.0, out=mass)
    return _flag(DistributionVector(mass, deficit + leak), deficit_bound)


@dataclass(frozen=True)
class QuasiCheck:
    max_rel_error: float
    reliable: bool
    deficit: float


def quasi_stationarity_check(spec: ModelSpec, i: int, t_grid, K: int = 400, tol: float = 1e-10,
                             K_report: int | None = None, floor: float = 1e-12,
                             poisson_tol: float = 1e-30) -> QuasiCheck:
    """Max relative gap between j P_i[X_t=j] and e^{-(1-2a)t} i P_i[X~_t=j]."""
    if i < 1:
        raise ValueError("i must be >= 1")
    if not spec.is_dd:
        raise SpecError("quasi-stationarity identity needs the constrained family")
    K_report = K if K_report is None else K_report
    alpha = spec.alpha
    j = np.arange(K + 1)
    Gx = dense_generator(spec, "base", K)
    Gw = dense_generator(spec, "weighted", K)
    start = np.zeros(K + 1)
    start[i] = 1.0
    worst, worst_def = 0.0, 0.0
    for t in t_grid:
        px, dx = _uniformize(start, Gx, t, poisson_tol)
        pw, dw = _uniformize(start, Gw, t, poisson_tol)
        lhs = j * px
        rhs = math.exp(-(1 - 2 * alpha) * t) * i * pw
        scale = np.maximum(np.abs(lhs), np.abs(rhs))[: K_report + 1]
        sel = scale >= floor
        if sel.any():
            rel = np.abs(lhs - rhs)[: K_report + 1][sel] / scale[sel]
            worst = max(worst, float(rel.max()))
        worst_def = max(worst_def, dx, dw)
    return QuasiCheck(worst, worst_def <= tol, worst_def)


def stationary(spec: ModelSpec, K: int = 600, variant: str = "weighted",
               K_solve: int | None = None) -> DistributionVector:
    """Stationary law of a chain whose only upward moves are +1, by exact cut balance.

    Flux up across the cut between j-1 and j equals the flux down from {l >= j};
    solved backwards on 0..K_solve with a reflecting top, then reported on 0..K.
    """
    Ks = 4 * K if K_solve is None else max(K_solve, K)
    G = dense_generator(spec, variant, Ks)[:, : Ks + 1]
    lo = 1 if variant == "weighted" else 0
    off = G.copy()
    off[np.arange(Ks + 1), np.arange(Ks + 1)] = 0.0
    if np.any(np.triu(off, 2)):
        raise SpecError("cut balance needs upward jumps of size one only")
    down = np.cumsum(np.tril(off, -1), axis=1)  # down[l, j] = sum_{i<=j} G[l, i]
    pi = np.zeros(Ks + 1)
    pi[Ks] = 1.0
    for j in range(Ks, lo, -1):
        flux = pi[j:] @ down[j:, j - 1]
        up = G[j - 1, j]
        if up <= 0:
            raise SpecError(f"no upward rate from state {j - 1}")
        pi[j - 1] = flux / up
        if pi[j - 1] > 1e250:
            pi[j - 1:] *= 1e-250
    pi /= pi.sum()
    out = DistributionVector(pi[: K + 1].copy(), float(pi[K + 1:].sum()),
                             meta={"K_solve": Ks})
    return out


def conditional_limit(spec: ModelSpec, K: int = 600, tol: float = 1e-3,
                      K_solve: int | None = None) -> DistributionVector:
    """Limit of P[X_t = j | X_t >= 1]: j^-1 p~_j / sum_l l^-1 p~_l."""
    rep = classify(spec, "X_tilde")
    if rep.verdict != "GeometricallyErgodic":
        raise SpecError(f"conditional limit needs an ergodic weighted process ({rep.verdict})")
    st = stationary(spec, K, "weighted", K_solve)
    Ks = st.meta["K_solve"]
    full = stationary(spec, Ks, "weighted", Ks).mass
    j = np.arange(Ks + 1, dtype=float)
    c = np.zeros(Ks + 1)
    c[1:] = full[1:] / j[1:]
    c /= c.sum()
    out = DistributionVector(c[: K + 1].copy(), float(c[K + 1:].sum()),
                             meta={"K_solve": Ks, "stationary": st})
    if out.deficit > tol:
        raise SpecError(f"conditional-limit truncation deficit {out.deficit:.3g} exceeds {tol}")
    return out


def conditional_from_semigroup(spec: ModelSpec, t: float, i: int = 1, K: int = 600,
                               tol: float = 1e-20, boundary: str = "reflect") -> DistributionVector:
    """P_i[X_t = j | X_t >= 1] from the weighted semigroup (no underflow at large t)."""
    pw = semigroup(DistributionVector.point(i, K), spec, "weighted", t, K, tol,
                   deficit_bound=None, boundary=boundary)
    j = np.arange(K + 1, dtype=float)
    c = np.zeros(K + 1)
    c[1:] = pw.mass[1:] / j[1:]
    total = c.sum()
    return DistributionVector(c / total, 0.0, meta={"weighted_deficit": pw.deficit})


def mean_recursion(mean0: float, alpha: float, m0: int, m: int) -> float:
    out = mean0
    for j in range(m0 + 1, m + 1):
        out *= 1.0 + (2 * alpha - 1.0) / j
    return out
