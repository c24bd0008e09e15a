"""Tagged-degree processes: continuous-time X, weighted X~, variants, discrete chains,
the quantile coupling and the random time shift Delta(t)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as kern
from .model import ModelSpec, SpecError, poisson_pmf, size_biased, _binom_pmf
from .timechange import harmonic_gap, landing_step, quantile_couple as _qc

BIG = 1e15  # above this, Poisson/binomial draws switch to Gaussian approximations
HUGE = 1e300  # float states beyond this are refused rather than silently overflowing
STREAMS = ("clock", "choice", "thin")


def streams(seed, n: int = 3) -> list[np.random.Generator]:
    """Independent generators per purpose (clock, choice, thinning) from one seed."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in ss.spawn(n)]


@dataclass
class PathSample:
    times: np.ndarray
    states: np.ndarray
    z_counts: np.ndarray
    horizon: float
    alpha: float
    p: float
    kind: str = "time"  # "time" or "step"
    absorbed_at: float | None = None
    capped: bool = False
    meta: dict = field(default_factory=dict)

    def _idx(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t > self.horizon):
            raise ValueError("checkpoint beyond the path horizon")
        if np.any(t < self.times[0]):
            raise ValueError("checkpoint before the path start")
        return np.searchsorted(self.times, t, side="right") - 1

    def state_at(self, t):
        return self.states[self._idx(t)]

    def z_at(self, t):
        return self.z_counts[self._idx(t)]

    def w_at(self, t):
        """e^{-alpha t} p^{-Z_t} X_t, or m^{-alpha} p^{-J_m} Y_m for step-indexed paths."""
        t = np.asarray(t, dtype=float)
        x = np.asarray(self.state_at(t), dtype=float)
        z = np.asarray(self.z_at(t), dtype=float)
        clock = -self.alpha * (np.log(t) if self.kind == "step" else t)
        return w_values(x, z, clock, self.p)


def w_values(x, z, log_clock, p):
    """x * exp(log_clock) * p^-z, computed in logs; zero where x == 0."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        lw = np.log(x) + log_clock + np.asarray(z) * math.log(1.0 / p)
    return np.where(x > 0, np.exp(lw), 0.0)


# ---------------------------------------------------------------- event tables

def _event_table(spec: ModelSpec, variant: str, k: int, m: int | None = None):
    """(targets, rates, z_flags) of every clock ring at state k, self-rings included."""
    t, r, z = [], [], []

    def add(tt, rr, zz):
        t.append(np.atleast_1d(tt))
        r.append(np.atleast_1d(rr))
        z.append(np.full(np.size(tt), zz, dtype=np.int8))

    a, b = spec.alpha_k(k), spec.beta_k(k)
    if variant == "weighted":
        if k < 1:
            raise SpecError("weighted chain lives on k >= 1")
        add(k + 1, spec.alpha * (k + 1), 0)
        sb = size_biased(spec.thinning, k)
        add(np.arange(k + 1), spec.thinning.p_k(k) * b * sb, 1)
    elif variant in ("rewiring_limit", "rewiring_at_m"):
        qk = spec.q_k(k)
        if variant == "rewiring_limit":
            ext = np.asarray(poisson_pmf(spec.r))
            up = a * k + spec.r
        else:
            if m is None or not 0 <= k <= m - 1:
                raise SpecError(f"rewiring_at_m needs 0 <= k <= m-1 (k={k}, m={m})")
            ext = np.asarray(_binom_pmf(m - 1 - k, spec.r / m)) if spec.r > 0 else np.ones(1)
            up = a * k + spec.r * (1.0 - (k + 1) / m)
        add(k + 1, up, 0)
        add(k + np.arange(len(ext)), qk * ext, 0)
        add(np.arange(k + len(ext)), (1.0 - qk) * np.convolve(spec.thinning.pmf(k), ext), 1)
    else:
        if k == 0:
            if variant == "star" and spec.star_rate > 0:
                add(1, spec.star_rate, 0)
        else:
            if variant == "multibirth":
                if spec.multi_births is None:
                    raise SpecError("multibirth variant needs spec.multi_births")
                for j, aj in spec.multi_births.rates(k, spec.gamma).items():
                    add(k + j, k * aj, 0)
            else:
                add(k + 1, k * a, 0)
            if variant == "deaths":
                add(k - 1, k * spec.delta_k(k), 0)
            add(np.arange(k + 1), b * spec.thinning.pmf(k), 1)
    if not t:
        return np.zeros(0, dtype=np.int64), np.zeros(0), np.zeros(0, dtype=np.int8)
    tt, rr, zz = np.concatenate(t).astype(np.int64), np.concatenate(r), np.concatenate(z)
    keep = rr > 0
    return tt[keep], rr[keep], zz[keep]


class _Tables:
    def __init__(self, spec, variant):
        self.spec, self.variant, self.cache = spec, variant, {}

    def __call__(self, k, m=None):
        key = (k, m)
        if key not in self.cache:
            tt, rr, zz = _event_table(self.spec, self.variant, k, m)
            self.cache[key] = (tt, np.cumsum(rr), zz)
        return self.cache[key]


def _pick(table, u):
    tt, cum, zz = table
    i = min(int(np.searchsorted(cum, u * cum[-1], side="right")), len(tt) - 1)
    return int(tt[i]), int(zz[i])


# ---------------------------------------------------------------- continuous time

CTMC_VARIANTS = ("base", "weighted", "deaths", "multibirth", "rewiring_limit", "star")


def simulate_ctmc(spec: ModelSpec, variant: str = "base", x0: int = 1, t_max: float = 10.0,
                  seed=0, event_cap: int = 10**8) -> PathSample:
    """Exact event-driven path of (X_t, Z_t); Z counts every catastrophe-clock ring."""
    if variant not in CTMC_VARIANTS:
        raise SpecError(f"unknown continuous-time variant {variant!r}")
    if x0 < 0 or (variant == "weighted" and x0 < 1):
        raise SpecError("invalid initial state")
    clock, choice, thin = streams(seed)
    fast = (spec.thinning.kind == "binomial" and spec.is_dd and spec.delta == 0
            and variant in ("base", "weighted"))
    if fast:
        t, x, z, capped = kern.ctmc_path(clock, choice, thin, int(x0), float(t_max), spec.alpha,
                                         spec.beta, spec.p, variant == "weighted", int(event_cap))
    else:
        t, x, z, capped = _ctmc_generic(spec, variant, x0, t_max, clock, choice, event_cap)
    absorbed = None
    if variant in ("base", "deaths", "multibirth") and x[-1] == 0:
        absorbed = float(t[np.argmax(x == 0)])
    return PathSample(t, x, z, float(t_max), spec.alpha, spec.p, "time", absorbed, bool(capped))


def _ctmc_generic(spec, variant, x0, t_max, clock, choice, event_cap):
    tables = _Tables(spec, variant)
    times, states, zs = [0.0], [x0], [0]
    t, k, z = 0.0, x0, 0
    capped = False
    while True:
        tab = tables(k)
        if len(tab[0]) == 0:
            break
        t += clock.standard_exponential() / tab[1][-1]
        if t > t_max:
            break
        if len(times) > event_cap:
            capped = True
            break
        k, dz = _pick(tab, choice.random())
        z += dz
        times.append(t)
        states.append(k)
        zs.append(z)
    return np.array(times), np.array(states, dtype=np.int64), np.array(zs, dtype=np.int64), capped


def ctmc_at_times(spec: ModelSpec, x0: int, t_grid, n_paths: int, seed, weighted=False,
                  event_cap: int = 10**8):
    """(states, Z) at the times t_grid for many event-driven basic paths."""
    _require_basic(spec)
    clock, choice, thin = streams(seed)
    return kern.ctmc_at_times(clock, choice, thin, int(x0), np.asarray(t_grid, dtype=float),
                              int(n_paths), spec.alpha, spec.beta, spec.p, bool(weighted),
                              int(event_cap))


def occupation_law(spec: ModelSpec, x0: int, n_jumps: int, burn_jumps: int, K: int, seed,
                   weighted=True) -> np.ndarray:
    """Fraction of time spent in 0..K (entry K+1: above K) along one long path."""
    _require_basic(spec, allow_rewiring=False)
    clock, choice, thin = streams(seed)
    occ = kern.occupation(clock, choice, thin, int(x0), int(n_jumps), int(burn_jumps),
                          spec.alpha, spec.beta, spec.p, bool(weighted), int(K))
    return occ / occ.sum()


def _require_basic(spec: ModelSpec, allow_rewiring=False):
    if not (spec.thinning.kind == "binomial" and spec.is_dd and spec.delta == 0
            and spec.multi_births is None and (allow_rewiring or spec.r == 0)):
        raise SpecError("this simulator needs the basic model (binomial thinning, constant rates)")


# ---------------------------------------------------------------- fast forward

def yule_step(rng: np.random.Generator, n: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Pure-birth (rate alpha per edge) transition from n over a time with e^{-alpha dt} = s.

    n + NB(n, s) via the gamma-Poisson mixture; float state, Gaussian Poisson above BIG.
    """
    n = np.asarray(n, dtype=float)
    out = n.copy()
    live = n > 0
    if not live.any():
        return out
    nl, sl = n[live], np.broadcast_to(s, n.shape)[live]
    if np.any(np.log(nl) - np.log(sl) > math.log(HUGE)):
        raise OverflowError("state would exceed 1e300; shorten the horizon")
    lam = rng.gamma(nl, (1.0 - sl) / sl)
    small = lam < BIG
    extra = np.empty_like(lam)
    extra[small] = rng.poisson(lam[small])
    big = ~small
    if big.any():
        extra[big] = np.round(lam[big] + np.sqrt(lam[big]) * rng.standard_normal(big.sum()))
    out[live] = nl + extra
    return out


def binomial_thin(rng: np.random.Generator, n: np.ndarray, p: float) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    out = np.empty_like(n)
    small = n < BIG
    out[small] = rng.binomial(n[small].astype(np.int64), p)
    big = ~small
    if big.any():
        nb = n[big]
        out[big] = np.round(nb * p + np.sqrt(nb * p * (1 - p)) * rng.standard_normal(big.sum()))
    return out


def basic_fast_many(spec: ModelSpec, x0: int, t_grid, n_paths: int, seed) -> dict:
    """Catastrophe-skeleton simulation of many basic paths, read off at t_grid.

    Returns float states ``x`` and catastrophe counts ``z`` of shape (n_paths, len(t_grid)).
    """
    _require_basic(spec)
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) < 0) or (len(t_grid) and t_grid[0] < 0):
        raise ValueError("t_grid must be increasing and nonnegative")
    clock, grow, thin = streams(seed)
    alpha, beta, p = spec.alpha, spec.beta, spec.p
    n_t = len(t_grid)
    xs = np.zeros((n_paths, n_t))
    zs = np.zeros((n_paths, n_t), dtype=np.int64)
    x = np.full(n_paths, float(x0))
    z = np.zeros(n_paths, dtype=np.int64)
    t = np.zeros(n_paths)
    c = np.zeros(n_paths, dtype=np.int64)
    tau = clock.exponential(1.0 / beta, n_paths) if beta > 0 else np.full(n_paths, np.inf)
    active = np.arange(n_paths)
    while active.size:
        ca = c[active]
        t_chk = t_grid[ca]
        to_cat = tau[active] < t_chk
        target = np.where(to_cat, tau[active], t_chk)
        x[active] = yule_step(grow, x[active], np.exp(-alpha * (target - t[active])))
        t[active] = target
        cat = active[to_cat]
        if cat.size:
            x[cat] = binomial_thin(thin, x[cat], p)
            z[cat] += 1
            tau[cat] = t[cat] + clock.exponential(1.0 / beta, cat.size)
        chk = active[~to_cat]
        xs[chk, c[chk]] = x[chk]
        zs[chk, c[chk]] = z[chk]
        c[chk] += 1
        done = (c[active] >= n_t) | (x[active] == 0)
        dead = active[done & (x[active] == 0)]
        for i in dead:  # absorbed: X and Z frozen for the remaining checkpoints
            xs[i, c[i]:] = 0.0
            zs[i, c[i]:] = z[i]
        active = active[~done]
    return {"x": xs, "z": zs, "t": t_grid}


def simulate_basic_fast(spec: ModelSpec, x0: int, t_max: float, seed) -> PathSample:
    """One path resolved at its catastrophe times (state recorded after each thinning)."""
    _require_basic(spec)
    clock, grow, thin = streams(seed)
    alpha, beta, p = spec.alpha, spec.beta, spec.p
    times, states, zs, pre = [0.0], [float(x0)], [0], [float(x0)]
    t, x, z = 0.0, float(x0), 0
    while x > 0:
        w = clock.exponential(1.0 / beta) if beta > 0 else np.inf
        if t + w > t_max:
            x = float(yule_step(grow, np.array([x]), np.array([math.exp(-alpha * (t_max - t))]))[0])
            t = t_max
            break
        x = float(yule_step(grow, np.array([x]), np.array([math.exp(-alpha * w)]))[0])
        t += w
        pre.append(x)
        x = float(binomial_thin(thin, np.array([x]), p)[0])
        z += 1
        times.append(t)
        states.append(x)
        zs.append(z)
    absorbed = times[-1] if x == 0 else None
    return PathSample(np.array(times), np.array(states), np.array(zs, dtype=np.int64),
                      float(t_max), alpha, p, "time", absorbed,
                      meta={"before_thinning": np.array(pre), "final_state": x})


# ---------------------------------------------------------------- discrete chains

DISCRETE_VARIANTS = ("plain", "weighted", "rewiring_inhomogeneous", "rewiring_limit")


def simulate_discrete_tagged(spec: ModelSpec, variant: str = "plain", j0: int = 1, m0: int = 2,
                             m_max: int = 10**6, seed=0, relaxed: bool = False,
                             event_cap: int = 10**8) -> PathSample:
    """Per-jump path of Y, Y~ or the rewiring chains; records J_m (downward jumps)."""
    if variant not in DISCRETE_VARIANTS:
        raise SpecError(f"unknown discrete variant {variant!r}")
    if m_max < m0:
        raise ValueError("m_max must be >= m0")
    if not relaxed and not j0 <= m0 - 1:
        raise SpecError("graph-consistent start needs j0 <= m0 - 1 (pass relaxed=True to override)")
    if variant == "weighted" and j0 < 1:
        raise SpecError("weighted chain lives on k >= 1")
    clock, choice, thin = streams(seed)
    basic = (spec.thinning.kind == "binomial" and spec.is_dd and spec.delta == 0
             and spec.multi_births is None)
    if basic and variant in ("plain", "weighted"):
        steps, x, J, capped = kern.discrete_path(clock, choice, thin, int(j0), float(m0),
                                                 float(m_max), spec.alpha, spec.beta, spec.p,
                                                 variant == "weighted", int(event_cap))
    else:
        steps, x, J, capped = _discrete_generic(spec, variant, j0, m0, m_max, clock, choice,
                                                event_cap)
    absorbed = float(steps[-1]) if variant == "plain" and x[-1] == 0 else None
    return PathSample(np.asarray(steps, dtype=float), np.asarray(x, dtype=np.int64),
                      np.asarray(J, dtype=np.int64), float(m_max), spec.alpha, spec.p, "step",
                      absorbed, bool(capped))


def _plain_variant(spec):
    if spec.multi_births is not None:
        return "multibirth"
    return "deaths" if spec.delta > 0 else "base"


def _discrete_generic(spec, variant, j0, m0, m_max, clock, choice, event_cap):
    a = 2.0 * spec.alpha - 1.0 if variant == "weighted" else 0.0
    if variant == "plain":
        tables = _Tables(spec, _plain_variant(spec))
    elif variant == "rewiring_inhomogeneous":
        tables = _Tables(spec, "rewiring_at_m")
    else:
        tables = _Tables(spec, variant)
    steps, states, js = [float(m0)], [j0], [0]
    m, k, J = float(m0), j0, 0
    capped = False
    while True:
        if variant == "rewiring_inhomogeneous":
            # thinning against the m-free bound alpha k + r + 1
            bound = spec.alpha * k + spec.r + 1.0
            if bound <= m + 1.0:
                land = landing_step(m, 0.0, bound, clock.random())
            else:
                land, bound = m + 1.0, m + 1.0
            if land > m_max:
                break
            tab = tables(k, int(land) - 1)
            m = land
            u = choice.random() * bound
            if u >= tab[1][-1]:
                continue
            k, dz = _pick(tab, u / tab[1][-1])
        else:
            tab = tables(k)
            if len(tab[0]) == 0:
                break
            b = tab[1][-1]
            m_eff = max(m, float(k))
            if b > m_eff + a + 1.0:
                raise SpecError("one-step probability exceeds 1: generator outside [Q]_j range")
            land = landing_step(m_eff, a, b, clock.random())
            if land > m_max:
                break
            m = land
            k, dz = _pick(tab, choice.random())
        J += dz
        if len(steps) > event_cap:
            capped = True
            break
        steps.append(m)
        states.append(k)
        js.append(J)
    return np.array(steps), np.array(states), np.array(js), capped


def discrete_at_steps(spec: ModelSpec, j0: int, m0: int, grid, n_paths: int, seed,
                      weighted=False):
    """(states, J) of many basic discrete paths at the increasing steps in grid."""
    _require_basic(spec)
    clock, choice, thin = streams(seed)
    return kern.discrete_at_steps(clock, choice, thin, int(j0), float(m0),
                                  np.asarray(grid, dtype=float), int(n_paths), spec.alpha,
                                  spec.beta, spec.p, bool(weighted))


# ---------------------------------------------------------------- quantile coupling

def quantile_couple(m: int, a: float, b: float, u: float, phi: float | None = None):
    """(E_b, V, r): Exp(b) and V_a(m, b) from the same uniform; r is the jump index."""
    if a <= -1:
        raise ValueError("a must exceed -1")
    if b <= 0:
        raise ValueError("rate b must be positive")
    if phi is not None and b / (m + a + 1.0) > phi:
        raise ValueError(f"b/(m+a+1) = {b / (m + a + 1.0):.4g} exceeds phi = {phi}")
    return _qc(float(m), float(a), float(b), float(u))


@dataclass
class CoupledPair:
    states: np.ndarray          # jump chain X^ (shared)
    S: np.ndarray               # continuous jump times
    S_tilde: np.ndarray         # harmonic times of the discrete jumps
    N: np.ndarray               # landing steps of the discrete chain
    m0: int
    absorbed: bool = False

    @property
    def delta(self) -> np.ndarray:
        return self.S - self.S_tilde

    def x_at(self, s):
        """Continuous path X at time s."""
        return self.states[np.searchsorted(self.S, s, side="right") - 1]

    def yh_at(self, t):
        """Discrete chain read in harmonic time: Y at the last step N with h0(N)-h0(m0) <= t."""
        return self.states[np.searchsorted(self.S_tilde, t, side="right") - 1]

    def delta_at(self, t):
        """Piecewise-linear shift between consecutive discrete jump times."""
        return np.interp(t, self.S_tilde, self.delta)

    def identity_mismatches(self, t) -> int:
        t = np.asarray(t, dtype=float)
        return int(np.sum(self.yh_at(t) != self.x_at(t + self.delta_at(t))))


def build_coupled_pair(spec: ModelSpec, j0: int, m0: int, n_jumps: int, seed) -> CoupledPair:
    """Shared jump chain; exponential and V_0 holding times from common uniforms."""
    _require_basic(spec)
    if j0 < 1:
        raise SpecError("coupled pair needs j0 >= 1")
    u_hold, u_jump = streams(seed, 2)
    alpha, beta, p = spec.alpha, spec.beta, spec.p
    states, S, St, N = [j0], [0.0], [0.0], [m0]
    k = j0
    absorbed = False
    for _ in range(n_jumps):
        if k == 0:
            absorbed = True
            break
        pmf = spec.thinning.pmf(k)
        down = beta * (1.0 - pmf[k])
        qhat = alpha * k + down
        e, v, r = _qc(float(N[-1]), 0.0, qhat, u_hold.random())
        S.append(S[-1] + e)
        St.append(St[-1] + v)
        N.append(int(r) + 1)
        u = u_jump.random() * qhat
        if u < alpha * k:
            k += 1
        else:
            cdf = np.cumsum(beta * pmf[:k])
            k = min(int(np.searchsorted(cdf, u - alpha * k, side="right")), k - 1)
        states.append(k)
    return CoupledPair(np.array(states), np.array(S), np.array(St), np.array(N), m0,
                       absorbed or k == 0)


# ---------------------------------------------------------------- W limits

def w_limit_samples(paths, checkpoints, threshold: float = 50.0) -> dict:
    """W at checkpoints for each path, with survival = not absorbed and X_T >= threshold."""
    checkpoints = np.asarray(checkpoints, dtype=float)
    w = np.array([path.w_at(checkpoints) for path in paths])
    last = np.array([float(path.state_at(checkpoints[-1])) for path in paths])
    surv = np.array([path.absorbed_at is None for path in paths]) & (last >= threshold)
    return {"w": w, "surviving": surv, "checkpoints": checkpoints}


def yule_mean(x0: float, alpha: float, t: float) -> float:
    return x0 * math.exp(alpha * t)


def harmonic_time(m0: int, m: int) -> float:
    return harmonic_gap(m0, m, 0.0)
