"""Compiled event loops for the basic (binomial, constant-rate) tagged chains.

Three generators are passed everywhere: ``clock`` for waiting times and landing
uniforms, ``choice`` for event selection, ``thin`` for thinning draws.
"""
import math

import numpy as np
from numba import njit

from .timechange import landing_step


@njit(cache=True)
def _thin(rng, k, p, weighted):
    if weighted:
        return 1 + rng.binomial(k - 1, p)
    return rng.binomial(k, p)


@njit(cache=True)
def _rates(k, alpha, beta, p, weighted):
    if weighted:
        return alpha * (k + 1.0), p * beta
    return alpha * k, beta


@njit(cache=True)
def ctmc_path(clock, choice, thin, x0, t_max, alpha, beta, p, weighted, event_cap):
    """Event-driven path; every catastrophe ring (no-change outcomes included) is recorded."""
    cap = 64
    times = np.empty(cap)
    states = np.empty(cap, dtype=np.int64)
    zs = np.empty(cap, dtype=np.int64)
    times[0], states[0], zs[0] = 0.0, x0, 0
    n = 1
    t, k, z = 0.0, x0, 0
    capped = False
    while True:
        if k == 0 and not weighted:
            break
        br, cr = _rates(k, alpha, beta, p, weighted)
        total = br + cr
        if total <= 0.0:
            break
        t += clock.standard_exponential() / total
        if t > t_max:
            break
        if n - 1 >= event_cap:
            capped = True
            break
        if choice.random() * total < br:
            k += 1
        else:
            k = _thin(thin, k, p, weighted)
            z += 1
        if n == cap:
            cap *= 2
            times = np.concatenate((times, np.empty(cap - n)))
            states = np.concatenate((states, np.empty(cap - n, dtype=np.int64)))
            zs = np.concatenate((zs, np.empty(cap - n, dtype=np.int64)))
        times[n], states[n], zs[n] = t, k, z
        n += 1
    return times[:n].copy(), states[:n].copy(), zs[:n].copy(), capped


@njit(cache=True)
def ctmc_at_times(clock, choice, thin, x0, t_grid, n_paths, alpha, beta, p, weighted,
                  event_cap):
    """States and catastrophe counts at the increasing times t_grid for many paths."""
    n_t = t_grid.shape[0]
    xs = np.zeros((n_paths, n_t), dtype=np.int64)
    zz = np.zeros((n_paths, n_t), dtype=np.int64)
    capped = np.zeros(n_paths, dtype=np.bool_)
    for i in range(n_paths):
        t, k, z, c, ev = 0.0, x0, 0, 0, 0
        while c < n_t:
            if k == 0 and not weighted:
                break
            br, cr = _rates(k, alpha, beta, p, weighted)
            t_next = t + clock.standard_exponential() / (br + cr)
            while c < n_t and t_grid[c] < t_next:
                xs[i, c], zz[i, c] = k, z
                c += 1
            if c == n_t:
                break
            ev += 1
            if ev > event_cap:
                capped[i] = True
                break
            t = t_next
            if choice.random() * (br + cr) < br:
                k += 1
            else:
                k = _thin(thin, k, p, weighted)
                z += 1
        while c < n_t:
            xs[i, c], zz[i, c] = k, z
            c += 1
    return xs, zz, capped


@njit(cache=True)
def occupation(clock, choice, thin, x0, n_jumps, burn_jumps, alpha, beta, p, weighted, K):
    """Time spent in each state 0..K (entry K+1 collects states above K)."""
    occ = np.zeros(K + 2)
    k = x0
    for ev in range(burn_jumps + n_jumps):
        br, cr = _rates(k, alpha, beta, p, weighted)
        total = br + cr
        if total <= 0.0:
            break
        dt = clock.standard_exponential() / total
        if ev >= burn_jumps:
            occ[min(k, K + 1)] += dt
        if choice.random() * total < br:
            k += 1
        else:
            k = _thin(thin, k, p, weighted)
    return occ


@njit(cache=True)
def first_catastrophe(choice, thin, x0, n_paths, alpha, beta, p):
    """State just after the first catastrophe ring (births cannot absorb, so it always exists)."""
    out = np.empty(n_paths, dtype=np.int64)
    for i in range(n_paths):
        k = x0
        while True:
            br, cr = _rates(k, alpha, beta, p, False)
            if choice.random() * (br + cr) < br:
                k += 1
            else:
                out[i] = _thin(thin, k, p, False)
                break
    return out


@njit(cache=True)
def discrete_path(clock, choice, thin, j0, m0, m_max, alpha, beta, p, weighted, event_cap):
    """Per-jump realisation of Y (or Y~): landing steps from the V_a quantile."""
    a = 2.0 * alpha - 1.0 if weighted else 0.0
    cap = 64
    steps = np.empty(cap)
    states = np.empty(cap, dtype=np.int64)
    js = np.empty(cap, dtype=np.int64)
    steps[0], states[0], js[0] = m0, j0, 0
    n = 1
    m, k, J = float(m0), j0, 0
    capped = False
    while True:
        if k == 0 and not weighted:
            break
        br, cr = _rates(k, alpha, beta, p, weighted)
        # rows of [Q]_{l+1} exist only for states <= l
        m_eff = max(m, float(k))
        land = landing_step(m_eff, a, br + cr, clock.random())
        if land > m_max:
            break
        if n - 1 >= event_cap:
            capped = True
            break
        m = land
        if choice.random() * (br + cr) < br:
            k += 1
        else:
            k = _thin(thin, k, p, weighted)
            J += 1
        if n == cap:
            cap *= 2
            steps = np.concatenate((steps, np.empty(cap - n)))
            states = np.concatenate((states, np.empty(cap - n, dtype=np.int64)))
            js = np.concatenate((js, np.empty(cap - n, dtype=np.int64)))
        steps[n], states[n], js[n] = m, k, J
        n += 1
    return steps[:n].copy(), states[:n].copy(), js[:n].copy(), capped


@njit(cache=True)
def discrete_at_steps(clock, choice, thin, j0, m0, grid, n_paths, alpha, beta, p, weighted):
    """States and downward-jump counts of many discrete paths at increasing steps."""
    a = 2.0 * alpha - 1.0 if weighted else 0.0
    n_g = grid.shape[0]
    xs = np.zeros((n_paths, n_g), dtype=np.int64)
    jj = np.zeros((n_paths, n_g), dtype=np.int64)
    for i in range(n_paths):
        m, k, J, c = float(m0), j0, 0, 0
        while c < n_g:
            if k == 0 and not weighted:
                break
            br, cr = _rates(k, alpha, beta, p, weighted)
            land = landing_step(max(m, float(k)), a, br + cr, clock.random())
            while c < n_g and grid[c] < land:
                xs[i, c], jj[i, c] = k, J
                c += 1
            if c == n_g:
                break
            m = land
            if choice.random() * (br + cr) < br:
                k += 1
            else:
                k = _thin(thin, k, p, weighted)
                J += 1
        while c < n_g:
            xs[i, c], jj[i, c] = k, J
            c += 1
    return xs, jj


@njit(cache=True)
def _binom_pmf_trunc(n, pi, e_max):
    """Bi(n, pi) on 0..min(n, e_max) with the upper tail folded into the last point."""
    top = min(n, e_max)
    out = np.zeros(top + 1)
    if pi <= 0.0 or n == 0:
        out[0] = 1.0
        return out
    lp, lq = math.log(pi), math.log1p(-pi)
    c = math.lgamma(n + 1.0)
    s = 0.0
    for j in range(top + 1):
        out[j] = math.exp(c - math.lgamma(j + 1.0) - math.lgamma(n - j + 1.0) + j * lp + (n - j) * lq)
        s += out[j]
    out[top] += max(0.0, 1.0 - s)
    return out


@njit(cache=True)
def rewiring_rows(k, l, alpha, q, p, r, po):
    """Off-diagonal rate vectors on 0..k+E of Q^(r,l) (graph size l) and of Q^(r)."""
    e_max = po.shape[0] - 1
    n = k + e_max + 2
    kept = _binom_pmf_trunc(k, p, k) * (1.0 - q)
    kept[k] += q
    ext = _binom_pmf_trunc(l - 1 - k, r / l, e_max)
    r1 = np.zeros(n)
    r2 = np.zeros(n)
    for i in range(k + 1):
        for e in range(ext.shape[0]):
            r1[i + e] += kept[i] * ext[e]
        for e in range(e_max + 1):
            r2[i + e] += kept[i] * po[e]
    r1[k + 1] += alpha * k + r * (1.0 - (k + 1.0) / l)
    r2[k + 1] += alpha * k + r
    r1[k] = 0.0
    r2[k] = 0.0
    return r1, r2


@njit(cache=True)
def rewiring_coupling(clock, choice, j1, m1, horizon, n_pairs, alpha, q, p, r, po):
    """Maximal one-step coupling of the inhomogeneous and limit rewiring chains.

    Returns the step at which each pair first separates (0 if it never does).
    """
    split = np.zeros(n_pairs, dtype=np.int64)
    for i in range(n_pairs):
        k, l = j1, float(m1)
        while True:
            bound = alpha * k + r + 1.0
            if bound <= l + 1.0:
                land = landing_step(l, 0.0, bound, clock.random())
                if land > horizon:
                    break
                l_now = land - 1.0
                r1, r2 = rewiring_rows(k, int(l_now), alpha, q, p, r, po)
                acc_scale = bound
            else:
                l_now = l
                if l_now + 1.0 > horizon:
                    break
                r1, r2 = rewiring_rows(k, int(l_now), alpha, q, p, r, po)
                acc_scale = l_now + 1.0
                land = l_now + 1.0
            out1, out2 = r1.sum(), r2.sum()
            common = 0.0
            gap = 0.5 * abs(out1 - out2)
            for j in range(r1.shape[0]):
                common += min(r1[j], r2[j])
                gap += 0.5 * abs(r1[j] - r2[j])
            u = choice.random() * acc_scale
            l = land
            if u >= common + gap:
                continue
            if u < gap:
                split[i] = int(land)
                break
            u -= gap
            acc = 0.0
            for j in range(r1.shape[0]):
                acc += min(r1[j], r2[j])
                if u < acc:
                    k = j
                    break
    return split
