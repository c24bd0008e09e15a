"""Discrete-time duplication-divergence graphs, degree censuses and exact one-step laws."""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .forward import DistributionVector
from .model import ModelSpec, SpecError


@dataclass
class DDGraph:
    """Simple graph with per-vertex sorted neighbour lists.

    New vertices always get the largest index, so appending keeps lists sorted.
    """

    adj: list[list[int]]
    step: int = 0
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))

    @property
    def m(self) -> int:
        return len(self.adj)

    def degrees(self) -> np.ndarray:
        return np.fromiter((len(a) for a in self.adj), dtype=np.int64, count=self.m)

    def n_edges(self) -> int:
        return int(self.degrees().sum()) // 2

    def copy(self, rng=None) -> "DDGraph":
        return DDGraph([list(a) for a in self.adj], self.step,
                       self.rng if rng is None else rng)

    def check(self) -> bool:
        for v, nb in enumerate(self.adj):
            if v in nb or len(set(nb)) != len(nb) or nb != sorted(nb):
                return False
            if any(v not in self.adj[w] for w in nb):
                return False
        return True


def complete_graph(m0: int, seed=0) -> DDGraph:
    return DDGraph([[w for w in range(m0) if w != v] for v in range(m0)],
                   rng=np.random.default_rng(seed))


def from_edges(n: int, edges, seed=0) -> DDGraph:
    adj = [set() for _ in range(n)]
    for a, b in edges:
        if a == b:
            raise SpecError("self-loops are not allowed")
        adj[a].add(b)
        adj[b].add(a)
    return DDGraph([sorted(s) for s in adj], rng=np.random.default_rng(seed))


def _sample_subset(rng, items: list[int], j: int) -> list[int]:
    """Uniform j-subset by partial Fisher-Yates, returned sorted."""
    a = list(items)
    n = len(a)
    for i in range(j):
        s = i + int(rng.integers(n - i))
        a[i], a[s] = a[s], a[i]
    return sorted(a[:j])


def _sample_excluding(rng, m: int, excluded: set, count: int) -> list[int]:
    """Uniform count-subset of {0..m-1} minus excluded."""
    free = m - len(excluded)
    if count > free:
        raise ValueError("not enough candidates")
    if count * 3 < free:
        out: set = set()
        while len(out) < count:
            w = int(rng.integers(m))
            if w not in excluded and w not in out:
                out.add(w)
        return sorted(out)
    cand = [w for w in range(m) if w not in excluded]
    return _sample_subset(rng, cand, count)


def _thin_count(rng, spec: ModelSpec, k: int) -> int:
    th = spec.thinning
    if th.kind != "custom":
        return int(rng.binomial(k, th.p_k(k)))
    cdf = np.cumsum(th.pmf(k))
    return min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), k)


def duplicate_step(g: DDGraph, spec: ModelSpec, extra_links: str = "independent",
                   link_to_source: bool = False) -> DDGraph:
    """Copy a uniform vertex, thin the copy's edges, add rewiring links; m increases by one.

    extra_links "independent": each non-neighbour other than the source links to the copy
    with probability r/m.  "bebek": min(Po(r), m-1) targets drawn without replacement among
    all other vertices, merged with the kept neighbours.  The graph is updated in place.
    """
    rng, m = g.rng, g.m
    if m < 1:
        raise SpecError("graph must have at least one vertex")
    u = int(rng.integers(m))
    nb = g.adj[u]
    k = len(nb)
    if k == 0:
        kept: list[int] = []
    elif rng.random() < spec.q_k(k):
        kept = list(nb)
    else:
        kept = _sample_subset(rng, nb, _thin_count(rng, spec, k))
    if spec.r > 0:
        if extra_links == "independent":
            n_links = int(rng.binomial(m - 1 - k, spec.r / m))
            extra = _sample_excluding(rng, m, set(nb) | {u}, n_links)
        elif extra_links == "bebek":
            n_links = min(int(rng.poisson(spec.r)), m - 1)
            extra = _sample_excluding(rng, m, {u}, n_links)
        else:
            raise SpecError(f"unknown extra-link scheme {extra_links!r}")
        if extra:
            kept = sorted(set(kept) | set(extra))
    if link_to_source:
        kept = sorted(set(kept) | {u})
    new = m
    for w in kept:
        g.adj[w].append(new)
    g.adj.append(kept)
    g.step += 1
    return g


@dataclass(frozen=True)
class DegreeCensus:
    m: int
    counts: dict

    def __post_init__(self):
        if sum(self.counts.values()) != self.m:
            raise ValueError("census counts must sum to m")


def census(g: DDGraph) -> DegreeCensus:
    c = Counter(len(a) for a in g.adj)
    return DegreeCensus(g.m, dict(sorted(c.items())))


def census_to_distribution(c: DegreeCensus) -> DistributionVector:
    if c.m <= 0 or not c.counts:
        raise ValueError("empty census")
    K = max(c.counts)
    mass = np.zeros(K + 1)
    exact = {}
    for k, n in c.counts.items():
        exact[k] = Fraction(n, c.m)
        mass[k] = n / c.m
    return DistributionVector(mass, 0.0, meta={"exact": exact})


def run_graph(m0_graph: DDGraph, spec: ModelSpec, target_m: int, seed=0, checkpoints=None,
              extra_links: str = "independent", link_to_source: bool = False
              ) -> list[DegreeCensus]:
    """Grow a copy of m0_graph to target_m vertices; censuses at the requested sizes."""
    if target_m < m0_graph.m:
        raise ValueError("target_m must be >= m0")
    checkpoints = sorted(set([target_m] if checkpoints is None else checkpoints))
    if checkpoints and (checkpoints[0] < m0_graph.m or checkpoints[-1] > target_m):
        raise ValueError("checkpoints must lie in [m0, target_m]")
    g = m0_graph.copy(np.random.default_rng(seed))
    out = []
    pending = list(checkpoints)
    while pending and pending[0] == g.m:
        out.append(census(g))
        pending.pop(0)
    while g.m < target_m:
        duplicate_step(g, spec, extra_links, link_to_source)
        while pending and pending[0] == g.m:
            out.append(census(g))
            pending.pop(0)
    return out


def replicate_censuses(m0_graph: DDGraph, spec: ModelSpec, target_m: int, replicas: int,
                       seed=0, checkpoints=None, **kw) -> list[list[DegreeCensus]]:
    seeds = np.random.SeedSequence(seed).spawn(replicas)
    return [run_graph(m0_graph, spec, target_m, s, checkpoints, **kw) for s in seeds]


def expected_new_edges(g: DDGraph, spec: ModelSpec) -> float:
    """Mean number of edges the next step adds (independent extra links, basic rows)."""
    m = g.m
    deg = g.degrees().astype(float)
    kept = np.array([spec.alpha_k(int(k)) * k for k in deg])
    return float(np.mean(kept + (m - 1 - deg) * spec.r / m))


# ---------------------------------------------------------------- exact enumeration

def enumerate_duplication(g: DDGraph, p: Fraction, q: Fraction):
    """Every outcome of one basic duplication step as (probability, source, kept set)."""
    m = g.m
    for u in range(m):
        nb = g.adj[u]
        k = len(nb)
        pu = Fraction(1, m)
        if k == 0:
            yield pu, u, ()
            continue
        yield pu * q, u, tuple(nb)
        for size in range(k + 1):
            w = pu * (1 - q) * p**size * (1 - p) ** (k - size)
            for sub in itertools.combinations(nb, size):
                yield w, u, sub


def exact_tagged_step(g: DDGraph, v: int, p: Fraction, q: Fraction) -> dict:
    """Law of the tagged degree after one step.

    With probability m/(m+1) the tag stays on v; with probability 1/(m+1) it moves to a
    copy of v.  Computed by enumerating every duplication outcome.
    """
    m = g.m
    out: dict = {}
    own, copy = {}, {}
    for w, u, kept in enumerate_duplication(g, p, q):
        d = len(g.adj[v]) + (1 if v in kept else 0)
        own[d] = own.get(d, 0) + w
        if u == v:
            copy[len(kept)] = copy.get(len(kept), 0) + w * m  # condition on source = v
    for d, w in own.items():
        out[d] = out.get(d, 0) + w * Fraction(m, m + 1)
    for d, w in copy.items():
        out[d] = out.get(d, 0) + w * Fraction(1, m + 1)
    return {d: w for d, w in sorted(out.items()) if w}


def exact_expected_census(g: DDGraph, p: Fraction, q: Fraction) -> dict:
    """E[N_{m+1,k} | G_m] by enumeration."""
    out: dict = {}
    deg = [len(a) for a in g.adj]
    for w, u, kept in enumerate_duplication(g, p, q):
        new = list(deg)
        for x in kept:
            new[x] += 1
        new.append(len(kept))
        for d in new:
            out[d] = out.get(d, 0) + w
    return {d: w for d, w in sorted(out.items()) if w}


def discrete_row_exact(k: int, m: int, p: Fraction, q: Fraction) -> dict:
    """Row k of I + (m+1)^-1 [Q]_{m+1} for the basic model, in rational arithmetic."""
    if k > m:
        return {k: Fraction(1)}
    alpha = q + p * (1 - q)
    beta = 1 - q
    row: dict = {}
    from math import comb
    for j in range(k):
        row[j] = beta * comb(k, j) * p**j * (1 - p) ** (k - j) / (m + 1)
    if k > 0:
        row[k + 1] = alpha * k / (m + 1)
        row[k] = 1 - (alpha * k + beta * (1 - p**k)) / (m + 1)
    else:
        row[0] = Fraction(1)
    return {d: w for d, w in sorted(row.items()) if w}


def graph_corpus(max_n: int = 8, n_random: int = 12, seed: int = 2024) -> list[DDGraph]:
    """All graphs on up to six vertices (networkx atlas) plus random graphs on seven and eight."""
    import networkx as nx
    out = []
    for G in nx.graph_atlas_g()[1:]:
        if G.number_of_nodes() <= min(max_n, 6):
            out.append(from_edges(G.number_of_nodes(), G.edges()))
    rng = np.random.default_rng(seed)
    for n in range(7, max_n + 1):
        for _ in range(n_random):
            edges = [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < 0.4]
            out.append(from_edges(n, edges))
    return out


def enumeration_check(graphs, p: Fraction, q: Fraction) -> tuple[int, int]:
    """(rows checked, rows differing) between enumerated tagged laws and the exact chain row."""
    checked = bad = 0
    for g in graphs:
        for v in range(g.m):
            law = exact_tagged_step(g, v, p, q)
            checked += 1
            bad += law != discrete_row_exact(len(g.adj[v]), g.m, p, q)
    return checked, bad
