"""Brute-force ground truth by enumerating every edge subset.

Everything here is exponential in the number of edges and exists to check the
randomized code on small graphs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bitrows import masks_to_rows, rows_to_masks, sink_reach, subset_rows
from .graph import Instance, TrivialZero, edges_within, members

DEFAULT_CAP = 24
DISTRIBUTION_CAP = 20
_CHUNK = 1 << 16


class EnumerationCapError(ValueError):
    """The requested enumeration is larger than the configured cap."""


def _scope(inst: Instance, V: int | None, E: int | None, lam: int | None):
    V = inst.dag.all_vertices if V is None else V
    E = inst.dag.all_edges if E is None else E
    E &= edges_within(inst.dag, V)
    lam = (1 << inst.s) if lam is None else lam
    return V, E, lam


def _chunks(inst: Instance, V: int, E: int, lam: int, cap: int):
    """Yield ``(rows, weights, hit, reach)`` for consecutive subset ranges."""
    edges = members(E)
    k = len(edges)
    if k > cap:
        raise EnumerationCapError(f"{k} edges exceeds the enumeration cap of {cap}")
    keep = np.array([1.0 - inst.q[e] for e in edges])
    fail = np.array([inst.q[e] for e in edges])
    columns = {e: j for j, e in enumerate(edges)}
    sources = members(lam & V)
    total = 1 << k
    for lo in range(0, total, _CHUNK):
        rows = subset_rows(lo, min(total, lo + _CHUNK), k)
        weights = np.prod(np.where(rows, keep, fail), axis=1) if k else np.ones(len(rows))
        reach = sink_reach(inst.dag, inst.t, V, columns, rows)
        hit = np.zeros(len(rows), dtype=bool)
        for v in sources:
            hit |= reach[v]
        yield edges, rows, weights, hit, reach


def edge_subset_hits(inst: Instance, cap: int = DEFAULT_CAP):
    """Per chunk of edge subsets of the whole instance, whether ``s`` reaches ``t``."""
    V, E, lam = _scope(inst, None, None, None)
    for *_, hit, _ in _chunks(inst, V, E, lam, cap):
        yield hit


def exact_reliability(
    inst: Instance | TrivialZero,
    V: int | None = None,
    E: int | None = None,
    lam: int | None = None,
    cap: int = DEFAULT_CAP,
) -> float:
    """Probability that some vertex of ``lam`` reaches ``t`` in ``(V, E)``.

    Defaults to the whole instance with ``lam = {s}``.  Chunk sums are combined
    in a fixed order with ``math.fsum``.  A :class:`TrivialZero` gives 0 and a
    ``lam`` containing ``t`` gives exactly 1.
    """
    if isinstance(inst, TrivialZero):
        return 0.0
    V, E, lam = _scope(inst, V, E, lam)
    if (lam & V) >> inst.t & 1:
        return 1.0
    partial = [math.fsum(w[hit]) for _, _, w, hit, _ in _chunks(inst, V, E, lam, cap)]
    return math.fsum(partial)


@dataclass
class ExactDistribution:
    """An enumerated distribution over edge subsets (as global edge masks)."""

    masks: list[int]
    probs: np.ndarray
    total: float
    m: int

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.masks, self.probs.tolist()))

    @property
    def rows(self) -> np.ndarray:
        if not hasattr(self, "_rows"):
            self._rows = masks_to_rows(self.masks, self.m)
        return self._rows

    def draw_indices(self, rng: np.random.Generator, size: int) -> np.ndarray:
        cdf = np.cumsum(self.probs)
        cdf[-1] = 1.0
        return np.minimum(np.searchsorted(cdf, rng.random(size), side="right"), len(cdf) - 1)

    def draw_rows(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.rows[self.draw_indices(rng, size)]

    def draw_masks(self, rng: np.random.Generator, size: int) -> list[int]:
        return [self.masks[i] for i in self.draw_indices(rng, size)]


def _distribution(inst, V, E, lam, cap, select) -> ExactDistribution:
    masks: list[int] = []
    weights = []
    for edges, rows, w, hit, reach in _chunks(inst, V, E, lam, min(cap, DISTRIBUTION_CAP)):
        keep = select(rows, hit, reach, {e: j for j, e in enumerate(edges)})
        keep &= w > 0
        if not keep.any():
            continue
        if not edges:
            masks.extend([0] * int(keep.sum()))
        elif inst.m <= 62:
            place = np.left_shift(np.int64(1), np.array(edges, dtype=np.int64))
            masks.extend(int(x) for x in rows[keep].astype(np.int64) @ place)
        else:
            for x in rows_to_masks(rows[keep]):
                masks.append(sum(1 << edges[j] for j in range(len(edges)) if x >> j & 1))
        weights.append(w[keep])
    if not masks:
        raise ValueError("the target distribution has empty support")
    weights = np.concatenate(weights)
    total = math.fsum(weights)
    return ExactDistribution(masks=masks, probs=weights / total, total=total, m=inst.m)


def exact_distribution(
    inst: Instance,
    V: int | None = None,
    E: int | None = None,
    lam: int | None = None,
    cap: int = DISTRIBUTION_CAP,
) -> ExactDistribution:
    """``pi_lam``: subsets of ``E`` weighted by survival probability, conditioned
    on ``lam`` reaching ``t``."""
    V, E, lam = _scope(inst, V, E, lam)
    return _distribution(inst, V, E, lam, cap, lambda rows, hit, reach, cols: hit.copy())


def vertex_distribution(inst: Instance, u: int, cap: int = DISTRIBUTION_CAP) -> ExactDistribution:
    """``pi_u`` over subgraphs of ``G_u``."""
    return exact_distribution(inst, inst.vertex_masks[u], inst.edge_masks[u], 1 << u, cap)


def exact_sample(inst, V, E, lam, rng: np.random.Generator) -> int:
    """One subgraph drawn exactly from ``pi_lam`` (enumeration + CDF inversion)."""
    return exact_distribution(inst, V, E, lam).draw_masks(rng, 1)[0]


def _delta(inst: Instance, E: int, lam: int, u: int) -> list[int]:
    return [e for e in inst.dag.in_edges[u] if E >> e & 1 and lam >> inst.edges[e][0] & 1]


def slice_distribution(
    inst: Instance, V: int, E: int, lam: int, u: int, cap: int = DISTRIBUTION_CAP
) -> ExactDistribution:
    """``pi^(i)_lam`` for the boundary vertex ``u``: some ``lam -> u`` edge is
    present and ``u`` reaches ``t``."""
    V, E, lam = _scope(inst, V, E, lam)
    delta = _delta(inst, E, lam, u)

    def select(rows, hit, reach, cols):
        entered = np.zeros(len(rows), dtype=bool)
        for e in delta:
            entered |= rows[:, cols[e]]
        return entered & reach[u]

    return _distribution(inst, V, E, lam, cap, select)


@dataclass
class UnionDecomposition:
    boundary: list[int]
    parts: list[float]
    total: float

    @property
    def d(self) -> int:
        return len(self.boundary)

    @property
    def ratio(self) -> float:
        """``R_lam / sum_i R^(i)``: the mean of the smallest-index indicator."""
        return self.total / math.fsum(self.parts)

    def sandwich_holds(self, tol: float = 1e-12) -> bool:
        s = math.fsum(self.parts)
        return self.total <= s + tol and s <= self.d * self.total + tol


def exact_union_decomposition(
    inst: Instance, V: int, E: int, lam: int, cap: int = DEFAULT_CAP
) -> UnionDecomposition:
    """Exact ``R^(i)_lam`` for every boundary vertex and exact ``R_lam``."""
    V, E, lam = _scope(inst, V, E, lam)
    if lam >> inst.t & 1:
        raise ValueError("t must not be in lam")
    bd = sorted({inst.edges[e][1] for e in members(E)
                 if lam >> inst.edges[e][0] & 1 and not lam >> inst.edges[e][1] & 1})
    if not bd:
        raise ValueError("lam has an empty boundary")
    deltas = {u: _delta(inst, E, lam, u) for u in bd}
    parts = {u: [] for u in bd}
    totals = []
    for edges, rows, w, hit, reach in _chunks(inst, V, E, lam, cap):
        cols = {e: j for j, e in enumerate(edges)}
        totals.append(math.fsum(w[hit]))
        for u in bd:
            entered = np.zeros(len(rows), dtype=bool)
            for e in deltas[u]:
                entered |= rows[:, cols[e]]
            parts[u].append(math.fsum(w[entered & reach[u]]))
    return UnionDecomposition(
        boundary=bd, parts=[math.fsum(parts[u]) for u in bd], total=math.fsum(totals)
    )


def empirical_tv(samples, exact: dict[int, float]) -> float:
    """Total variation distance between the empirical law of ``samples``
    (edge masks) and the distribution ``exact``."""
    samples = list(samples)
    if not samples:
        raise ValueError("no samples")
    counts: dict[int, int] = {}
    for x in samples:
        counts[x] = counts.get(x, 0) + 1
    n = len(samples)
    keys = set(counts) | set(exact)
    return 0.5 * math.fsum(abs(counts.get(k, 0) / n - exact.get(k, 0.0)) for k in keys)


def tv_distance(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * math.fsum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
