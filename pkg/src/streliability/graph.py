"""DAG representation, reachability helpers and instance preprocessing.

Vertex sets and edge sets are passed around as Python ``int`` bitmasks: bit ``v``
of a vertex mask is vertex ``v`` and bit ``e`` of an edge mask is edge ``e`` of
the canonical edge ordering.  After preprocessing, vertex ids coincide with
topological positions, so "smallest in topological order" is "smallest id".
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Sequence


class CycleError(ValueError):
    """Raised when a graph that must be acyclic contains a directed cycle."""


def mask_of(items: Iterable[int]) -> int:
    mask = 0
    for i in items:
        mask |= 1 << i
    return mask


def members(mask: int) -> list[int]:
    """Indices of the set bits of ``mask`` in increasing order."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def popcount(mask: int) -> int:
    return bin(mask).count("1")


@dataclass(frozen=True)
class Dag:
    """A simple DAG on vertices ``0..vertex_count-1`` with an ordered edge list.

    The position of an edge in ``edges`` is its id; edge masks index this list.
    """

    vertex_count: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        for a, b in self.edges:
            if not (0 <= a < self.vertex_count and 0 <= b < self.vertex_count):
                raise ValueError(f"edge ({a}, {b}) has an endpoint out of range")
        topological_order(self)  # raises CycleError

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def topo(self) -> tuple[int, ...]:
        return tuple(topological_order(self))

    @cached_property
    def out_edges(self) -> tuple[tuple[int, ...], ...]:
        out = [[] for _ in range(self.vertex_count)]
        for e, (a, _) in enumerate(self.edges):
            out[a].append(e)
        return tuple(tuple(x) for x in out)

    @cached_property
    def in_edges(self) -> tuple[tuple[int, ...], ...]:
        inc = [[] for _ in range(self.vertex_count)]
        for e, (_, b) in enumerate(self.edges):
            inc[b].append(e)
        return tuple(tuple(x) for x in inc)

    @cached_property
    def out_mask(self) -> tuple[int, ...]:
        return tuple(mask_of(es) for es in self.out_edges)

    @cached_property
    def in_mask(self) -> tuple[int, ...]:
        return tuple(mask_of(es) for es in self.in_edges)

    @property
    def all_vertices(self) -> int:
        return (1 << self.vertex_count) - 1

    @property
    def all_edges(self) -> int:
        return (1 << len(self.edges)) - 1


def topological_order(dag: Dag) -> list[int]:
    """Kahn's algorithm, always expanding the smallest-id zero-indegree vertex."""
    n = dag.vertex_count
    indeg = [0] * n
    succ: list[list[int]] = [[] for _ in range(n)]
    for a, b in dag.edges:
        indeg[b] += 1
        succ[a].append(b)
    heap = [v for v in range(n) if indeg[v] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        v = heapq.heappop(heap)
        order.append(v)
        for w in succ[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(heap, w)
    if len(order) != n:
        raise CycleError("graph contains a directed cycle")
    return order


def reach_set(dag: Dag, u: int, V: int, E: int) -> int:
    """Vertices of ``V`` reachable from ``u`` using edges of ``E`` only."""
    seen = 1 << u
    queue = deque([u])
    heads = dag.edges
    out = dag.out_edges
    while queue:
        v = queue.popleft()
        for e in out[v]:
            if E >> e & 1:
                w = heads[e][1]
                if V >> w & 1 and not seen >> w & 1:
                    seen |= 1 << w
                    queue.append(w)
    return seen


def reach_from_set(dag: Dag, sources: int, V: int, E: int) -> int:
    seen = sources
    for v in members(sources):
        seen |= reach_set(dag, v, V, E)
    return seen


def reaches_sink_set(dag: Dag, t: int, V: int, H: int) -> int:
    """Vertices of ``V`` that reach ``t`` inside the edge set ``H`` (reverse BFS)."""
    seen = 1 << t
    queue = deque([t])
    edges = dag.edges
    inc = dag.in_edges
    while queue:
        v = queue.popleft()
        for e in inc[v]:
            if H >> e & 1:
                w = edges[e][0]
                if V >> w & 1 and not seen >> w & 1:
                    seen |= 1 << w
                    queue.append(w)
    return seen


def boundary(dag: Dag, lam: int, V: int, E2: int) -> int:
    """Vertices outside ``lam`` entered by some ``E2`` edge leaving ``lam``."""
    out = 0
    for e in members(E2):
        a, b = dag.edges[e]
        if lam >> a & 1 and not lam >> b & 1 and V >> b & 1:
            out |= 1 << b
    return out


def edges_within(dag: Dag, V: int) -> int:
    mask = 0
    for e, (a, b) in enumerate(dag.edges):
        if V >> a & 1 and V >> b & 1:
            mask |= 1 << e
    return mask


@dataclass(frozen=True)
class TrivialZero:
    """Preprocessing outcome when the source cannot reach the sink at all."""

    reason: str = "source cannot reach sink"
    reliability: float = 0.0


@dataclass(frozen=True, eq=True)
class Instance:
    """A preprocessed s-t reliability instance.

    Vertex ids are topological positions (``s == 0``, ``t == n - 1``); edges are
    sorted by (head, tail).  ``labels`` maps ids back to the original names.
    """

    dag: Dag
    q: tuple[float, ...]
    s: int
    t: int
    eps: float = 0.5
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if len(self.q) != self.dag.edge_count:
            raise ValueError("one failure probability per edge is required")
        if any(not (0.0 <= x < 1.0) for x in self.q):
            raise ValueError("failure probabilities must lie in [0, 1)")
        if not (0.0 < self.eps < 1.0):
            raise ValueError("eps must lie in (0, 1)")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(v) for v in range(self.dag.vertex_count)))

    @property
    def n(self) -> int:
        return self.dag.vertex_count

    @property
    def m(self) -> int:
        return self.dag.edge_count

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return self.dag.edges

    @cached_property
    def vertex_masks(self) -> tuple[int, ...]:
        """``V_u`` for every vertex ``u``."""
        back = reaches_sink_set(self.dag, self.t, self.dag.all_vertices, self.dag.all_edges)
        return tuple(
            reach_set(self.dag, u, self.dag.all_vertices, self.dag.all_edges) & back
            if back >> u & 1 else 0
            for u in range(self.n)
        )

    @cached_property
    def edge_masks(self) -> tuple[int, ...]:
        """``E_u`` for every vertex ``u``."""
        return tuple(edges_within(self.dag, V) for V in self.vertex_masks)

    @cached_property
    def log_keep(self) -> tuple[float, ...]:
        return tuple(math.log1p(-x) for x in self.q)

    @cached_property
    def log_fail(self) -> tuple[float, ...]:
        return tuple(math.log(x) if x > 0 else -math.inf for x in self.q)

    def labeled_edges(self) -> list[tuple[str, str, float]]:
        return [(self.labels[a], self.labels[b], self.q[e]) for e, (a, b) in enumerate(self.edges)]


def relevant_subgraph(inst: Instance, u: int) -> tuple[int, int]:
    """``(V_u, E_u)``: vertices reachable from ``u`` that also reach ``t``."""
    return inst.vertex_masks[u], inst.edge_masks[u]


def preprocess(
    edges: Sequence[tuple[Hashable, Hashable, float]],
    s: Hashable,
    t: Hashable,
    eps: float = 0.5,
    vertices: Iterable[Hashable] = (),
) -> Instance | TrivialZero:
    """Turn a raw multigraph into a canonical :class:`Instance`.

    Parallel edges are merged (failure probabilities multiply), edges with
    ``q == 1`` are dropped, and the graph is restricted to vertices that lie on
    some s-t path.  Vertex labels are kept as strings.
    """
    if s == t:
        raise ValueError("source and sink must differ")
    index: dict[Hashable, int] = {}

    def idx(x):
        if x not in index:
            index[x] = len(index)
        return index[x]

    idx(s)
    for v in vertices:
        idx(v)
    raw = []
    for a, b, q in edges:
        q = float(q)
        if not (0.0 <= q <= 1.0):
            raise ValueError(f"failure probability {q} outside [0, 1]")
        raw.append((idx(a), idx(b), q))
    idx(t)
    n_raw = len(index)
    Dag(n_raw, tuple(sorted({(a, b) for a, b, _ in raw})))  # raises CycleError

    merged: dict[tuple[int, int], float] = {}
    for a, b, q in raw:
        merged[(a, b)] = merged.get((a, b), 1.0) * q
    kept = [(a, b, q) for (a, b), q in merged.items() if q < 1.0]

    full = Dag(n_raw, tuple((a, b) for a, b, _ in kept))
    si, ti = index[s], index[t]
    fwd = reach_set(full, si, full.all_vertices, full.all_edges)
    if not fwd >> ti & 1:
        return TrivialZero()
    back = reaches_sink_set(full, ti, full.all_vertices, full.all_edges)
    relevant = fwd & back
    sub = [(a, b, q) for a, b, q in kept if relevant >> a & 1 and relevant >> b & 1]

    # renumber by a deterministic topological order of the relevant part
    old_ids = members(relevant)
    compact = {v: i for i, v in enumerate(old_ids)}
    tmp = Dag(len(old_ids), tuple((compact[a], compact[b]) for a, b, _ in sub))
    order = topological_order(tmp)
    pos = {v: i for i, v in enumerate(order)}
    new_of = {old: pos[compact[old]] for old in old_ids}
    label_of = {i: str(lbl) for lbl, i in index.items()}
    labels = [""] * len(old_ids)
    for old in old_ids:
        labels[new_of[old]] = label_of[old]

    triples = sorted((new_of[b], new_of[a], q) for a, b, q in sub)
    dag = Dag(len(old_ids), tuple((a, b) for b, a, _ in triples))
    return Instance(
        dag=dag,
        q=tuple(q for _, _, q in triples),
        s=new_of[si],
        t=new_of[ti],
        eps=eps,
        labels=tuple(labels),
    )


def reprocess(inst: Instance) -> Instance | TrivialZero:
    """Run :func:`preprocess` on an already-built instance (used for idempotence)."""
    return preprocess(
        inst.labeled_edges(), inst.labels[inst.s], inst.labels[inst.t], inst.eps,
        vertices=inst.labels,
    )
