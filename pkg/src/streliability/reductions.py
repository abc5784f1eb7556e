"""Counting reductions around s-t reliability, with brute-force checkers.

* independent sets of a bipartite graph -> s-t disconnected vertex subsets of
  a DAG with failing vertices;
* failing vertices -> failing edges (vertex splitting, optional parallel bundles);
* s-t connected edge subsets of a DAG -> accepted strings of an NFA.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .bitrows import subset_rows
from .exact import EnumerationCapError, edge_subset_hits
from .graph import Dag, Instance, TrivialZero, members, preprocess

BRUTE_FORCE_CAP = 20
STRING_CAP = 24
SUBSET_CAP = 1 << 16
_CHUNK = 1 << 16


class NotBipartite(ValueError):
    pass


# ---------------------------------------------------------------- bipartite side


@dataclass(frozen=True)
class BipartiteGraph:
    left: tuple[str, ...]
    right: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]

    def __post_init__(self):
        L, R = set(self.left), set(self.right)
        if L & R:
            raise NotBipartite("a vertex is on both sides")
        for a, b in self.edges:
            if not ((a in L and b in R) or (a in R and b in L)):
                raise NotBipartite(f"edge {{{a}, {b}}} does not cross the partition")

    @property
    def vertices(self) -> tuple[str, ...]:
        return self.left + self.right

    def oriented_edges(self) -> list[tuple[str, str]]:
        """Edges as ``(left, right)`` pairs, duplicates removed, in input order."""
        L = set(self.left)
        out = []
        for a, b in self.edges:
            pair = (a, b) if a in L else (b, a)
            if pair not in out:
                out.append(pair)
        return out


def bipartition(vertices: Sequence[str], edges: Sequence[tuple[str, str]]) -> BipartiteGraph:
    """Two-colour an undirected graph; isolated vertices go to the left side."""
    adj: dict[str, list[str]] = {v: [] for v in vertices}
    for a, b in edges:
        if a == b:
            raise NotBipartite(f"self-loop at {a}")
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    side: dict[str, int] = {}
    for root in adj:
        if root in side:
            continue
        side[root] = 0
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for w in adj[v]:
                if w not in side:
                    side[w] = 1 - side[v]
                    queue.append(w)
                elif side[w] == side[v]:
                    raise NotBipartite(f"odd cycle through {v} and {w}")
    left = tuple(v for v in adj if side[v] == 0)
    right = tuple(v for v in adj if side[v] == 1)
    return BipartiteGraph(left, right, tuple((a, b) for a, b in edges))


def count_independent_sets_bruteforce(graph: BipartiteGraph, cap: int = BRUTE_FORCE_CAP) -> int:
    """Number of independent sets, the empty set included."""
    verts = graph.vertices
    k = len(verts)
    if k > cap:
        raise EnumerationCapError(f"{k} vertices exceeds the enumeration cap of {cap}")
    col = {v: i for i, v in enumerate(verts)}
    pairs = [(col[a], col[b]) for a, b in graph.edges]
    total = 0
    for lo in range(0, 1 << k, _CHUNK):
        rows = subset_rows(lo, min(1 << k, lo + _CHUNK), k)
        ok = np.ones(len(rows), dtype=bool)
        for a, b in pairs:
            ok &= ~(rows[:, a] & rows[:, b])
        total += int(ok.sum())
    return total


# ---------------------------------------------------------------- vertex failures


def _fresh(name: str, taken: set[str]) -> str:
    while name in taken:
        name += "'"
    return name


@dataclass(frozen=True)
class VertexFailureInstance:
    """A DAG whose vertices other than ``s`` and ``t`` fail independently; edges never fail."""

    vertices: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    fail: dict[str, float] = field(hash=False)
    s: str = "s"
    t: str = "t"

    def __post_init__(self):
        if self.s == self.t:
            raise ValueError("source and sink must differ")
        names = set(self.vertices)
        if self.s in names or self.t in names:
            raise ValueError("s and t are not failing vertices")
        if set(self.fail) != names:
            raise ValueError("every non-terminal vertex needs a failure probability")
        if any(not (0.0 <= p <= 1.0) for p in self.fail.values()):
            raise ValueError("failure probabilities must lie in [0, 1]")
        index = self.index
        for a, b in self.edges:
            if a not in index or b not in index:
                raise ValueError(f"edge ({a}, {b}) has an unknown endpoint")
        Dag(len(index), tuple(sorted({(index[a], index[b]) for a, b in self.edges})))

    @property
    def index(self) -> dict[str, int]:
        """``s`` is 0, the failing vertices follow in order, ``t`` is last."""
        names = (self.s,) + self.vertices + (self.t,)
        return {v: i for i, v in enumerate(names)}


def bis_to_unreliability(graph: BipartiteGraph) -> VertexFailureInstance:
    """``s`` feeds every left vertex, every right vertex feeds ``t``, graph
    edges point left to right, and every vertex fails with probability 1/2.

    A vertex subset is s-t disconnected exactly when it is independent in ``graph``.
    """
    taken = set(graph.vertices)
    s = _fresh("s", taken)
    t = _fresh("t", taken | {s})
    edges = [(s, v) for v in graph.left]
    edges += graph.oriented_edges()
    edges += [(v, t) for v in graph.right]
    return VertexFailureInstance(
        vertices=graph.vertices,
        edges=tuple(edges),
        fail={v: 0.5 for v in graph.vertices},
        s=s,
        t=t,
    )


def _surviving_reach(vf: VertexFailureInstance, rows: np.ndarray) -> np.ndarray:
    """Whether ``t`` is reached when row ``r`` marks the surviving vertices."""
    index = vf.index
    dag = Dag(len(index), tuple(sorted({(index[a], index[b]) for a, b in vf.edges})))
    reach: dict[int, np.ndarray] = {}
    for v in dag.topo:
        if v == 0:
            reach[v] = np.ones(len(rows), dtype=bool)
            continue
        hit = np.zeros(len(rows), dtype=bool)
        for e in dag.in_edges[v]:
            hit |= reach[dag.edges[e][0]]
        if v != len(index) - 1:
            hit &= rows[:, v - 1]
        reach[v] = hit
    return reach[len(index) - 1]


def _vertex_chunks(vf: VertexFailureInstance, cap: int):
    k = len(vf.vertices)
    if k > cap:
        raise EnumerationCapError(f"{k} failing vertices exceeds the enumeration cap of {cap}")
    for lo in range(0, 1 << k, _CHUNK):
        rows = subset_rows(lo, min(1 << k, lo + _CHUNK), k)
        yield rows, _surviving_reach(vf, rows)


def count_disconnected_subsets_bruteforce(vf: VertexFailureInstance, cap: int = BRUTE_FORCE_CAP) -> int:
    """Number of vertex subsets ``S`` such that ``s`` cannot reach ``t`` using
    only vertices of ``S`` (plus ``s`` and ``t``)."""
    return sum(int((~hit).sum()) for _, hit in _vertex_chunks(vf, cap))


def vertex_reliability_bruteforce(vf: VertexFailureInstance, cap: int = BRUTE_FORCE_CAP) -> float:
    """Probability that ``s`` reaches ``t`` through surviving vertices."""
    keep = np.array([1.0 - vf.fail[v] for v in vf.vertices])
    fail = np.array([vf.fail[v] for v in vf.vertices])
    parts = []
    for rows, hit in _vertex_chunks(vf, cap):
        w = np.prod(np.where(rows, keep, fail), axis=1) if len(keep) else np.ones(len(rows))
        parts.append(math.fsum(w[hit]))
    return math.fsum(parts)


def default_bundle_size(m: int, eta: float) -> int:
    """Bundle size ``k`` with ``m * 2**-k <= eta`` for bundles of q = 1/2 edges."""
    if not (eta > 0):
        raise ValueError("eta must be positive")
    return max(1, math.ceil(math.log2(max(m, 1) / eta)))


def split_edges(
    vf: VertexFailureInstance, k: int = 1, bundle_q: float | None = None
) -> list[tuple[str, str, float]]:
    """Raw edge list of the vertex-split graph.

    A failing vertex ``v`` becomes ``v -> v'`` with ``v``'s failure probability.
    Original edges get ``q = 0``, or ``k`` parallel copies of ``bundle_q`` each.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if bundle_q is not None and not (0.0 <= bundle_q <= 1.0):
        raise ValueError("bundle_q must lie in [0, 1]")
    taken = set(vf.index)
    out_name = {}
    raw = []
    for v in vf.vertices:
        out_name[v] = _fresh(v + "'", taken)
        taken.add(out_name[v])
        raw.append((v, out_name[v], vf.fail[v]))
    for a, b in vf.edges:
        tail = out_name.get(a, a)
        if bundle_q is None:
            raw.append((tail, b, 0.0))
        else:
            raw += [(tail, b, bundle_q)] * k
    return raw


def vertex_to_edge_failures(
    vf: VertexFailureInstance, k: int = 1, bundle_q: float | None = None, eps: float = 0.5
) -> Instance | TrivialZero:
    """Edge-failure instance with the same s-t reliability (exactly when
    ``bundle_q`` is None, up to ``m * bundle_q**k`` otherwise)."""
    return preprocess(split_edges(vf, k, bundle_q), vf.s, vf.t, eps=eps, vertices=vf.vertices)


# ---------------------------------------------------------------- NFA


@dataclass(frozen=True)
class Nfa:
    """Binary NFA.  ``delta[symbol][state]`` is a bitmask of successor states."""

    names: tuple[str, ...]
    start: int
    accept: int
    failure: int
    delta: tuple[tuple[int, ...], tuple[int, ...]]
    length: int

    @property
    def state_count(self) -> int:
        return len(self.names)

    def transitions(self) -> list[tuple[int, int, int]]:
        return [
            (a, sym, b)
            for sym in (0, 1)
            for a in range(self.state_count)
            for b in members(self.delta[sym][a])
        ]

    def accepts(self, word: Sequence[int]) -> bool:
        cur = 1 << self.start
        for sym in word:
            nxt = 0
            for a in members(cur):
                nxt |= self.delta[sym][a]
            cur = nxt
        return bool(cur >> self.accept & 1)


def dag_to_nfa(inst: Instance, shared: bool = False) -> Nfa:
    """Automaton whose accepted strings of length ``m + 1`` are the indicator
    vectors (followed by a final 1) of the s-t connected edge subsets of ``inst``.

    Edge ``e_i`` is edge ``i - 1`` of the instance, so edges are ordered by head,
    ties by tail.  ``s`` acts as ``e_0`` and ``t`` as ``e_{m+1}``.  To move from
    ``e_i`` to ``e_j`` the positions strictly between them are absorbed by a
    chain of auxiliary states; the last step enters ``e_j`` on 1 and fails on 0.
    With ``shared`` the chains into the same ``e_j`` are merged across ``i``,
    which keeps the state count quadratic in ``m``.
    """
    m = inst.m
    edges = inst.edges
    names = ["s"] + [f"e{i}" for i in range(1, m + 1)] + ["t", "fail"]
    accept, failure = m + 1, m + 2
    arcs: list[tuple[int, int, int]] = [(failure, 0, failure), (failure, 1, failure)]
    aux: dict[tuple, int] = {}

    def state(key, label):
        if key not in aux:
            aux[key] = len(names)
            names.append(label)
        return aux[key]

    def adjacent(i, j):
        if i == 0:
            return j <= m and edges[j - 1][0] == inst.s
        if j == m + 1:
            return edges[i - 1][1] == inst.t
        return edges[i - 1][1] == edges[j - 1][0]

    for i in range(m + 1):
        for j in range(i + 1, m + 2):
            if not adjacent(i, j):
                continue
            prev = i
            for k in range(i + 1, j):
                if shared:
                    cur = state((k, j), f"f{k}_{j}")
                else:
                    cur = state((k, i, j), f"f{k}_{i}_{j}")
                arcs += [(prev, 0, cur), (prev, 1, cur)]
                prev = cur
            arcs += [(prev, 1, j), (prev, 0, failure)]

    delta = ([0] * len(names), [0] * len(names))
    for a, sym, b in arcs:
        delta[sym][a] |= 1 << b
    return Nfa(
        names=tuple(names),
        start=0,
        accept=accept,
        failure=failure,
        delta=(tuple(delta[0]), tuple(delta[1])),
        length=m + 1,
    )


def count_accepting_strings(nfa: Nfa, length: int | None = None, cap: int = SUBSET_CAP) -> int:
    """Exact number of accepted strings of ``length`` (default ``nfa.length``),
    by dynamic programming over the reachable sets of the subset construction."""
    length = nfa.length if length is None else length
    layer = {1 << nfa.start: 1}
    images: dict[tuple[int, int], int] = {}
    for _ in range(length):
        nxt: dict[int, int] = {}
        for subset, count in layer.items():
            for sym in (0, 1):
                key = (subset, sym)
                img = images.get(key)
                if img is None:
                    img = 0
                    for a in members(subset):
                        img |= nfa.delta[sym][a]
                    images[key] = img
                if img:
                    nxt[img] = nxt.get(img, 0) + count
        if len(nxt) > cap:
            raise EnumerationCapError(f"more than {cap} reachable state subsets")
        layer = nxt
    return sum(c for subset, c in layer.items() if subset >> nfa.accept & 1)


def accepted_strings(nfa: Nfa, length: int | None = None, cap: int = STRING_CAP) -> list[str]:
    """All accepted strings of ``length`` by direct simulation (brute force)."""
    length = nfa.length if length is None else length
    if length > cap:
        raise EnumerationCapError(f"length {length} exceeds the enumeration cap of {cap}")
    out = []
    for x in range(1 << length):
        word = [(x >> (length - 1 - p)) & 1 for p in range(length)]
        if nfa.accepts(word):
            if word[-1] != 1:
                raise AssertionError("an accepted string ends in 0")
            out.append("".join(map(str, word)))
    return out


def connected_subsets_bruteforce(inst: Instance, cap: int = BRUTE_FORCE_CAP) -> int:
    """Number of edge subsets in which ``s`` reaches ``t``."""
    return sum(int(hit.sum()) for hit in edge_subset_hits(inst, cap))
