"""Union-of-sets estimation of set-to-sink reliability from stored samples.

``approx_count`` estimates the probability that a source set ``lam`` reaches
``t`` using, for every boundary vertex ``u_i``, an estimate of ``R_{u_i}`` and
a store of samples from ``pi_{u_i}``.  Each stored sample is lifted to a sample
of the i-th slice of the union and tested for being counted by its smallest
index; two rounds of this and a median over blocks give the estimate.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np

from .bitrows import sink_reach
from .config import ROUND2_SLICE_FACTOR, Config
from .graph import Instance, members, reach_from_set
from .rng import STREAM_COUNT, substream


class InputConsistencyError(AssertionError):
    """A boundary vertex lacks its estimate/samples or its subgraph is cut."""


class DegenerateWeights(ValueError):
    """All slice weights are zero."""


# -- non-empty subset sampling -------------------------------------------------

def nonempty_marginal(qs: Sequence[float], i: int, any_chosen: bool) -> float:
    """P(item ``i`` is chosen | choices for items ``< i``), for the law of
    independent inclusions with probabilities ``1 - q`` conditioned on a
    non-empty outcome."""
    keep = 1.0 - qs[i]
    if any_chosen:
        return keep
    rest = math.prod(qs[i:])
    return keep / (1.0 - rest)


def nonempty_subset_sample(qs: Sequence[float], rng: np.random.Generator) -> list[int]:
    """Random non-empty subset of ``range(len(qs))`` with weight proportional to
    ``prod_{i in D}(1-q_i) prod_{j not in D} q_j``.  Linear time."""
    n = len(qs)
    if n == 0:
        raise ValueError("need at least one item")
    suffix = [1.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] * qs[i]
    u = rng.random(n).tolist()
    out = []
    for i in range(n):
        keep = 1.0 - qs[i]
        p = keep if out else keep / (1.0 - suffix[i])
        if u[i] < p:
            out.append(i)
    return out


# -- sample stores ---------------------------------------------------------------

class SampleSource(Protocol):
    size: int

    def rows(self, start: int, count: int) -> np.ndarray: ...


class ArrayStore:
    """A fully materialized store."""

    def __init__(self, rows: np.ndarray):
        self._rows = np.asarray(rows, dtype=bool)
        self.size = len(self._rows)

    def rows(self, start: int, count: int) -> np.ndarray:
        if start < 0 or start + count > self.size:
            raise IndexError("read past the end of the store")
        return self._rows[start:start + count]


class EmptyStore:
    """``size`` copies of the empty subgraph (the sink's store)."""

    def __init__(self, size: int, m: int):
        self.size = size
        self.m = m

    def rows(self, start: int, count: int) -> np.ndarray:
        if start < 0 or start + count > self.size:
            raise IndexError("read past the end of the store")
        return np.zeros((count, self.m), dtype=bool)


class LazyStore:
    """Write-once store whose samples are produced in fixed-size chunks on first read.

    ``produce(chunk_index, count)`` must be a deterministic function of its
    arguments, so a sample's value does not depend on when it is first read.
    """

    def __init__(self, size: int, m: int, produce: Callable[[int, int], np.ndarray], chunk: int = 32):
        self.size = size
        self.m = m
        self.chunk = chunk
        self._produce = produce
        self._chunks: dict[int, np.ndarray] = {}

    @property
    def generated(self) -> int:
        return sum(len(c) for c in self._chunks.values())

    def _get(self, c: int) -> np.ndarray:
        block = self._chunks.get(c)
        if block is None:
            count = min(self.chunk, self.size - c * self.chunk)
            block = np.asarray(self._produce(c, count), dtype=bool)
            if block.shape != (count, self.m):
                raise ValueError("producer returned a block of the wrong shape")
            block.setflags(write=False)
            self._chunks[c] = block
        return block

    def rows(self, start: int, count: int) -> np.ndarray:
        if start < 0 or start + count > self.size:
            raise IndexError("read past the end of the store")
        if count == 0:
            return np.zeros((0, self.m), dtype=bool)
        first, last = start // self.chunk, (start + count - 1) // self.chunk
        parts = [self._get(c) for c in range(first, last + 1)]
        joined = parts[0] if len(parts) == 1 else np.concatenate(parts)
        offset = start - first * self.chunk
        return joined[offset:offset + count]

    def materialize(self) -> None:
        for c in range((self.size + self.chunk - 1) // self.chunk):
            self._get(c)


@dataclass(frozen=True)
class StoreSlice:
    store: SampleSource
    start: int
    length: int

    def take(self, count: int) -> np.ndarray:
        if count > self.length:
            raise IndexError("slice exhausted")
        return self.store.rows(self.start, count)


@dataclass(frozen=True)
class BlockView:
    round1: StoreSlice
    round2: StoreSlice


def partition_blocks(
    store: SampleSource, B: int, ell1: int, ell2: int, slice_factor: int = ROUND2_SLICE_FACTOR
) -> list[BlockView]:
    """Contiguous partition of a store into ``B`` blocks, each a round-1 slice of
    ``ell1`` samples followed by a round-2 slice of ``slice_factor * ell2``."""
    ell0 = ell1 + slice_factor * ell2
    if store.size != B * ell0:
        raise ValueError(f"store holds {store.size} samples, expected {B} * {ell0}")
    return [
        BlockView(StoreSlice(store, j * ell0, ell1), StoreSlice(store, j * ell0 + ell1, ell0 - ell1))
        for j in range(B)
    ]


# -- the union structure of one (V0, E0, lam) -------------------------------------

@dataclass
class UnionContext:
    """Boundary vertices, entering edges and lifting data for one input."""

    inst: Instance
    V: int
    E: int
    lam: int
    boundary: list[int]
    delta: list[list[int]]
    free: list[np.ndarray]
    columns: dict[int, int] = field(repr=False)

    @property
    def d(self) -> int:
        return len(self.boundary)

    def entry_factor(self, i: int) -> float:
        """``1 - prod q`` over the edges from ``lam`` into ``u_i``."""
        return 1.0 - math.prod(self.inst.q[e] for e in self.delta[i])


def union_context(inst: Instance, V: int, E: int, lam: int) -> UnionContext:
    entering: dict[int, list[int]] = {}
    for e in members(E):
        a, b = inst.edges[e]
        if lam >> a & 1 and not lam >> b & 1 and V >> b & 1:
            entering.setdefault(b, []).append(e)
    pos = {v: i for i, v in enumerate(inst.dag.topo)}
    boundary = sorted(entering, key=pos.__getitem__)
    delta = [entering[u] for u in boundary]
    free = []
    for u, dl in zip(boundary, delta):
        fixed = inst.edge_masks[u]
        for e in dl:
            fixed |= 1 << e
        free.append(np.array(members(E & ~fixed), dtype=np.int64))
    return UnionContext(inst, V, E, lam, boundary, delta, free, {e: e for e in members(E)})


def lift_rows(H: np.ndarray, i: int, ctx: UnionContext, rng: np.random.Generator) -> np.ndarray:
    """Vectorized lifting: rows of ``pi_{u_i}`` samples become rows of ``pi^(i)_lam``.

    Adds a non-empty subset of the entering edges and independent survivals of
    every edge of ``E`` outside ``E_{u_i}`` and the entering edges.
    """
    q = ctx.inst.q
    H = np.array(H, dtype=bool, copy=True)
    c = len(H)
    dl = ctx.delta[i]
    suffix = 1.0
    tails = []
    for e in reversed(dl):
        suffix *= q[e]
        tails.append(suffix)
    tails.reverse()
    U = rng.random((c, len(dl)))
    any_chosen = np.zeros(c, dtype=bool)
    for k, e in enumerate(dl):
        keep = 1.0 - q[e]
        p = np.where(any_chosen, keep, keep / (1.0 - tails[k]))
        x = U[:, k] < p
        H[:, e] = x
        any_chosen |= x
    free = ctx.free[i]
    if len(free):
        keep = 1.0 - np.asarray(q)[free]
        H[:, free] = rng.random((c, len(free))) < keep
    return H


def lift_sample(
    inst: Instance, H: int, lam: int, u: int, V: int, E: int, rng: np.random.Generator
) -> int:
    """Single-sample lifting of ``H ~ pi_u`` to ``pi^(i)_lam`` for boundary vertex ``u``."""
    dl = [e for e in inst.dag.in_edges[u] if E >> e & 1 and lam >> inst.edges[e][0] & 1]
    if not dl:
        raise ValueError(f"vertex {u} is not entered from lam")
    out = H
    for k in nonempty_subset_sample([inst.q[e] for e in dl], rng):
        out |= 1 << dl[k]
    fixed = inst.edge_masks[u]
    for e in dl:
        fixed |= 1 << e
    free = members(E & ~fixed)
    draws = rng.random(len(free))
    for e, x in zip(free, draws):
        if x < 1.0 - inst.q[e]:
            out |= 1 << e
    return out


# -- Estimate -------------------------------------------------------------------------

def smallest_index_hits(rows: np.ndarray, picks: np.ndarray, ctx: UnionContext) -> np.ndarray:
    """Whether each lifted row's own index is the smallest slice containing it."""
    reach = sink_reach(ctx.inst.dag, ctx.inst.t, ctx.V, ctx.columns, rows)
    inside = np.empty((len(rows), ctx.d), dtype=bool)
    for j, (u, dl) in enumerate(zip(ctx.boundary, ctx.delta)):
        inside[:, j] = rows[:, dl].any(axis=1) & reach[u]
    first = np.argmax(inside, axis=1)
    return inside.any(axis=1) & (first == picks)


def draw_indices(weights: Sequence[float], T: int, rng: np.random.Generator) -> np.ndarray:
    """``T`` indices proportional to ``weights`` by left-to-right CDF inversion."""
    w = np.asarray(weights, dtype=float)
    total = w.sum()
    if total <= 0:
        raise DegenerateWeights("all weights are zero")
    cdf = np.cumsum(w) / total
    cdf[-1] = 1.0
    return np.minimum(np.searchsorted(cdf, rng.random(T), side="right"), len(w) - 1)


def estimate(
    slices: Sequence[StoreSlice],
    weights: Sequence[float],
    ell_es: int,
    T: int,
    ctx: UnionContext,
    rng: np.random.Generator,
) -> float:
    """Average of ``T`` smallest-index indicators.

    Trial ``k`` picks ``i`` proportional to ``weights``, consumes the next
    sample of slice ``i`` and lifts it.  Returns 0 if some slice would be read
    past ``ell_es`` samples.  Trials are exchangeable, so they are grouped by
    index and evaluated in bulk.
    """
    d = len(weights)
    if d == 0 or d != len(slices) or d != ctx.d:
        raise ValueError("one slice and one weight per boundary vertex")
    picks = draw_indices(weights, T, rng)
    counts = np.bincount(picks, minlength=d)
    if (counts > ell_es).any():
        return 0.0
    if d == 1:
        return 1.0
    lifted, owner = [], []
    for i in range(d):
        c = int(counts[i])
        if c:
            lifted.append(lift_rows(slices[i].take(c), i, ctx, rng))
            owner.append(np.full(c, i))
    hits = smallest_index_hits(np.concatenate(lifted), np.concatenate(owner), ctx)
    return float(hits.sum()) / T


# -- ApproxCount ----------------------------------------------------------------------

class MemoTable:
    """Results of ``approx_count`` keyed by ``(V0, E0, lam)`` bitmasks."""

    def __init__(self):
        self._values: dict[tuple[int, int, int], float] = {}
        self.computed: Counter = Counter()
        self.hits = 0

    def __contains__(self, key) -> bool:
        return key in self._values

    def __len__(self) -> int:
        return len(self._values)

    def get(self, key):
        value = self._values.get(key)
        if value is not None:
            self.hits += 1
        return value

    def put(self, key, value: float) -> None:
        if key in self._values:
            raise AssertionError(f"memo key computed twice: {key}")
        self.computed[key] += 1
        self._values[key] = value

    @property
    def duplicates(self) -> int:
        return sum(1 for c in self.computed.values() if c > 1)


def approx_count(
    inst: Instance,
    V0: int,
    E0: int,
    lam: int,
    estimates: Mapping[int, float],
    stores: Mapping[int, SampleSource],
    config: Config,
    memo: MemoTable,
    seed: int,
) -> float:
    """Estimate of the probability that ``lam`` reaches ``t`` in ``(V0, E0)``."""
    key = (V0, E0, lam)
    cached = memo.get(key)
    if cached is not None:
        return cached
    value = _approx_count(inst, V0, E0, lam, estimates, stores, config, seed)
    memo.put(key, value)
    return value


def _approx_count(inst, V0, E0, lam, estimates, stores, config, seed) -> float:
    if lam >> inst.t & 1:
        return 1.0
    if not reach_from_set(inst.dag, lam, V0, E0) >> inst.t & 1:
        return 0.0
    ctx = union_context(inst, V0, E0, lam)
    for u in ctx.boundary:
        if u not in estimates or u not in stores:
            raise InputConsistencyError(f"no estimate or samples for boundary vertex {u}")
        if inst.edge_masks[u] & ~E0:
            raise InputConsistencyError(f"E_{u} is not contained in the input edge set")
    weights = [ctx.entry_factor(i) * estimates[u] for i, u in enumerate(ctx.boundary)]
    total = math.fsum(weights)
    if total <= 0:
        return 0.0
    rng = substream(seed, STREAM_COUNT, V0, E0, lam)
    views = [partition_blocks(stores[u], config.B, config.ell1, config.ell2) for u in ctx.boundary]
    r2_len = config.ell0 - config.ell1
    Q = []
    for j in range(config.B):
        z_hat = estimate([v[j].round1 for v in views], weights, config.ell1, config.ell1, ctx, rng)
        T2 = config.round2_trials(z_hat, inst.n)
        z = estimate([v[j].round2 for v in views], weights, r2_len, T2, ctx, rng)
        Q.append(z * total)
    return float(np.median(Q))
