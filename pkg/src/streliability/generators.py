"""Instance generators: diamond chains, layered graphs, series-parallel and random DAGs.

Generators return raw labelled edge lists ``[(tail, head, q), ...]`` together
with the source and sink labels; pass them through ``preprocess``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class RawGraph:
    edges: list[tuple[str, str, float]]
    s: str = "s"
    t: str = "t"


def _q_values(count: int, q, rng: np.random.Generator | None) -> list[float]:
    if isinstance(q, tuple):
        lo, hi = q
        if rng is None:
            raise ValueError("a q range needs a seed")
        return [float(x) for x in rng.uniform(lo, hi, size=count)]
    return [float(q)] * count


def diamond_chain(k: int, q=0.5, seed: int | None = None) -> RawGraph:
    """``k`` diamonds in series: two parallel two-edge paths per stage."""
    if k < 1:
        raise ValueError("need at least one diamond")
    hubs = ["s"] + [f"v{i}" for i in range(1, k)] + ["t"]
    pairs = []
    for i in range(k):
        a, b = f"a{i + 1}", f"b{i + 1}"
        pairs += [(hubs[i], a), (hubs[i], b), (a, hubs[i + 1]), (b, hubs[i + 1])]
    qs = _q_values(len(pairs), q, np.random.default_rng(seed) if seed is not None else None)
    return RawGraph([(x, y, z) for (x, y), z in zip(pairs, qs)])


def layered(layers: int, width: int, q=0.5, seed: int | None = None) -> RawGraph:
    """``s``, then ``layers`` layers of ``width`` vertices fully joined between
    consecutive layers, then ``t``."""
    if layers < 1 or width < 1:
        raise ValueError("layers and width must be positive")
    names = [[f"L{i}_{j}" for j in range(width)] for i in range(1, layers + 1)]
    pairs = [("s", v) for v in names[0]]
    for cur, nxt in zip(names, names[1:]):
        pairs += [(a, b) for a in cur for b in nxt]
    pairs += [(v, "t") for v in names[-1]]
    qs = _q_values(len(pairs), q, np.random.default_rng(seed) if seed is not None else None)
    return RawGraph([(x, y, z) for (x, y), z in zip(pairs, qs)])


def series_parallel(edges: int, q=0.5, seed: int = 0) -> RawGraph:
    """Random two-terminal series-parallel DAG built by ``edges - 1`` random
    series or parallel expansions of a single ``s -> t`` edge."""
    if edges < 1:
        raise ValueError("need at least one edge")
    rng = np.random.default_rng(seed)
    pairs = [("s", "t")]
    fresh = 0
    while len(pairs) < edges:
        i = int(rng.integers(len(pairs)))
        a, b = pairs[i]
        fresh += 1
        mid = f"x{fresh}"
        if edges - len(pairs) >= 2 and rng.random() < 0.5:
            # parallel branch, subdivided so the graph stays simple
            pairs += [(a, mid), (mid, b)]
        else:
            pairs[i:i + 1] = [(a, mid), (mid, b)]
    qs = _q_values(len(pairs), q, rng)
    return RawGraph([(x, y, z) for (x, y), z in zip(pairs, qs)])


def random_dag(
    n: int,
    density: float,
    q=(0.1, 0.9),
    seed: int = 0,
    allow_trivial: bool = False,
    max_tries: int = 1000,
) -> RawGraph:
    """Each forward pair ``i < j`` of ``n`` ordered vertices is an edge with
    probability ``density``; vertex 0 is ``s`` and vertex ``n-1`` is ``t``.

    Draws are repeated until ``s`` reaches ``t`` unless ``allow_trivial``.
    """
    if n < 2 or not (0 < density <= 1):
        raise ValueError("need n >= 2 and density in (0, 1]")
    rng = np.random.default_rng(seed)
    names = ["s"] + [f"v{i}" for i in range(1, n - 1)] + ["t"]
    for _ in range(max_tries):
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < density]
        qs = _q_values(len(pairs), q, rng)
        if allow_trivial or _connects(n, pairs):
            return RawGraph([(names[i], names[j], z) for (i, j), z in zip(pairs, qs)])
    raise RuntimeError("no s-t connected draw found")


def _connects(n: int, pairs) -> bool:
    seen = {0}
    for i, j in sorted(pairs):
        if i in seen:
            seen.add(j)
    return n - 1 in seen
