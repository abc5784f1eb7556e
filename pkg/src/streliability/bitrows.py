"""Conversions between int edge masks and boolean row matrices."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .graph import Dag


def masks_to_rows(masks: Iterable[int], m: int) -> np.ndarray:
    masks = list(masks)
    rows = np.zeros((len(masks), m), dtype=bool)
    for r, mask in enumerate(masks):
        while mask:
            low = mask & -mask
            rows[r, low.bit_length() - 1] = True
            mask ^= low
    return rows


def rows_to_masks(rows: np.ndarray) -> list[int]:
    rows = np.asarray(rows, dtype=bool)
    m = rows.shape[1]
    if m <= 62:
        weights = np.left_shift(np.int64(1), np.arange(m, dtype=np.int64))
        return [int(x) for x in rows.astype(np.int64) @ weights]
    packed = np.packbits(rows, axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


def subset_rows(lo: int, hi: int, k: int) -> np.ndarray:
    """Rows ``lo..hi-1`` of the ``2**k`` subset table: row ``x`` has bit ``j`` of ``x``."""
    idx = np.arange(lo, hi, dtype=np.int64)
    return ((idx[:, None] >> np.arange(k, dtype=np.int64)) & 1).astype(bool)


def sink_reach(dag: Dag, t: int, V: int, columns: dict[int, int], rows: np.ndarray) -> dict[int, np.ndarray]:
    """For each vertex of ``V``, which rows contain a path from it to ``t``.

    ``columns`` maps global edge ids to columns of ``rows``; edges not listed
    are absent from every row.  Vertices are swept in reverse topological order.
    """
    n_rows = rows.shape[0]
    reach = {t: np.ones(n_rows, dtype=bool)}
    for v in reversed(dag.topo):
        if v == t or not V >> v & 1:
            continue
        acc = np.zeros(n_rows, dtype=bool)
        for e in dag.out_edges[v]:
            col = columns.get(e)
            if col is None:
                continue
            w = dag.edges[e][1]
            if w in reach:
                acc |= rows[:, col] & reach[w]
        reach[v] = acc
    return reach
