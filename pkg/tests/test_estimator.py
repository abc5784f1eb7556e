import math
import statistics

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import eid, vid
from streliability.bitrows import masks_to_rows
from streliability.config import Config, scaled_config
from streliability.estimator import (
    ArrayStore,
    DegenerateWeights,
    EmptyStore,
    InputConsistencyError,
    LazyStore,
    MemoTable,
    StoreSlice,
    approx_count,
    draw_indices,
    estimate,
    lift_rows,
    lift_sample,
    nonempty_marginal,
    nonempty_subset_sample,
    partition_blocks,
    smallest_index_hits,
    union_context,
)
from streliability.exact import exact_reliability, vertex_distribution


def frequencies(qs, n, seed=0):
    rng = np.random.default_rng(seed)
    counts = {}
    for _ in range(n):
        key = tuple(nonempty_subset_sample(qs, rng))
        counts[key] = counts.get(key, 0) + 1
    return {k: v / n for k, v in counts.items()}


def within_4_sigma(freq, p, n):
    return abs(freq - p) <= 4 * math.sqrt(p * (1 - p) / n) + 1e-12


# -- non-empty subsets -----------------------------------------------------------


def test_nonempty_single_item():
    assert frequencies([0.3], 200) == {(0,): 1.0}


def test_nonempty_two_fair_items():
    n = 30_000
    f = frequencies([0.5, 0.5], n)
    assert set(f) == {(0,), (1,), (0, 1)}
    assert all(within_4_sigma(x, 1 / 3, n) for x in f.values())


def test_nonempty_certain_item():
    n = 20_000
    f = frequencies([0.0, 0.5], n)
    assert (1,) not in f
    assert within_4_sigma(f[(0,)], 0.5, n) and within_4_sigma(f[(0, 1)], 0.5, n)


def test_nonempty_needs_items():
    with pytest.raises(ValueError):
        nonempty_subset_sample([], np.random.default_rng(0))


@given(st.lists(st.floats(0.0, 0.95), min_size=1, max_size=6), st.data())
def test_nonempty_marginals_match_enumeration(qs, data):
    size = len(qs)
    i = data.draw(st.integers(0, size - 1))
    fixed = data.draw(st.integers(0, (1 << i) - 1)) if i else 0
    num = den = 0.0
    for rest in range(1 << (size - i)):
        x = fixed | (rest << i)
        if x == 0:
            continue
        w = math.prod((1 - q) if x >> k & 1 else q for k, q in enumerate(qs))
        den += w
        num += w if x >> i & 1 else 0.0
    if den == 0:
        return
    assert nonempty_marginal(qs, i, fixed != 0) == pytest.approx(num / den, abs=1e-12)


# -- stores ------------------------------------------------------------------------


def test_partition_blocks_contiguous():
    store = ArrayStore(np.arange(12)[:, None] % 2 == 0)
    blocks = partition_blocks(store, B=2, ell1=2, ell2=1, slice_factor=4)
    assert [(b.round1.start, b.round1.length, b.round2.start, b.round2.length) for b in blocks] == [
        (0, 2, 2, 4), (6, 2, 8, 4)]
    one = partition_blocks(ArrayStore(np.zeros((6, 1), bool)), B=1, ell1=2, ell2=1, slice_factor=4)
    assert one[0].round1.start == 0 and one[0].round2.start + one[0].round2.length == 6
    with pytest.raises(ValueError):
        partition_blocks(store, B=3, ell1=2, ell2=1, slice_factor=4)


def test_slice_exhaustion():
    s = StoreSlice(ArrayStore(np.zeros((5, 2), bool)), 1, 3)
    assert s.take(3).shape == (3, 2)
    with pytest.raises(IndexError):
        s.take(4)


def test_lazy_store_is_read_order_independent():
    def produce(c, count):
        rng = np.random.default_rng(c)
        return rng.random((count, 3)) < 0.5

    a = LazyStore(100, 3, produce, chunk=8)
    b = LazyStore(100, 3, produce, chunk=8)
    late = a.rows(50, 20)
    early = b.rows(0, 100)
    assert np.array_equal(late, early[50:70])
    assert a.generated < 100
    a.materialize()
    assert a.generated == 100 and np.array_equal(a.rows(0, 100), early)
    with pytest.raises(IndexError):
        a.rows(90, 20)


def test_lazy_store_shape_check():
    bad = LazyStore(10, 3, lambda c, k: np.zeros((k, 2), bool), chunk=4)
    with pytest.raises(ValueError):
        bad.rows(0, 1)


def test_empty_store():
    assert not EmptyStore(4, 3).rows(1, 3).any()


# -- lifting and Estimate -------------------------------------------------------------


def test_lift_sample_diamond(diamond):
    V, E = diamond.dag.all_vertices, diamond.dag.all_edges
    a = vid(diamond, "a")
    sa, at, sb, bt = (eid(diamond, *p) for p in [("s", "a"), ("a", "t"), ("s", "b"), ("b", "t")])
    rng = np.random.default_rng(3)
    n = 20_000
    out = [lift_sample(diamond, 1 << at, 1, a, V, E, rng) for _ in range(n)]
    assert all(h >> sa & 1 and h >> at & 1 for h in out)
    for e in (sb, bt):
        assert within_4_sigma(sum(h >> e & 1 for h in out) / n, 0.5, n)


def test_lift_sample_needs_boundary_vertex(diamond):
    V, E = diamond.dag.all_vertices, diamond.dag.all_edges
    with pytest.raises(ValueError):
        lift_sample(diamond, 0, 1, diamond.t, V, E, np.random.default_rng(0))


def test_lift_without_free_edges(series):
    V, E = series.dag.all_vertices, series.dag.all_edges
    ctx = union_context(series, V, E, 1)
    H = masks_to_rows([1 << eid(series, "a", "t")] * 50, series.m)
    assert lift_rows(H, 0, ctx, np.random.default_rng(0)).all()


def test_lift_rows_law(diamond):
    V, E = diamond.dag.all_vertices, diamond.dag.all_edges
    ctx = union_context(diamond, V, E, 1)
    base = vertex_distribution(diamond, ctx.boundary[0])
    n = 20_000
    rows = lift_rows(base.draw_rows(np.random.default_rng(1), n), 0, ctx, np.random.default_rng(2))
    assert np.all(rows[:, ctx.delta[0]].any(axis=1))
    for e in ctx.free[0]:
        assert within_4_sigma(rows[:, e].mean(), 0.5, n)


def test_draw_indices():
    rng = np.random.default_rng(0)
    idx = draw_indices([1.0, 0.0, 3.0], 40_000, rng)
    assert 1 not in set(idx.tolist())
    assert within_4_sigma((idx == 2).mean(), 0.75, 40_000)
    with pytest.raises(DegenerateWeights):
        draw_indices([0.0, 0.0], 5, rng)


def test_smallest_index_hits(diamond):
    V, E = diamond.dag.all_vertices, diamond.dag.all_edges
    ctx = union_context(diamond, V, E, 1)
    rows = masks_to_rows([E, E], diamond.m)
    assert smallest_index_hits(rows, np.array([0, 1]), ctx).tolist() == [True, False]


def _exact_slices(inst, ctx, size, rng):
    slices = []
    for u in ctx.boundary:
        rows = vertex_distribution(inst, u).draw_rows(rng, size)
        slices.append(StoreSlice(ArrayStore(rows), 0, size))
    return slices


def test_estimate_single_slice_is_one(series):
    V, E = series.dag.all_vertices, series.dag.all_edges
    ctx = union_context(series, V, E, 1)
    rng = np.random.default_rng(0)
    assert estimate(_exact_slices(series, ctx, 10, rng), [0.1], 10, 10, ctx, rng) == 1.0


def test_estimate_exhausted_slice_is_zero(diamond):
    V, E = diamond.dag.all_vertices, diamond.dag.all_edges
    ctx = union_context(diamond, V, E, 1)
    rng = np.random.default_rng(0)
    assert estimate(_exact_slices(diamond, ctx, 5, rng), [0.25, 0.25], 5, 100, ctx, rng) == 0.0


def test_estimate_diamond_mean(diamond):
    V, E = diamond.dag.all_vertices, diamond.dag.all_edges
    ctx = union_context(diamond, V, E, 1)
    rng = np.random.default_rng(5)
    n = 50_000
    z = estimate(_exact_slices(diamond, ctx, n, rng), [0.25, 0.25], n, n, ctx, rng)
    assert within_4_sigma(z, 7 / 8, n)


def test_estimate_argument_checks(diamond):
    V, E = diamond.dag.all_vertices, diamond.dag.all_edges
    ctx = union_context(diamond, V, E, 1)
    with pytest.raises(ValueError):
        estimate([], [], 1, 1, ctx, np.random.default_rng(0))


# -- ApproxCount ---------------------------------------------------------------------


def exact_inputs(inst, config, seed=0):
    rng = np.random.default_rng(seed)
    estimates, stores = {}, {}
    for u in range(inst.n):
        estimates[u] = exact_reliability(inst, inst.vertex_masks[u], inst.edge_masks[u], 1 << u)
        if u == inst.t:
            stores[u] = EmptyStore(config.ell, inst.m)
        else:
            stores[u] = ArrayStore(vertex_distribution(inst, u).draw_rows(rng, config.ell))
    return estimates, stores


def test_approx_count_trivial_cases(diamond):
    config = Config(B=1, ell1=1, ell2=1, sample_T=1)
    V, E = diamond.dag.all_vertices, diamond.dag.all_edges
    memo = MemoTable()
    assert approx_count(diamond, V, E, 1 << diamond.t | 1, {}, {}, config, memo, 0) == 1.0
    assert approx_count(diamond, V, 1 << eid(diamond, "s", "a"), 1, {}, {}, config, memo, 0) == 0.0
    assert len(memo) == 2


def test_approx_count_input_consistency(diamond):
    config = Config(B=1, ell1=1, ell2=1, sample_T=1)
    V, E = diamond.dag.all_vertices, diamond.dag.all_edges
    with pytest.raises(InputConsistencyError):
        approx_count(diamond, V, E, 1, {}, {}, config, MemoTable(), 0)
    estimates, stores = exact_inputs(diamond, config)
    # a stays on the boundary of {s}, but E_a = {(a, t)} is not inside the input
    E_cut = E & ~(1 << eid(diamond, "a", "t"))
    with pytest.raises(InputConsistencyError):
        approx_count(diamond, V, E_cut, 1, estimates, stores, config, MemoTable(), 0)


def test_memo_table():
    memo = MemoTable()
    memo.put((1, 2, 3), 0.5)
    assert memo.get((1, 2, 3)) == 0.5 and memo.hits == 1
    assert memo.get((1, 2, 4)) is None
    with pytest.raises(AssertionError):
        memo.put((1, 2, 3), 0.5)
    assert memo.duplicates == 0


def test_approx_count_memo_and_determinism(diamond):
    config = scaled_config(diamond.n)
    estimates, stores = exact_inputs(diamond, config)
    V, E = diamond.dag.all_vertices, diamond.dag.all_edges
    memo = MemoTable()
    x = approx_count(diamond, V, E, 1, estimates, stores, config, memo, 11)
    y = approx_count(diamond, V, E, 1, estimates, stores, config, memo, 11)
    z = approx_count(diamond, V, E, 1, estimates, stores, config, MemoTable(), 11)
    assert x == y == z and memo.hits == 1


def test_approx_count_diamond_exact_inputs(diamond):
    config = scaled_config(diamond.n)
    estimates, stores = exact_inputs(diamond, config)
    V, E = diamond.dag.all_vertices, diamond.dag.all_edges
    values = [approx_count(diamond, V, E, 1, estimates, stores, config, MemoTable(), seed)
              for seed in range(100)]
    assert abs(statistics.median(values) - 7 / 16) <= 0.05 * 7 / 16
