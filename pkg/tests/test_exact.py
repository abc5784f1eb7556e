import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import build, eid, instances, vid
from streliability.exact import (
    EnumerationCapError,
    empirical_tv,
    exact_distribution,
    exact_reliability,
    exact_sample,
    exact_union_decomposition,
    slice_distribution,
    tv_distance,
    vertex_distribution,
)
from streliability.graph import Instance, TrivialZero, boundary, mask_of


def test_reference_values(single_edge, series, diamond):
    assert exact_reliability(single_edge) == pytest.approx(0.7, abs=1e-12)
    assert exact_reliability(series) == pytest.approx(0.25, abs=1e-12)
    assert exact_reliability(diamond) == pytest.approx(0.4375, abs=1e-12)
    assert exact_reliability(TrivialZero()) == 0.0


def test_cap():
    edges = [("s", f"v{i}", 0.5) for i in range(13)] + [(f"v{i}", "t", 0.5) for i in range(13)]
    inst = build(edges)
    with pytest.raises(EnumerationCapError):
        exact_reliability(inst, cap=24)


def test_sink_in_lam_and_unreachable(diamond):
    d = diamond.dag
    assert exact_reliability(diamond, lam=1 << diamond.t) == 1.0
    assert exact_reliability(diamond, E=1 << eid(diamond, "s", "a")) == 0.0
    assert d.all_edges  # sanity


def test_exact_sample_supports(single_edge, series, diamond):
    rng = np.random.default_rng(1)
    for inst in (single_edge, series):
        V, E = inst.dag.all_vertices, inst.dag.all_edges
        assert {exact_sample(inst, V, E, 1 << inst.s, rng) for _ in range(20)} == {E}
    dist = exact_distribution(diamond)
    assert len(dist.masks) == 7
    assert np.allclose(dist.probs, 1 / 7)


def test_exact_distribution_draws_match(diamond):
    dist = exact_distribution(diamond)
    draws = dist.draw_masks(np.random.default_rng(0), 70_000)
    assert empirical_tv(draws, dist.as_dict()) < 0.01


def test_zero_reliability_distribution_errors(diamond):
    with pytest.raises(ValueError):
        exact_distribution(diamond, E=1 << eid(diamond, "s", "a"))


def test_union_decomposition_diamond(diamond):
    d = diamond.dag
    dec = exact_union_decomposition(diamond, d.all_vertices, d.all_edges, 1 << diamond.s)
    assert dec.parts == pytest.approx([0.25, 0.25], abs=1e-12)
    assert dec.total == pytest.approx(7 / 16, abs=1e-12)
    assert dec.ratio == pytest.approx(7 / 8)
    assert dec.sandwich_holds()


def test_union_decomposition_single_edge(single_edge):
    d = single_edge.dag
    dec = exact_union_decomposition(single_edge, d.all_vertices, d.all_edges, 1)
    assert dec.d == 1
    assert dec.parts[0] == pytest.approx(0.7) and dec.total == pytest.approx(0.7)


def test_union_decomposition_two_long_paths():
    inst = build([("s", "a", 0.5), ("a", "x", 0.5), ("x", "t", 0.5),
                  ("s", "b", 0.5), ("b", "y", 0.5), ("y", "t", 0.5)])
    d = inst.dag
    dec = exact_union_decomposition(inst, d.all_vertices, d.all_edges, 1)
    assert dec.parts == pytest.approx([1 / 8, 1 / 8], abs=1e-12)
    assert dec.total == pytest.approx(1 - (7 / 8) ** 2, abs=1e-12)


def test_union_decomposition_contract(diamond):
    d = diamond.dag
    with pytest.raises(ValueError):
        exact_union_decomposition(diamond, d.all_vertices, d.all_edges, 1 << diamond.t)
    with pytest.raises(ValueError):
        exact_union_decomposition(diamond, d.all_vertices, 1 << eid(diamond, "a", "t"), 1)


def test_slice_distribution_diamond(diamond):
    d = diamond.dag
    a = vid(diamond, "a")
    dist = slice_distribution(diamond, d.all_vertices, d.all_edges, 1, a)
    sa, at = eid(diamond, "s", "a"), eid(diamond, "a", "t")
    assert all(m >> sa & 1 and m >> at & 1 for m in dist.masks)
    assert len(dist.masks) == 4 and np.allclose(dist.probs, 0.25)


def test_tv_examples():
    assert tv_distance({1: 1.0}, {1: 0.5, 2: 0.5}) == 0.5
    assert empirical_tv([1, 1, 1, 2], {1: 0.5, 2: 0.5}) == 0.25
    with pytest.raises(ValueError):
        empirical_tv([], {1: 1.0})


@given(instances(max_m=8))
def test_reliability_is_sum_of_weights(inst):
    total = 0.0
    V, E = inst.dag.all_vertices, inst.dag.all_edges
    dist = exact_distribution(inst) if exact_reliability(inst) > 0 else None
    if dist is not None:
        total = dist.total
    assert exact_reliability(inst) == pytest.approx(total, abs=1e-12)
    assert exact_reliability(inst, V, E, 1 << inst.t) == 1.0


@given(instances(max_m=8), st.data())
def test_monotone_in_failure_probabilities(inst, data):
    e = data.draw(st.integers(0, inst.m - 1))
    lower = data.draw(st.floats(0.0, inst.q[e]))
    q = list(inst.q)
    q[e] = lower
    better = Instance(inst.dag, tuple(q), inst.s, inst.t)
    assert exact_reliability(better) >= exact_reliability(inst) - 1e-12


@given(instances(max_m=8), st.data())
def test_vertex_subgraph_integrates_out(inst, data):
    u = data.draw(st.integers(0, inst.n - 1))
    d = inst.dag
    local = exact_reliability(inst, inst.vertex_masks[u], inst.edge_masks[u], 1 << u)
    full = exact_reliability(inst, d.all_vertices, d.all_edges, 1 << u)
    assert local == pytest.approx(full, abs=1e-12)


@given(instances(max_m=8), st.data())
def test_slice_identity_and_sandwich(inst, data):
    d = inst.dag
    lam = 1 | mask_of(data.draw(st.sets(st.integers(1, inst.n - 2))) if inst.n > 2 else set())
    if not boundary(d, lam, d.all_vertices, d.all_edges):
        return
    dec = exact_union_decomposition(inst, d.all_vertices, d.all_edges, lam)
    assert dec.sandwich_holds()
    for u, part in zip(dec.boundary, dec.parts):
        entering = [e for e in d.in_edges[u] if lam >> d.edges[e][0] & 1]
        r_u = exact_reliability(inst, inst.vertex_masks[u], inst.edge_masks[u], 1 << u)
        assert part == pytest.approx((1 - math.prod(inst.q[e] for e in entering)) * r_u, abs=1e-12)


def test_vertex_distribution_of_sink(diamond):
    dist = vertex_distribution(diamond, diamond.t)
    assert dist.masks == [0] and dist.probs.tolist() == [1.0]
    assert Counter(dist.draw_masks(np.random.default_rng(0), 5)) == Counter({0: 5})
