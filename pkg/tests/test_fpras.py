import statistics

import numpy as np
import pytest

from conftest import build
from streliability import Config, TrivialZero, preprocess, run, scaled_config
from streliability.fpras import FprasRun
from streliability.rng import substream


def test_diamond_median_close(diamond):
    config = scaled_config(diamond.n)
    est = [run(diamond, config, seed).estimate for seed in range(15)]
    assert abs(statistics.median(est) - 0.4375) <= 0.05 * 0.4375


def test_single_edge_is_exact(single_edge):
    # with one boundary vertex every estimate is a product of exact factors
    report = run(single_edge, scaled_config(2), 0)
    assert report.estimate == pytest.approx(0.7, abs=1e-12)


def test_series_is_exact(series):
    assert run(series, scaled_config(series.n), 3).estimate == pytest.approx(0.25, abs=1e-12)


def test_same_seed_same_report(diamond):
    config = scaled_config(diamond.n)
    a, b = run(diamond, config, 42), run(diamond, config, 42)
    assert a.estimate == b.estimate
    assert a.memo_keys == b.memo_keys and a.invariant_checks == b.invariant_checks
    assert run(diamond, config, 43).estimate != a.estimate


def test_lazy_and_eager_agree():
    inst = build([("s", "a", 0.4), ("s", "b", 0.5), ("a", "b", 0.3), ("a", "t", 0.6), ("b", "t", 0.2)])
    config = scaled_config(inst.n, B=3, ell1=16, ell2=2)
    lazy = run(inst, config, 7)
    eager = run(inst, config, 7, lazy=False, chunk=5)
    assert lazy.estimate == eager.estimate
    assert not lazy.crashed and not eager.crashed


def test_trivial_zero_report():
    out = preprocess([("s", "a", 0.5), ("b", "t", 0.5)], "s", "t")
    report = run(out, scaled_config(2), 0)
    assert isinstance(out, TrivialZero)
    assert report.trivial_zero and report.estimate == 0.0 and not report.crashed


def test_crash_reports_zero(diamond):
    # a single attempt per sample is almost surely rejected somewhere
    config = Config(B=3, ell1=32, ell2=4, sample_T=1)
    report = run(diamond, config, 0)
    assert report.crashed and report.estimate == 0.0
    assert report.crash_kind == "AllRejected" and report.crash_vertex is not None


def test_no_duplicate_keys_and_stats(diamond):
    report = run(diamond, scaled_config(diamond.n), 5)
    assert report.duplicate_keys == 0 and report.memo_keys > 0
    assert report.invariant_checks > 0
    s = report.per_vertex[diamond.s]
    assert s.approx_count_calls >= 1
    assert sum(v.samples for v in report.per_vertex.values()) > 0
    assert report.wall_time > 0


def test_reverse_topological_order_enforced(diamond):
    state = FprasRun(diamond, scaled_config(diamond.n), 0)
    state._record(diamond.t, 1.0)
    state._record(diamond.s, 0.5)
    with pytest.raises(AssertionError):
        state._record(diamond.t - 1, 0.5)


def test_substreams_are_keyed():
    a = substream(1, 2, 3, 1 << 200).random(4)
    b = substream(1, 2, 3, 1 << 200).random(4)
    c = substream(1, 2, 3, 1 << 201).random(4)
    d = substream(2, 2, 3, 1 << 200).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c) and not np.array_equal(a, d)
