"""Validation suites: replicated experiments checked against the exact oracles.

Each check yields a :class:`Check` with the measured value and the bound it
was held to; a suite bundles checks with per-instance statistics into a
:class:`HarnessReport`, rendered as flat ``key = value`` text.  Every random
choice comes from a substream of the master seed keyed by suite, instance and
trial, so results do not depend on evaluation order.
"""

from __future__ import annotations

import math
import statistics
import time
import timeit
from dataclasses import dataclass, field

import numpy as np

from . import exact
from .config import Config, scaled_config
from .estimator import ArrayStore, EmptyStore, StoreSlice, estimate, lift_sample, nonempty_marginal
from .estimator import nonempty_subset_sample, union_context
from .fpras import run
from .generators import RawGraph, diamond_chain, layered, random_dag
from .graph import Instance, boundary, members, preprocess
from .io import render_report
from .reductions import (
    BipartiteGraph,
    VertexFailureInstance,
    accepted_strings,
    bis_to_unreliability,
    count_accepting_strings,
    count_disconnected_subsets_bruteforce,
    count_independent_sets_bruteforce,
    dag_to_nfa,
    vertex_reliability_bruteforce,
    vertex_to_edge_failures,
)
from .rng import STREAM_HARNESS, substream
from .sampler import InvariantViolation, Sampler, SamplerCrash, SamplerStats

SUITES = ("estimator", "sampler", "reductions", "end2end")
REFERENCE_SAMPLES = 100_000
TV_BOUND = 0.02

_SUITE_KEY = {name: i for i, name in enumerate(SUITES)} | {"cost": 10, "fuzz": 11, "corpus": 12}


def harness_rng(seed: int, *key) -> np.random.Generator:
    return substream(seed, STREAM_HARNESS, *[_SUITE_KEY.get(k, k) for k in key])


@dataclass
class Check:
    name: str
    passed: bool
    value: float | int | None = None
    bound: float | int | None = None


@dataclass
class HarnessReport:
    suite: str
    seed: int
    trials: int
    checks: list[Check] = field(default_factory=list)
    stats: dict[str, object] = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, value=None, bound=None) -> Check:
        c = Check(name, bool(passed), value, bound)
        self.checks.append(c)
        return c

    def render(self) -> str:
        items: dict[str, object] = {
            "suite": self.suite,
            "seed": self.seed,
            "trials": self.trials,
            "checks": len(self.checks),
            "failed": sum(not c.passed for c in self.checks),
            "passed": self.passed,
        }
        for c in self.checks:
            items[f"check.{c.name}"] = "pass" if c.passed else "FAIL"
            if c.value is not None:
                items[f"check.{c.name}.value"] = c.value
            if c.bound is not None:
                items[f"check.{c.name}.bound"] = c.bound
        items.update(self.stats)
        return render_report(items, {"metadata": {"wall_time": round(self.wall_time, 3)}})


def tv_bound(samples: int) -> float:
    """The TV tolerance, widened as ``1/sqrt(samples)`` below the reference size."""
    return TV_BOUND * math.sqrt(max(1.0, REFERENCE_SAMPLES / samples))


# ---------------------------------------------------------------- corpora


def named_instances() -> dict[str, Instance]:
    series = RawGraph([("s", "a", 0.5), ("a", "t", 0.5)])
    raws = {
        "diamond": diamond_chain(1),
        "series": series,
        "diamond-chain-3": diamond_chain(3),
        "layered-3x2": layered(3, 2),
    }
    return {name: preprocess(r.edges, r.s, r.t) for name, r in raws.items()}


def random_corpus(
    count: int, seed: int, max_edges: int = 8, min_edges: int = 2, n_range=(3, 7), q=(0.1, 0.9)
) -> list[Instance]:
    """``count`` preprocessed random DAGs with ``min_edges <= m <= max_edges``."""
    rng = harness_rng(seed, "corpus", max_edges, min_edges)
    out = []
    while len(out) < count:
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        density = float(rng.uniform(0.3, 0.8))
        raw = random_dag(n, density, q=q, seed=int(rng.integers(2**31)))
        inst = preprocess(raw.edges, raw.s, raw.t)
        if isinstance(inst, Instance) and min_edges <= inst.m <= max_edges:
            out.append(inst)
    return out


def random_source_set(inst: Instance, rng: np.random.Generator, tries: int = 50) -> int:
    """``{s}`` plus random non-sink vertices, preferring a boundary of two or
    more vertices; falls back to ``{s}``."""
    V, E = inst.dag.all_vertices, inst.dag.all_edges
    for _ in range(tries):
        lam = 1 << inst.s
        for v in range(inst.n):
            if v != inst.t and rng.random() < 0.3:
                lam |= 1 << v
        if len(members(boundary(inst.dag, lam, V, E))) >= 2:
            return lam
    return 1 << inst.s


# ---------------------------------------------------------------- estimator


def _vertex_rows(inst: Instance, u: int, count: int, rng) -> np.ndarray:
    if u == inst.t:
        return EmptyStore(count, inst.m).rows(0, count)
    return exact.vertex_distribution(inst, u).draw_rows(rng, count)


def check_union_estimator(report: HarnessReport, insts: list[Instance], trials: int, seed: int) -> None:
    """Mean smallest-index indicator with exact weights and perfect samples
    against ``R_lam / sum_i R^(i)``, within 4 standard errors; and the slice
    identity ``R^(i) = (1 - prod q) R_{u_i}`` to 1e-12."""
    worst_z = worst_identity = 0.0
    for k, inst in enumerate(insts):
        rng = harness_rng(seed, "estimator", k)
        lam = random_source_set(inst, rng)
        V, E = inst.dag.all_vertices, inst.dag.all_edges
        dec = exact.exact_union_decomposition(inst, V, E, lam)
        ctx = union_context(inst, V, E, lam)
        exact_r = [
            exact.exact_reliability(inst, inst.vertex_masks[u], inst.edge_masks[u], 1 << u)
            for u in ctx.boundary
        ]
        for i, r in enumerate(exact_r):
            gap = abs(dec.parts[i] - ctx.entry_factor(i) * r)
            worst_identity = max(worst_identity, gap)
        weights = [ctx.entry_factor(i) * r for i, r in enumerate(exact_r)]
        slices = [StoreSlice(ArrayStore(_vertex_rows(inst, u, trials, rng)), 0, trials) for u in ctx.boundary]
        z = estimate(slices, weights, trials, trials, ctx, rng)
        p = dec.ratio
        sigma = math.sqrt(p * (1 - p) / trials)
        dev = abs(z - p) / sigma if sigma > 0 else (0.0 if z == p else math.inf)
        worst_z = max(worst_z, dev)
        report.stats[f"estimator.{k}.m"] = inst.m
        report.stats[f"estimator.{k}.d"] = ctx.d
        report.stats[f"estimator.{k}.exact_ratio"] = p
        report.stats[f"estimator.{k}.mean"] = z
        report.add(f"unbiased.{k}", dev <= 4.0, round(dev, 3), 4.0)
    report.add("slice_identity", worst_identity <= 1e-12, worst_identity, 1e-12)
    report.stats["estimator.worst_sigma"] = worst_z


def check_lifting(report: HarnessReport, insts: list[Instance], samples: int, seed: int) -> None:
    """Lifted perfect samples of ``pi_{u_i}`` against the exact slice distribution."""
    bound = tv_bound(samples)
    for k, inst in enumerate(insts):
        rng = harness_rng(seed, "estimator", "lift", k)
        lam = random_source_set(inst, rng)
        V, E = inst.dag.all_vertices, inst.dag.all_edges
        bd = members(boundary(inst.dag, lam, V, E))
        u = bd[k % len(bd)]
        base = [0] * samples if u == inst.t else exact.vertex_distribution(inst, u).draw_masks(rng, samples)
        lifted = [lift_sample(inst, h, lam, u, V, E, rng) for h in base]
        target = exact.slice_distribution(inst, V, E, lam, u).as_dict()
        tv = exact.empirical_tv(lifted, target)
        report.stats[f"lift.{k}.support"] = len(target)
        report.stats[f"lift.{k}.tv"] = tv
        report.add(f"lift_tv.{k}", tv <= bound, round(tv, 5), round(bound, 5))


def _subset_weight(qs, subset: int) -> float:
    return math.prod((1 - q) if subset >> i & 1 else q for i, q in enumerate(qs))


def check_nonempty_sampler(report: HarnessReport, trials: int, seed: int, max_size: int = 10) -> None:
    """Conditional marginals against enumeration, and subset frequencies within 4 sigma."""
    rng = harness_rng(seed, "estimator", "nonempty")
    worst = 0.0
    for size in range(1, max_size + 1):
        qs = rng.uniform(0.05, 0.95, size).tolist()
        for prefix in range(1 << (size - 1)):
            # condition on the choices for items below i
            for i in range(size):
                fixed = prefix & ((1 << i) - 1)
                num = den = 0.0
                for rest in range(1 << (size - i)):
                    x = fixed | (rest << i)
                    if x == 0:
                        continue
                    w = _subset_weight(qs, x)
                    den += w
                    if x >> i & 1:
                        num += w
                worst = max(worst, abs(num / den - nonempty_marginal(qs, i, fixed != 0)))
    report.add("nonempty_marginals", worst <= 1e-12, worst, 1e-12)

    worst_dev = 0.0
    for size in (1, 2, 3, 4):
        qs = rng.uniform(0.1, 0.9, size).tolist()
        counts = np.zeros(1 << size)
        for _ in range(trials):
            counts[sum(1 << i for i in nonempty_subset_sample(qs, rng))] += 1
        norm = 1.0 - math.prod(qs)
        if counts[0]:
            worst_dev = math.inf
        for x in range(1, 1 << size):
            p = _subset_weight(qs, x) / norm
            sigma = math.sqrt(p * (1 - p) / trials)
            dev = abs(counts[x] / trials - p) / sigma if sigma > 0 else 0.0
            worst_dev = max(worst_dev, dev)
    report.add("nonempty_frequencies", worst_dev <= 4.0, round(float(worst_dev), 3), 4.0)


def nonempty_cost_fit(sizes=(1000, 2500, 4000, 5500, 7000, 8500, 10000), repeats: int = 15, seed: int = 0):
    """Best-of-``repeats`` time per draw of the non-empty subset sampler for
    each size; returns ``(sizes, seconds, slope, r_squared)``.

    Repeats go round-robin over the sizes so a burst of machine noise hits
    one round of every size rather than all rounds of one size; ``timeit``
    keeps the garbage collector out of the measurement."""
    rng = harness_rng(seed, "cost")
    qss = [rng.uniform(0.1, 0.9, size).tolist() for size in sizes]
    secs = [math.inf] * len(sizes)
    for _ in range(repeats):
        for k, qs in enumerate(qss):
            t = timeit.timeit(lambda: nonempty_subset_sample(qs, rng), number=10) / 10
            secs[k] = min(secs[k], t)
    x, y = np.asarray(sizes, dtype=float), np.asarray(secs)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    r2 = 1.0 - float(resid @ resid) / float(((y - y.mean()) ** 2).sum())
    return list(sizes), secs, float(slope), r2


# ---------------------------------------------------------------- sampler


def exact_counter(inst: Instance):
    cache: dict = {}

    def counter(V0: int, E0: int, lam: int) -> float:
        key = (V0, E0, lam)
        if key not in cache:
            cache[key] = exact.exact_reliability(inst, V0, E0, lam)
        return cache[key]

    return counter


def exact_sampler(inst: Instance, u: int | None = None, stats: SamplerStats | None = None) -> Sampler:
    """The sampler fed with exact reliabilities (``p0 = R_u``)."""
    u = inst.s if u is None else u
    p0 = exact.exact_reliability(inst, inst.vertex_masks[u], inst.edge_masks[u], 1 << u)
    config = scaled_config(inst.n, inst.eps)
    return Sampler(inst, u, exact_counter(inst), p0, config, stats=stats)


def check_sampler_distribution(report: HarnessReport, insts: dict[str, Instance], samples: int, seed: int) -> None:
    """Accepted samples against ``pi_s``; observed filter probabilities in [1/16, 1]."""
    bound = tv_bound(samples)
    lo = hi = None
    for k, (name, inst) in enumerate(insts.items()):
        stats = SamplerStats(filter_probs=[])
        sampler = exact_sampler(inst, stats=stats)
        rng = harness_rng(seed, "sampler", k)
        drawn = [sampler.sample(rng) for _ in range(samples)]
        tv = exact.empirical_tv(drawn, exact.vertex_distribution(inst, inst.s).as_dict())
        fmin, fmax = min(stats.filter_probs), max(stats.filter_probs)
        lo = fmin if lo is None else min(lo, fmin)
        hi = fmax if hi is None else max(hi, fmax)
        report.stats[f"sampler.{name}.m"] = inst.m
        report.stats[f"sampler.{name}.tv"] = tv
        report.stats[f"sampler.{name}.trajectories"] = stats.trajectories
        report.stats[f"sampler.{name}.acceptance"] = stats.samples / stats.trajectories
        report.stats[f"sampler.{name}.invariant_checks"] = stats.invariant_checks
        report.add(f"sampler_tv.{name}", tv <= bound, round(tv, 5), round(bound, 5))
    report.add("filter_min", lo >= 1 / 16, lo, 1 / 16)
    report.add("filter_max", hi <= 1.0 + 1e-9, hi, 1.0)


@dataclass
class FuzzResult:
    trajectories: int = 0
    invariant_checks: int = 0
    violations: int = 0
    crashes: int = 0


def fuzz_trajectories(count: int, seed: int, max_n: int = 10) -> FuzzResult:
    """Trajectories on random DAGs with an arbitrary positive counter and
    invariant checks on.  Such a counter can steer a trajectory into a dead
    end (an empty boundary); those are counted as crashes, not violations."""
    rng = harness_rng(seed, "fuzz")
    res = FuzzResult()
    config = scaled_config(max_n)
    while res.trajectories < count:
        raw = random_dag(int(rng.integers(3, max_n + 1)), float(rng.uniform(0.2, 0.7)),
                         seed=int(rng.integers(2**31)))
        inst = preprocess(raw.edges, raw.s, raw.t)
        salt = int(rng.integers(2**31))

        def counter(V0, E0, lam, _salt=salt):
            # deterministic, positive and otherwise arbitrary
            return 0.05 + (hash((V0, E0, lam, _salt)) % 1000) / 1000.0

        stats = SamplerStats()
        sampler = Sampler(inst, inst.s, counter, 0.5, config, stats=stats)
        for _ in range(min(200, count - res.trajectories)):
            try:
                sampler.trajectory(rng.random(inst.m + 1).tolist())
            except InvariantViolation:
                res.violations += 1
            except SamplerCrash:
                res.crashes += 1
            res.trajectories += 1
        res.invariant_checks += stats.invariant_checks
    return res


# ---------------------------------------------------------------- reductions


def random_bipartite(rng: np.random.Generator, max_vertices: int = 12) -> BipartiteGraph:
    nl = int(rng.integers(1, max_vertices))
    nr = int(rng.integers(1, max_vertices - nl + 1))
    left = tuple(f"l{i}" for i in range(nl))
    right = tuple(f"r{j}" for j in range(nr))
    p = float(rng.uniform(0.1, 0.7))
    edges = tuple((a, b) for a in left for b in right if rng.random() < p)
    return BipartiteGraph(left, right, edges)


def check_bijection(report: HarnessReport, count: int, seed: int) -> None:
    bad = 0
    for k in range(count):
        g = random_bipartite(harness_rng(seed, "reductions", "bis", k))
        a = count_independent_sets_bruteforce(g)
        b = count_disconnected_subsets_bruteforce(bis_to_unreliability(g))
        bad += a != b
    report.add("bis_bijection", bad == 0, bad, 0)


def check_vertex_split(report: HarnessReport, count: int, seed: int, k: int = 20, q: float = 0.5) -> None:
    worst_split = 0.0
    bundle_ok = True
    for i in range(count):
        rng = harness_rng(seed, "reductions", "split", i)
        raw = random_dag(int(rng.integers(3, 7)), float(rng.uniform(0.3, 0.8)), seed=int(rng.integers(2**31)))
        names = sorted({x for a, b, _ in raw.edges for x in (a, b)} - {raw.s, raw.t})
        vf = VertexFailureInstance(
            tuple(names), tuple((a, b) for a, b, _ in raw.edges),
            {v: float(rng.uniform(0.1, 0.9)) for v in names}, raw.s, raw.t,
        )
        target = vertex_reliability_bruteforce(vf)
        direct = exact.exact_reliability(vertex_to_edge_failures(vf))
        worst_split = max(worst_split, abs(direct - target))
        bundled = vertex_to_edge_failures(vf, k=k, bundle_q=q)
        m = len(vf.edges)
        bundle_ok &= abs(exact.exact_reliability(bundled) - direct) <= m * q**k
    report.add("vertex_split", worst_split <= 1e-12, worst_split, 1e-12)
    report.add("bundle_error", bundle_ok, None, f"m*{q}^{k}")


def check_nfa(report: HarnessReport, count: int, seed: int, max_edges: int = 10) -> None:
    insts = random_corpus(count, seed, max_edges=max_edges, min_edges=1, n_range=(2, 7), q=0.5)
    bad = bad_tail = 0
    for inst in insts:
        nfa = dag_to_nfa(inst)
        got = count_accepting_strings(nfa, inst.m + 1)
        want = exact.exact_reliability(inst) * 2**inst.m
        bad += got != want
        try:
            bad_tail += len(accepted_strings(nfa)) != got
        except AssertionError:
            bad_tail += 1
    report.add("nfa_equality", bad == 0, bad, 0)
    report.add("nfa_last_bit", bad_tail == 0, bad_tail, 0)


# ---------------------------------------------------------------- end to end


def end_to_end(inst: Instance, seeds, config: Config | None = None):
    config = config or scaled_config(inst.n, inst.eps)
    return [run(inst, config, s) for s in seeds]


def check_end_to_end(report: HarnessReport, insts: dict[str, Instance], seeds, config: Config | None = None) -> None:
    """Median within 5% of the exact value and at least 75% of seeds within 10%."""
    for name, inst in insts.items():
        truth = exact.exact_reliability(inst)
        runs = end_to_end(inst, seeds, config)
        est = [r.estimate for r in runs]
        med = statistics.median(est)
        rel = abs(med - truth) / truth
        within = sum(abs(x - truth) <= 0.1 * truth for x in est) / len(est)
        report.stats[f"end2end.{name}.exact"] = truth
        report.stats[f"end2end.{name}.estimates"] = est
        report.stats[f"end2end.{name}.median"] = med
        report.stats[f"end2end.{name}.relative_error"] = rel
        report.stats[f"end2end.{name}.crashes"] = sum(r.crashed for r in runs)
        report.stats[f"end2end.{name}.invariant_checks"] = sum(r.invariant_checks for r in runs)
        report.stats[f"end2end.{name}.duplicate_keys"] = sum(r.duplicate_keys for r in runs)
        report.add(f"median.{name}", rel <= 0.05, round(rel, 5), 0.05)
        report.add(f"within10.{name}", within >= 0.75, within, 0.75)


# ---------------------------------------------------------------- suites


def run_suite(suite: str, trials: int = 20_000, seed: int = 0) -> HarnessReport:
    """Run one suite.  ``trials`` scales the sample counts (Monte Carlo draws
    per check for estimator and sampler, seeds per instance divided by 1000
    for end2end, corpus size divided by 400 for reductions)."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    if trials < 1:
        raise ValueError("trials must be positive")
    started = time.perf_counter()
    report = HarnessReport(suite, seed, trials)
    if suite == "estimator":
        corpus = random_corpus(20, seed)
        check_union_estimator(report, corpus, trials, seed)
        check_lifting(report, corpus[:5], trials, seed)
        check_nonempty_sampler(report, trials, seed)
    elif suite == "sampler":
        insts = {"diamond": named_instances()["diamond"]}
        insts |= {f"random{k}": inst for k, inst in enumerate(random_corpus(3, seed))}
        check_sampler_distribution(report, insts, trials, seed)
        fuzz = fuzz_trajectories(min(trials, 10_000), seed)
        report.stats["fuzz.trajectories"] = fuzz.trajectories
        report.stats["fuzz.invariant_checks"] = fuzz.invariant_checks
        report.stats["fuzz.crashes"] = fuzz.crashes
        report.add("fuzz_invariants", fuzz.violations == 0, fuzz.violations, 0)
    elif suite == "reductions":
        count = max(5, trials // 400)
        check_bijection(report, count, seed)
        check_vertex_split(report, count, seed)
        check_nfa(report, count, seed)
    else:
        seeds = range(seed, seed + max(4, trials // 1000))
        check_end_to_end(report, named_instances(), seeds)
    report.wall_time = time.perf_counter() - started
    return report
