"""Reverse-topological driver producing the reliability estimate for the source."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .config import Config
from .estimator import EmptyStore, LazyStore, MemoTable, approx_count
from .graph import Instance, TrivialZero
from .rng import STREAM_SAMPLE, substream
from .sampler import Sampler, SamplerCrash, SamplerStats


@dataclass
class VertexStats:
    approx_count_calls: int = 0
    memo_hits: int = 0
    samples: int = 0
    trajectories: int = 0
    rejections: int = 0


@dataclass
class RunReport:
    estimate: float
    seed: int
    config: dict
    crashed: bool = False
    crash_kind: str | None = None
    crash_vertex: int | None = None
    trivial_zero: bool = False
    memo_keys: int = 0
    duplicate_keys: int = 0
    invariant_checks: int = 0
    per_vertex: dict[int, VertexStats] = field(default_factory=dict)
    wall_time: float = 0.0


class FprasRun:
    """State of one run: estimates, sample stores, memo table and samplers.

    Every random choice comes from a substream named by what it is for (a
    memo key, or a vertex and chunk of its store), so the result does not
    depend on the order in which stores and memo entries are first touched.
    """

    def __init__(
        self,
        inst: Instance,
        config: Config,
        seed: int,
        lazy: bool = True,
        chunk: int = 32,
        check_invariants: bool = True,
    ):
        self.inst = inst
        self.config = config
        self.seed = seed
        self.lazy = lazy
        self.chunk = chunk
        self.check = check_invariants
        self.estimates: dict[int, float] = {}
        self.stores: dict = {}
        self.memo = MemoTable()
        self.samplers: dict[int, Sampler] = {}
        self.stats = {v: VertexStats() for v in range(inst.n)}
        self.sampler_stats = {v: SamplerStats() for v in range(inst.n)}
        self._written: list[int] = []

    def count(self, V0: int, E0: int, lam: int, origin: int) -> float:
        st = self.stats[origin]
        st.approx_count_calls += 1
        if (V0, E0, lam) in self.memo:
            st.memo_hits += 1
        return approx_count(
            self.inst, V0, E0, lam, self.estimates, self.stores, self.config, self.memo, self.seed
        )

    def _record(self, v: int, value: float) -> None:
        pos = {w: i for i, w in enumerate(self.inst.dag.topo)}
        if any(pos[w] <= pos[v] for w in self._written):
            raise AssertionError(f"vertex {v} processed out of reverse topological order")
        self._written.append(v)
        self.estimates[v] = value

    def _produce(self, v: int):
        sampler = self.samplers[v]
        m = self.inst.m

        def produce(chunk_index: int, count: int) -> np.ndarray:
            rng = substream(self.seed, STREAM_SAMPLE, v, chunk_index)
            rows = np.zeros((count, m), dtype=bool)
            for r in range(count):
                mask = sampler.sample(rng)
                while mask:
                    low = mask & -mask
                    rows[r, low.bit_length() - 1] = True
                    mask ^= low
            return rows

        return produce

    def run(self) -> float:
        inst, config = self.inst, self.config
        order = inst.dag.topo
        t = inst.t
        self._record(t, 1.0)
        self.stores[t] = EmptyStore(config.ell, inst.m)
        for v in reversed(order[:-1]):
            V, E = inst.vertex_masks[v], inst.edge_masks[v]
            self._record(v, self.count(V, E, 1 << v, v))
            self.samplers[v] = Sampler(
                inst, v,
                lambda V0, E0, lam, _v=v: self.count(V0, E0, lam, _v),
                self.estimates[v], config,
                check_invariants=self.check, stats=self.sampler_stats[v],
            )
            store = LazyStore(config.ell, inst.m, self._produce(v), chunk=self.chunk)
            self.stores[v] = store
            if not self.lazy:
                store.materialize()
        return self.estimates[inst.s]


def run(
    inst: Instance | TrivialZero,
    config: Config,
    seed: int,
    lazy: bool = True,
    chunk: int = 32,
    check_invariants: bool = True,
) -> RunReport:
    """Estimate the s-t reliability of ``inst``.

    With ``lazy=True`` a vertex's samples are produced only when some estimate
    reads them; values of read samples are identical to the eager run, but a
    crash inside a never-read sample goes unnoticed.
    """
    started = time.perf_counter()
    if isinstance(inst, TrivialZero):
        return RunReport(estimate=0.0, seed=seed, config=config.as_dict(), trivial_zero=True)
    state = FprasRun(inst, config, seed, lazy=lazy, chunk=chunk, check_invariants=check_invariants)
    report = RunReport(estimate=0.0, seed=seed, config=config.as_dict())
    try:
        report.estimate = state.run()
    except SamplerCrash as crash:
        report.crashed = True
        report.crash_kind = crash.kind.value
        report.crash_vertex = crash.vertex
        report.estimate = 0.0
    for v, st in state.stats.items():
        ss = state.sampler_stats[v]
        st.samples, st.trajectories, st.rejections = ss.samples, ss.trajectories, ss.rejections
    report.per_vertex = state.stats
    report.memo_keys = len(state.memo)
    report.duplicate_keys = state.memo.duplicates
    report.invariant_checks = sum(ss.invariant_checks for ss in state.sampler_stats.values())
    report.wall_time = time.perf_counter() - started
    return report
