"""Edge-by-edge subgraph sampler for ``pi_u`` with a rejection filter.

Edges of ``G_u`` are scanned in an order driven by the current reach set
``lam``: the next edge enters the smallest boundary vertex.  Each scanned edge
is kept with its conditional marginal, computed from two reliability
estimates, and the trajectory probability is tracked so that a final filter
can correct for errors in those estimates.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .config import Config
from .graph import Instance, boundary, members

Counter = Callable[[int, int, int], float]

FILTER_SLACK = 1e-9


class CrashKind(enum.Enum):
    EMPTY_BOUNDARY = "EmptyBoundary"
    ZERO_DENOMINATOR = "ZeroDenominator"
    FILTER_OVERFLOW = "FilterOverflow"
    ALL_REJECTED = "AllRejected"


class SamplerCrash(Exception):
    def __init__(self, kind: CrashKind, vertex: int):
        super().__init__(f"{kind.value} while sampling for vertex {vertex}")
        self.kind = kind
        self.vertex = vertex


class InvariantViolation(AssertionError):
    pass


def conditional_marginal(q_e: float, c0: float, c1: float) -> float:
    """Probability of keeping an edge given the estimates without (c0) and with (c1) it.

    A zero denominator raises ``ZeroDivisionError``; the sampler maps it to a crash.
    """
    den = q_e * c0 + (1.0 - q_e) * c1
    if den <= 0:
        raise ZeroDivisionError("q_e * c0 + (1 - q_e) * c1 == 0")
    return (1.0 - q_e) * c1 / den


class Step(NamedTuple):
    edge: int
    target: int
    prob: float
    lam_in: int
    rest: int
    log_keep: float
    log_drop: float


@dataclass
class Trajectory:
    edges: int
    log_p: float
    log_w: float
    filter_prob: float
    factors: list[float] = field(default_factory=list)


@dataclass
class SamplerStats:
    trajectories: int = 0
    rejections: int = 0
    samples: int = 0
    invariant_checks: int = 0
    filter_probs: list[float] | None = None


class Sampler:
    """Sampler for ``pi_u`` given a reliability counter and the estimate ``p0 ~ R_u``.

    ``counter(V0, E0, lam)`` estimates the ``lam``-to-``t`` reliability.  Its
    values are assumed fixed for a given input, so scan decisions are cached per
    ``(unscanned edges, lam)`` state.
    """

    def __init__(
        self,
        inst: Instance,
        u: int,
        counter: Counter,
        p0: float,
        config: Config,
        check_invariants: bool = True,
        stats: SamplerStats | None = None,
    ):
        if u == inst.t:
            raise ValueError("the sink has a trivial sample space")
        self.inst = inst
        self.u = u
        self.counter = counter
        self.p0 = p0
        self.config = config
        self.check = check_invariants
        self.stats = stats if stats is not None else SamplerStats()
        self.V = inst.vertex_masks[u]
        self.E = inst.edge_masks[u]
        if not self.V >> inst.t & 1:
            raise ValueError(f"vertex {u} cannot reach the sink")
        pos = {v: i for i, v in enumerate(inst.dag.topo)}
        self._scan = sorted(members(self.E), key=lambda e: (pos[inst.edges[e][1]], pos[inst.edges[e][0]]))
        self._size = len(self._scan)
        self._steps: dict[tuple[int, int], Step] = {}
        self._crashes: dict[tuple[int, int], CrashKind] = {}
        self._log_den = math.log(config.filter_denominator)

    def _consistent(self, E0: int, lam: int) -> None:
        for w in members(boundary(self.inst.dag, lam, self.V, E0)):
            if self.inst.edge_masks[w] & ~E0:
                raise InvariantViolation(f"E_{w} not inside the counter input")

    def step(self, rest: int, lam: int) -> Step:
        """Scan decision for the state with unscanned edges ``rest`` and reach set ``lam``."""
        key = (rest, lam)
        st = self._steps.get(key)
        if st is not None:
            return st
        kind = self._crashes.get(key)
        if kind is None:
            st = self._compute_step(rest, lam)
            if isinstance(st, Step):
                self._steps[key] = st
                return st
            kind = self._crashes[key] = st
        raise SamplerCrash(kind, self.u)

    def _compute_step(self, rest: int, lam: int) -> Step | CrashKind:
        inst = self.inst
        if self.check:
            scanned = self.E & ~rest
            for w in members(boundary(inst.dag, lam, self.V, rest)):
                self.stats.invariant_checks += 1
                if scanned & inst.edge_masks[w]:
                    raise InvariantViolation(f"scanned edge inside E_{w} for boundary vertex {w}")
        for e in self._scan:
            if rest >> e & 1:
                a, b = inst.edges[e]
                if lam >> a & 1 and not lam >> b & 1:
                    break
        else:
            return CrashKind.EMPTY_BOUNDARY
        rest_after = rest & ~(1 << e)
        lam_in = lam | (1 << b)
        if self.check:
            self._consistent(rest_after, lam)
            self._consistent(rest_after, lam_in)
        c0 = self.counter(self.V, rest_after, lam)
        c1 = self.counter(self.V, rest_after, lam_in)
        q = inst.q[e]
        try:
            prob = conditional_marginal(q, c0, c1)
        except ZeroDivisionError:
            return CrashKind.ZERO_DENOMINATOR
        return Step(
            edge=e,
            target=b,
            prob=prob,
            lam_in=lam_in,
            rest=rest_after,
            log_keep=math.log(prob) if prob > 0 else -math.inf,
            log_drop=math.log1p(-prob) if prob < 1 else -math.inf,
        )

    def trajectory(self, draws: list[float], record: bool = False) -> Trajectory:
        """One pass over ``G_u`` driven by ``draws`` (one uniform per edge)."""
        inst = self.inst
        t = inst.t
        q = inst.q
        keep, fail = inst.log_keep, inst.log_fail
        out_mask = inst.dag.out_mask
        steps = self._steps
        check = self.check
        rest, lam, chosen = self.E, 1 << self.u, 0
        log_p = log_w = 0.0
        factors = []
        k = 0
        while not lam >> t & 1:
            st = steps.get((rest, lam)) or self.step(rest, lam)
            e, target, prob, lam_in, rest, log_keep, log_drop = st
            if check and chosen & out_mask[target]:
                raise InvariantViolation("the reach set grew by more than the new vertex")
            if draws[k] < prob:
                chosen |= 1 << e
                lam = lam_in
                log_p += log_keep
                log_w += keep[e]
                if record:
                    factors.append(prob)
            else:
                log_p += log_drop
                log_w += fail[e]
                if record:
                    factors.append(1.0 - prob)
            k += 1
        for e in members(rest):
            if draws[k] < 1.0 - q[e]:
                chosen |= 1 << e
                log_p += keep[e]
                log_w += keep[e]
                if record:
                    factors.append(1.0 - q[e])
            else:
                log_p += fail[e]
                log_w += fail[e]
                if record:
                    factors.append(q[e])
            k += 1
        if self.p0 > 0:
            f = math.exp(log_w - self._log_den - log_p - math.log(self.p0))
        else:
            f = math.inf
        return Trajectory(chosen, log_p, log_w, f, factors)

    def sample(self, rng: np.random.Generator) -> int:
        """Up to ``sample_T`` filtered trajectories; returns the accepted edge mask."""
        stats = self.stats
        for _ in range(self.config.sample_T):
            draws = rng.random(self._size + 1).tolist()
            tr = self.trajectory(draws)
            stats.trajectories += 1
            f = tr.filter_prob
            if stats.filter_probs is not None:
                stats.filter_probs.append(f)
            if f > 1.0 + FILTER_SLACK:
                raise SamplerCrash(CrashKind.FILTER_OVERFLOW, self.u)
            if draws[-1] < min(f, 1.0):
                stats.samples += 1
                return tr.edges
            stats.rejections += 1
        raise SamplerCrash(CrashKind.ALL_REJECTED, self.u)
