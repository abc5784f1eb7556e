"""Algorithm constants: the preset carrying the accuracy guarantee and a scaled desk preset."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

ROUND2_SLICE_FACTOR = 500
ROUND2_TRIAL_FACTOR = 25


@dataclass(frozen=True)
class Config:
    """Sample budgets for one FPRAS run.

    ``B`` blocks of ``ell0 = ell1 + 500 * ell2`` samples each make up the
    per-vertex store of ``ell`` samples.  ``sample_T`` bounds the number of
    trajectories one call of the sampler may try.
    """

    B: int
    ell1: int
    ell2: int
    sample_T: int
    filter_denominator: float = 4.0
    preset: str = "scaled"

    def __post_init__(self):
        if min(self.B, self.ell1, self.ell2, self.sample_T) < 1:
            raise ValueError("B, ell1, ell2 and sample_T must be positive")
        if self.filter_denominator <= 0:
            raise ValueError("filter_denominator must be positive")
        if self.preset not in ("paper", "scaled"):
            raise ValueError(f"unknown preset {self.preset!r}")

    @property
    def ell0(self) -> int:
        return self.ell1 + ROUND2_SLICE_FACTOR * self.ell2

    @property
    def ell(self) -> int:
        return self.B * self.ell0

    @property
    def guaranteed(self) -> bool:
        return self.preset == "paper"

    def round2_trials(self, z_hat: float, n: int) -> int:
        """Trial count of the second estimation round, given the crude estimate."""
        cap = 4 * n
        factor = cap if z_hat <= 0 else min(2.0 / z_hat, cap)
        return math.ceil(ROUND2_TRIAL_FACTOR * self.ell2 * factor)

    def as_dict(self) -> dict:
        return {
            "preset": self.preset,
            "B": self.B,
            "ell1": self.ell1,
            "ell2": self.ell2,
            "ell": self.ell,
            "sample_T": self.sample_T,
            "filter_denominator": self.filter_denominator,
        }


def _check_size(n: int, m: int, eps: float) -> Fraction:
    if n < 2:
        raise ValueError("need at least two vertices")
    if m < n - 1:
        raise ValueError("need m >= n - 1")
    if not (0 < eps < 1):
        raise ValueError("eps must lie in (0, 1)")
    return Fraction(repr(float(eps)))


def sample_trials(n: int, eps: float) -> int:
    return math.ceil(1000 * math.log(n / eps))


def paper_config(n: int, m: int, eps: float) -> Config:
    """The constants of the guarantee, computed in exact integer arithmetic."""
    e = _check_size(n, m, eps)
    B = 60 * n + 150 * m
    ell1 = 400 * n
    ell2 = math.ceil(10**4 * n * n * max(Fraction(m * m), 1 / (e * e)))
    return Config(B=B, ell1=ell1, ell2=ell2, sample_T=sample_trials(n, eps), preset="paper")


SCALED_DEFAULTS = {"B": 7, "ell1": 64, "ell2": 8}


def scaled_config(
    n: int,
    eps: float = 0.5,
    B: int | None = None,
    ell1: int | None = None,
    ell2: int | None = None,
    sample_T: int | None = None,
) -> Config:
    """Reduced budgets for desk-scale runs.  Carries no accuracy guarantee."""
    if not (0 < eps < 1):
        raise ValueError("eps must lie in (0, 1)")
    return Config(
        B=SCALED_DEFAULTS["B"] if B is None else B,
        ell1=SCALED_DEFAULTS["ell1"] if ell1 is None else ell1,
        ell2=SCALED_DEFAULTS["ell2"] if ell2 is None else ell2,
        sample_T=sample_trials(max(n, 2), eps) if sample_T is None else sample_T,
        preset="scaled",
    )
