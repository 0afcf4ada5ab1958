"""Phase schedule for staged training and the scheduled-sampling decay."""

from __future__ import annotations

import math
from dataclasses import dataclass


def scheduled_sampling_prob(iteration: int, k: float) -> float:
    """Inverse-sigmoid decay: probability of feeding ground truth at the
    given global iteration, epsilon_i = k / (k + exp(i / k))."""
    if k <= 0:
        raise ValueError(f"scheduled-sampling k must be positive, got {k}")
    try:
        e = math.exp(iteration / k)
    except OverflowError:
        return 0.0
    return k / (k + e)


@dataclass
class PhaseSchedule:
    """Three training phases and the linear KL-weight ramp.

    beta is 0 throughout phases 1 and 2, then climbs linearly from
    beta_start to beta_final across phase 3 (strictly positive from the
    first phase-3 iteration). naive mode ignores the phases: the
    posterior is used and beta sits at beta_final from iteration 0.
    """

    iters_phase1: int = 3000
    iters_phase2: int = 3000
    iters_phase3: int = 6000
    beta_start: float = 0.0
    beta_final: float = 0.001
    naive: bool = False

    def __post_init__(self):
        if min(self.iters_phase1, self.iters_phase2, self.iters_phase3) < 0:
            raise ValueError("phase lengths must be nonnegative")
        if self.beta_final < self.beta_start or self.beta_start < 0:
            raise ValueError("need 0 <= beta_start <= beta_final")

    @property
    def total_iters(self) -> int:
        return self.iters_phase1 + self.iters_phase2 + self.iters_phase3

    def phase_of(self, iteration: int) -> int:
        """1, 2, or 3 (0 in naive mode)."""
        if self.naive:
            return 0
        if iteration < self.iters_phase1:
            return 1
        if iteration < self.iters_phase1 + self.iters_phase2:
            return 2
        return 3

    def beta(self, iteration: int) -> float:
        if self.naive:
            return self.beta_final
        if self.phase_of(iteration) != 3:
            return 0.0
        done = iteration - self.iters_phase1 - self.iters_phase2 + 1
        frac = min(1.0, done / self.iters_phase3)
        return self.beta_start + (self.beta_final - self.beta_start) * frac
