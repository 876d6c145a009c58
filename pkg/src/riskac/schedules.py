"""Step-size schedules for the coupled three-timescale recursions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PowerLawSchedule:
    """a(n) = base / (1 + n / tau)^exponent.

    With exponent in (0.5, 1] the squares are summable while the sums
    diverge; pairing schedules with strictly increasing exponents makes
    the step ratios of slower loops vanish against faster ones.
    """

    base: float
    exponent: float
    tau: float = 1e4

    def __post_init__(self):
        if self.base <= 0 or self.tau <= 0:
            raise ValueError("schedule base and tau must be positive")
        if not 0.5 < self.exponent <= 1.0:
            raise ValueError("exponent must lie in (0.5, 1] for square-summability")

    def __call__(self, n) -> float:
        return self.base / (1.0 + n / self.tau) ** self.exponent


@dataclass(frozen=True)
class ThreeTimescale:
    """Critic (fast), gradient-critic (middle), actor (slow) schedules."""

    critic: PowerLawSchedule
    grad: PowerLawSchedule
    actor: PowerLawSchedule

    def __post_init__(self):
        if not (self.critic.exponent < self.grad.exponent < self.actor.exponent):
            raise ValueError("exponents must increase from critic to actor")

    def as_dict(self) -> dict:
        return {
            "a0": self.critic.base, "a_exp": self.critic.exponent,
            "b0": self.grad.base, "b_exp": self.grad.exponent,
            "c0": self.actor.base, "c_exp": self.actor.exponent,
            "tau": self.critic.tau,
        }


def default_schedules(a0: float = 0.1, b0: float = 0.05, c0: float = 0.01,
                      tau: float = 1e4, a_exp: float = 0.55, b_exp: float = 0.7,
                      c_exp: float = 0.9) -> ThreeTimescale:
    return ThreeTimescale(
        critic=PowerLawSchedule(a0, a_exp, tau),
        grad=PowerLawSchedule(b0, b_exp, tau),
        actor=PowerLawSchedule(c0, c_exp, tau),
    )


def timescale_ratios(schedules: ThreeTimescale, steps: np.ndarray):
    """(b/a, c/b) ratio arrays on a grid of step counts, for the separation checks."""
    steps = np.asarray(steps, dtype=float)
    a = schedules.critic(steps)
    b = schedules.grad(steps)
    c = schedules.actor(steps)
    return b / a, c / b
