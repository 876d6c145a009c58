"""Softmax (Boltzmann) policies linear in per-(state, action) features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Smallest positive subnormal double.  Flooring probabilities here keeps every
# action probability strictly positive even when logit gaps exceed the exp()
# underflow range, at a distortion far below any tolerance in use.
_PROB_FLOOR = 5e-324


class SoftmaxFamily:
    """Policy family pi(i, a) = softmax_a(theta . xi(i, a) / temperature).

    ``action_features`` has shape (S, A, dim) with xi(i, a) as its rows.  The
    family itself is stateless with respect to theta: learners keep theta in
    their own state and call these methods directly.
    """

    def __init__(self, action_features: np.ndarray, temperature: float = 1.0):
        xi = np.ascontiguousarray(np.asarray(action_features, dtype=float))
        if xi.ndim != 3:
            raise ValueError(f"action features must have shape (S, A, dim), got {xi.shape}")
        if not (np.isfinite(temperature) and temperature > 0):
            raise ValueError(f"temperature must be positive, got {temperature}")
        xi.flags.writeable = False
        self.xi = xi
        self.temperature = float(temperature)

    @property
    def n_states(self) -> int:
        return self.xi.shape[0]

    @property
    def n_actions(self) -> int:
        return self.xi.shape[1]

    @property
    def dim(self) -> int:
        return self.xi.shape[2]

    def probs(self, theta: np.ndarray, state: int) -> np.ndarray:
        z = self.xi[state] @ theta
        z /= self.temperature
        z -= z.max()
        p = np.exp(z)
        p = np.maximum(p, _PROB_FLOOR)
        return p / p.sum()

    def prob_table(self, theta: np.ndarray) -> np.ndarray:
        """All policy probabilities as an (S, A) table."""
        z = self.xi @ theta
        z /= self.temperature
        z -= z.max(axis=1, keepdims=True)
        p = np.exp(z)
        p = np.maximum(p, _PROB_FLOOR)
        return p / p.sum(axis=1, keepdims=True)

    def log_grad(self, theta: np.ndarray, state: int, action: int) -> np.ndarray:
        """Gradient of log pi(state, action) with respect to theta."""
        return self.log_grad_from_probs(self.probs(theta, state), state, action)

    def log_grad_from_probs(self, probs: np.ndarray, state: int, action: int) -> np.ndarray:
        """log_grad with the action probabilities already at hand (hot loops
        compute them once per step for both sampling and gradients)."""
        return (self.xi[state, action] - probs @ self.xi[state]) / self.temperature

    def log_grad_table(self, theta: np.ndarray) -> np.ndarray:
        """Gradients of log pi for every (state, action) as an (S, A, dim) tensor."""
        p = self.prob_table(theta)
        mean_feat = np.einsum("sa,saf->sf", p, self.xi)
        return (self.xi - mean_feat[:, None, :]) / self.temperature

    def sample(self, theta: np.ndarray, state: int, rng: np.random.Generator) -> int:
        return self.sample_from_probs(self.probs(theta, state), rng)

    def sample_from_probs(self, probs: np.ndarray, rng: np.random.Generator) -> int:
        a = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
        return min(a, self.n_actions - 1)


@dataclass(frozen=True)
class SoftmaxPolicy:
    """A family bound to a fixed parameter vector; immutable and shareable.

    ``theta`` is copied at construction so later learner updates do not leak
    into a snapshot taken for evaluation.
    """

    family: SoftmaxFamily
    theta: np.ndarray

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float)  # private copy
        if theta.shape != (self.family.dim,):
            raise ValueError(
                f"theta shape {theta.shape} does not match feature dim {self.family.dim}"
            )
        theta.flags.writeable = False
        object.__setattr__(self, "theta", theta)

    def probs(self, state: int) -> np.ndarray:
        return self.family.probs(self.theta, state)

    def prob_table(self) -> np.ndarray:
        return self.family.prob_table(self.theta)

    def log_grad(self, state: int, action: int) -> np.ndarray:
        return self.family.log_grad(self.theta, state, action)

    def log_grad_table(self) -> np.ndarray:
        return self.family.log_grad_table(self.theta)

    def sample(self, state: int, rng: np.random.Generator) -> int:
        return self.family.sample(self.theta, state, rng)


def uniform_policy(family: SoftmaxFamily) -> SoftmaxPolicy:
    return SoftmaxPolicy(family, np.zeros(family.dim))
