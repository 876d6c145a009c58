"""Finite MDP data model, trajectory sampling, and random instance generation."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

ROW_SUM_TOL = 1e-12


class ModelValidationError(ValueError):
    """Raised when MDP tensors fail consistency checks at construction."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(np.asarray(a, dtype=float))
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class MdpModel:
    """Finite MDP with dense transition and cost tensors.

    ``trans[i, a, j]`` is the probability of moving from state i to state j
    under action a, and ``cost[i, a, j]`` the corresponding single-stage
    cost.  ``alpha`` is the (positive) risk factor applied to accumulated
    costs and ``ref_state`` the state used to normalize value vectors.

    Instances are immutable after construction and safe to share across
    threads; the tensors are marked read-only.
    """

    trans: np.ndarray
    cost: np.ndarray
    alpha: float
    ref_state: int = 0

    def __post_init__(self):
        trans = np.asarray(self.trans, dtype=float)
        cost = np.asarray(self.cost, dtype=float)
        if trans.ndim != 3 or trans.shape[0] != trans.shape[2]:
            raise ModelValidationError(
                f"transition tensor must have shape (S, A, S), got {trans.shape}"
            )
        if cost.shape != trans.shape:
            raise ModelValidationError(
                f"cost tensor shape {cost.shape} does not match transitions {trans.shape}"
            )
        if not np.isfinite(trans).all() or not np.isfinite(cost).all():
            raise ModelValidationError("tensors must be finite")
        if (trans < 0).any():
            raise ModelValidationError("transition probabilities must be nonnegative")
        row_sums = trans.sum(axis=2)
        bad = np.abs(row_sums - 1.0) > ROW_SUM_TOL
        if bad.any():
            i, a = np.argwhere(bad)[0]
            raise ModelValidationError(
                f"transition row (state={i}, action={a}) sums to {row_sums[i, a]!r}, not 1"
            )
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ModelValidationError(f"alpha must be positive, got {self.alpha}")
        n = trans.shape[0]
        if not (0 <= int(self.ref_state) < n):
            raise ModelValidationError(
                f"ref_state {self.ref_state} outside state range [0, {n})"
            )
        object.__setattr__(self, "trans", _readonly(trans))
        object.__setattr__(self, "cost", _readonly(cost))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "ref_state", int(self.ref_state))

    @property
    def n_states(self) -> int:
        return self.trans.shape[0]

    @property
    def n_actions(self) -> int:
        return self.trans.shape[1]

    @cached_property
    def cum_trans(self) -> np.ndarray:
        """Cumulative transition rows for inverse-CDF sampling."""
        cum = np.cumsum(self.trans, axis=2)
        cum[..., -1] = 1.0  # guard against rounding in the last bin
        cum.flags.writeable = False
        return cum

    @cached_property
    def exp_cost_kernel(self) -> np.ndarray:
        """Tensor ``p(i,a,j) * exp(alpha * c(i,a,j))``, the multiplicative kernel
        before policy averaging."""
        k = self.trans * np.exp(self.alpha * self.cost)
        k.flags.writeable = False
        return k

    def transition_matrix(self, probs: np.ndarray) -> np.ndarray:
        """Policy-averaged transition matrix P_pi for an (S, A) probability table."""
        return np.einsum("sa,saj->sj", probs, self.trans)

    def expected_cost(self, probs: np.ndarray) -> np.ndarray:
        """Per-state expected single-stage cost under an (S, A) probability table."""
        return np.einsum("sa,saj,saj->s", probs, self.trans, self.cost)


@dataclass(frozen=True)
class Trajectory:
    """A sampled path: states has one more entry than actions and costs."""

    states: np.ndarray
    actions: np.ndarray
    costs: np.ndarray
    rng_seed: int

    def __post_init__(self):
        if len(self.actions) != len(self.costs) or len(self.states) != len(self.actions) + 1:
            raise ValueError("inconsistent trajectory lengths")


def sample_step(model: MdpModel, state: int, action: int, rng: np.random.Generator):
    """Draw the next state by inverse CDF over the transition row; return
    (next_state, realized cost)."""
    row = model.cum_trans[state, action]
    j = int(np.searchsorted(row, rng.random(), side="right"))
    if j >= model.n_states:  # cum row ends at exactly 1.0, so only hit via rounding
        j = model.n_states - 1
    return j, float(model.cost[state, action, j])


def sample_trajectory(model: MdpModel, policy, n_steps: int, seed: int,
                      start: int | None = None) -> Trajectory:
    """Simulate ``n_steps`` transitions under a fixed policy.

    The trajectory is fully determined by ``seed``; ``start`` defaults to the
    model's reference state.
    """
    rng = np.random.default_rng(seed)
    i = model.ref_state if start is None else int(start)
    states = np.empty(n_steps + 1, dtype=np.int64)
    actions = np.empty(n_steps, dtype=np.int64)
    costs = np.empty(n_steps, dtype=float)
    states[0] = i
    for n in range(n_steps):
        a = policy.sample(i, rng)
        j, c = sample_step(model, i, a, rng)
        actions[n] = a
        costs[n] = c
        states[n + 1] = j
        i = j
    return Trajectory(states=states, actions=actions, costs=costs, rng_seed=int(seed))


def random_mdp(n_states: int, n_actions: int, rng: np.random.Generator,
               alpha: float = 1.0, cost_low: float = 0.0, cost_high: float = 10.0,
               ref_state: int = 0) -> MdpModel:
    """Random dense MDP: Dirichlet(1) transition rows, uniform costs."""
    g = rng.gamma(1.0, size=(n_states, n_actions, n_states))
    trans = g / g.sum(axis=2, keepdims=True)
    cost = rng.uniform(cost_low, cost_high, size=(n_states, n_actions, n_states))
    return MdpModel(trans=trans, cost=cost, alpha=alpha, ref_state=ref_state)
