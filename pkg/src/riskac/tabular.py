"""Lookup-table learners: multiplicative critic, off-policy gradient critic,
and the table-based actor.

The critic tracks the dominant eigenvector of the policy's multiplicative
kernel with the reference-state entry converging to the dominant eigenvalue.
The gradient critic runs an importance-sampled average-cost TD recursion
whose reference-state column converges to the policy gradient of the
risk-sensitive cost.  Both use asynchronous per-state step counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mdp import MdpModel, sample_step
from .policy import SoftmaxFamily, SoftmaxPolicy
from .schedules import ThreeTimescale

VALUE_FLOOR = 1e-8


@dataclass
class TabularCriticState:
    values: np.ndarray            # (S,) strictly positive
    visits: np.ndarray            # (S,) int64 per-state update counts

    @classmethod
    def fresh(cls, n_states: int) -> "TabularCriticState":
        return cls(values=np.ones(n_states), visits=np.zeros(n_states, dtype=np.int64))


@dataclass
class TabularGradState:
    w: np.ndarray                 # (dim, S) vector-valued table
    visits: np.ndarray            # shared with the critic when run together

    @classmethod
    def fresh(cls, dim: int, n_states: int,
              visits: np.ndarray | None = None) -> "TabularGradState":
        if visits is None:
            visits = np.zeros(n_states, dtype=np.int64)
        return cls(w=np.zeros((dim, n_states)), visits=visits)


def _critic_apply(state: TabularCriticState, transition, stepsize: float,
                  alpha: float, ref_state: int, floor: float = VALUE_FLOOR):
    i, _, j, cost = transition
    v = state.values
    target = np.exp(alpha * cost) * v[j] / v[ref_state]
    v[i] += stepsize * (target - v[i])
    if v[i] < floor:
        v[i] = floor


def critic_step(state: TabularCriticState, transition, schedule, *,
                alpha: float, ref_state: int,
                floor: float = VALUE_FLOOR) -> TabularCriticState:
    """One asynchronous critic update for the observed transition
    (i, action, j, cost); only entry i changes, stepped by the per-state
    visit schedule."""
    i = transition[0]
    _critic_apply(state, transition, schedule(state.visits[i]), alpha,
                  ref_state, floor)
    state.visits[i] += 1
    return state


def _grad_apply(state: TabularGradState, values: np.ndarray, transition,
                log_grad: np.ndarray, stepsize: float, alpha: float,
                ref_state: int):
    i, _, j, cost = transition
    rho = np.exp(alpha * cost) * values[j] / (values[i] * values[ref_state])
    g = log_grad * (rho - 1.0)
    w = state.w
    # single column write; the right-hand side reads only pre-update values
    w[:, i] += stepsize * (g + rho * w[:, j] - w[:, i] - w[:, ref_state])


def grad_critic_step(state: TabularGradState, critic: TabularCriticState,
                     transition, policy: SoftmaxPolicy, schedule, *,
                     alpha: float, ref_state: int) -> TabularGradState:
    """One importance-sampled TD update of the gradient table for the
    observed transition, using the critic's current value estimates."""
    i, z, _, _ = transition
    _grad_apply(state, critic.values, transition, policy.log_grad(i, z),
                schedule(state.visits[i]), alpha, ref_state)
    state.visits[i] += 1
    return state


def actor_step(theta: np.ndarray, grad_state: TabularGradState, schedule,
               n: int, ref_state: int) -> np.ndarray:
    """theta <- theta - c(n) * W[:, ref_state]."""
    return theta - schedule(n) * grad_state.w[:, ref_state]


@dataclass
class TabularLearner:
    """Couples critic, gradient critic, and actor over one trajectory.

    The critic and gradient tables share one visit-count array, bumped once
    per step; all per-step right-hand sides read start-of-step values.  The
    critic can be frozen at supplied values (oracle-critic mode) to isolate
    the gradient recursion in tests.
    """

    model: MdpModel
    family: SoftmaxFamily
    schedules: ThreeTimescale
    theta: np.ndarray
    critic: TabularCriticState = field(init=False)
    grad: TabularGradState = field(init=False)
    n: int = field(init=False, default=0)
    update_critic: bool = True
    update_actor: bool = True
    value_floor: float = VALUE_FLOOR
    # While the value table is still near its all-ones start the ratio
    # estimates carry raw exp(alpha c) factors and destabilize the gradient
    # table, so the slower recursions hold for the first ``warmup`` steps.
    warmup: int = 10_000

    def __post_init__(self):
        self.theta = np.array(self.theta, dtype=float)
        self.critic = TabularCriticState.fresh(self.model.n_states)
        self.grad = TabularGradState.fresh(self.family.dim, self.model.n_states,
                                           visits=self.critic.visits)

    def freeze_critic(self, values: np.ndarray):
        """Pin the critic table (e.g. at lam * V from the exact oracle) and
        stop updating it."""
        self.critic.values = np.array(values, dtype=float)
        self.update_critic = False

    def step(self, transition, probs_i: np.ndarray | None = None):
        i, z, _, _ = transition
        nu = self.critic.visits[i]
        a_n = self.schedules.critic(nu)
        if self.n < self.warmup:
            if self.update_critic:
                _critic_apply(self.critic, transition, a_n, self.model.alpha,
                              self.model.ref_state, self.value_floor)
            self.critic.visits[i] += 1
            self.n += 1
            return
        b_n = self.schedules.grad(nu)
        values_pre = self.critic.values.copy()
        if probs_i is None:
            probs_i = self.family.probs(self.theta, i)
        log_grad = self.family.log_grad_from_probs(probs_i, i, z)
        w_ref = self.grad.w[:, self.model.ref_state].copy()
        if self.update_critic:
            _critic_apply(self.critic, transition, a_n, self.model.alpha,
                          self.model.ref_state, self.value_floor)
        _grad_apply(self.grad, values_pre, transition, log_grad, b_n,
                    self.model.alpha, self.model.ref_state)
        if self.update_actor:
            self.theta -= self.schedules.actor(self.n) * w_ref
        self.critic.visits[i] += 1
        self.n += 1

    def run(self, horizon: int, seed: int, start: int | None = None,
            on_step=None) -> "TabularLearner":
        rng = np.random.default_rng(seed)
        family = self.family
        i = self.model.ref_state if start is None else int(start)
        for _ in range(horizon):
            probs = family.probs(self.theta, i)
            z = family.sample_from_probs(probs, rng)
            j, cost = sample_step(self.model, i, z, rng)
            self.step((i, z, j, cost), probs_i=probs)
            if on_step is not None:
                on_step(cost, self)
            i = j
        return self

    def policy(self) -> SoftmaxPolicy:
        return SoftmaxPolicy(self.family, self.theta)
