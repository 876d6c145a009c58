"""Risk-neutral comparison learners: average-cost and discounted-cost
actor-critic with linear TD(0) critics.

Both share the policy family, critic features, schedules, and actor
projection of the risk-sensitive learner so that benchmark differences
isolate the optimization criterion.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mdp import MdpModel, sample_step
from .policy import SoftmaxFamily, SoftmaxPolicy
from .schedules import ThreeTimescale

KINDS = ("average", "discounted")


@dataclass
class BaselineState:
    kind: str
    v: np.ndarray                 # (x2,) critic weights
    theta: np.ndarray             # (x1,) actor parameter
    avg_cost: float = 0.0         # average-cost variant only
    gamma: float = 0.99           # discounted variant only
    n: int = 0

    def copy(self) -> "BaselineState":
        return BaselineState(kind=self.kind, v=self.v.copy(),
                             theta=self.theta.copy(), avg_cost=self.avg_cost,
                             gamma=self.gamma, n=self.n)


@dataclass
class BaselineLearner:
    """TD(0) critic plus likelihood-ratio actor on a single trajectory."""

    model: MdpModel
    family: SoftmaxFamily
    phi: np.ndarray
    kind: str
    schedules: ThreeTimescale
    gamma: float = 0.99
    proj_bound: float = 50.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "discounted" and not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        self.phi = np.asarray(self.phi, dtype=float)

    def init_state(self, theta0: np.ndarray | None = None) -> BaselineState:
        theta = np.zeros(self.family.dim) if theta0 is None else np.array(theta0, dtype=float)
        return BaselineState(kind=self.kind, v=np.zeros(self.phi.shape[1]),
                             theta=theta, avg_cost=0.0, gamma=self.gamma)

    def step(self, state: BaselineState, transition,
             probs_i: np.ndarray | None = None):
        i, z, j, cost = transition
        a_n = self.schedules.critic(state.n)
        c_n = self.schedules.actor(state.n)
        phi_i = self.phi[i]
        v_i = float(phi_i @ state.v)
        v_j = float(self.phi[j] @ state.v)
        if state.kind == "average":
            if state.n == 0:
                # seed the tracker at the first observed cost so it stays a
                # convex combination of observations
                state.avg_cost = cost
            d = cost - state.avg_cost + v_j - v_i
            state.avg_cost += a_n * (cost - state.avg_cost)
        else:
            d = cost + state.gamma * v_j - v_i
        state.v += a_n * d * phi_i
        if probs_i is None:
            probs_i = self.family.probs(state.theta, i)
        grad = self.family.log_grad_from_probs(probs_i, i, z)
        state.theta -= c_n * d * grad
        np.minimum(state.theta, self.proj_bound, out=state.theta)
        np.maximum(state.theta, -self.proj_bound, out=state.theta)
        state.n += 1

    def run(self, horizon: int, seed: int, theta0: np.ndarray | None = None,
            state: BaselineState | None = None, start: int | None = None,
            on_step=None) -> BaselineState:
        if state is None:
            state = self.init_state(theta0)
        rng = np.random.default_rng(seed)
        family = self.family
        i = self.model.ref_state if start is None else int(start)
        for _ in range(horizon):
            probs = family.probs(state.theta, i)
            z = family.sample_from_probs(probs, rng)
            j, cost = sample_step(self.model, i, z, rng)
            self.step(state, (i, z, j, cost), probs_i=probs)
            if on_step is not None:
                on_step(cost, state)
            i = j
        return state

    def policy(self, state: BaselineState) -> SoftmaxPolicy:
        return SoftmaxPolicy(self.family, state.theta)
