"""Risk-sensitive actor-critic with linear function approximation (RSACFA).

Three coupled recursions driven by a single simulated trajectory:

* a value critic ``r`` tracking the dominant eigenvector of the policy's
  multiplicative kernel in feature space, fed by recursive estimates of the
  cost-weighted feature cross moments A and the inverse feature Gram B^-1;
* a two-matrix gradient critic ``(u, w_tilde)`` running an importance-sampled
  gradient-TD recursion whose read-out ``w_tilde psi(ref)`` estimates the
  policy gradient of the risk-sensitive cost;
* a projected actor ``theta`` descending that estimate inside a box.

Step sizes for the three loops must separate (critic fastest, actor slowest).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .features import FeatureMaps
from .mdp import MdpModel, sample_step
from .policy import SoftmaxFamily, SoftmaxPolicy
from .schedules import PowerLawSchedule, ThreeTimescale

DEFAULT_DELTA1 = 1e-6
DEFAULT_DELTA2 = 1e-6
DEFAULT_PROJ_BOUND = 50.0
DEFAULT_B_EPSILON = 1e-3


@dataclass
class RsacfaState:
    """Mutable learner state; arrays are owned by the state."""

    r: np.ndarray          # (x2,) value-critic weights
    a_mat: np.ndarray      # (x2, x2) running cost-weighted cross moments
    b_inv: np.ndarray      # (x2, x2) inverse of eps I + running feature Gram
    u: np.ndarray          # (x1, x3) auxiliary gradient-critic matrix
    w_tilde: np.ndarray    # (x1, x3) gradient-critic matrix
    theta: np.ndarray      # (x1,) actor parameter
    n: int
    delta1: float
    delta2: float
    proj_bound: float

    def copy(self) -> "RsacfaState":
        return RsacfaState(
            r=self.r.copy(), a_mat=self.a_mat.copy(), b_inv=self.b_inv.copy(),
            u=self.u.copy(), w_tilde=self.w_tilde.copy(),
            theta=self.theta.copy(), n=self.n, delta1=self.delta1,
            delta2=self.delta2, proj_bound=self.proj_bound,
        )


def initial_critic_weights(phi: np.ndarray, ref_state: int) -> np.ndarray:
    """Least-squares fit of the all-ones value vector, rescaled so the
    reference-state value estimate starts at 1.

    r = 0 is a spurious rest point of the critic recursion, so the start
    must have a nonzero reference value.
    """
    r0, *_ = np.linalg.lstsq(phi, np.ones(phi.shape[0]), rcond=None)
    ref_val = float(phi[ref_state] @ r0)
    if abs(ref_val) < 1e-12:
        raise ValueError("reference state has no support in the value features")
    return r0 / ref_val


class RsacfaLearner:
    """Binds a model, a policy family, critic features and schedules.

    The learner mutates an :class:`RsacfaState`; states are copyable for
    read-only evaluation between steps.
    """

    def __init__(self, model: MdpModel, family: SoftmaxFamily,
                 features: FeatureMaps, schedules: ThreeTimescale,
                 delta1: float = DEFAULT_DELTA1, delta2: float = DEFAULT_DELTA2,
                 proj_bound: float = DEFAULT_PROJ_BOUND,
                 b_epsilon: float = DEFAULT_B_EPSILON,
                 warmup: int = 10_000):
        if features.n_states != model.n_states:
            raise ValueError("feature rows must match the model's state count")
        if family.n_states != model.n_states or family.n_actions != model.n_actions:
            raise ValueError("policy family shape must match the model")
        self.model = model
        self.family = family
        self.features = features
        self.schedules = schedules
        self.delta1 = float(delta1)
        self.delta2 = float(delta2)
        self.proj_bound = float(proj_bound)
        self.b_epsilon = float(b_epsilon)
        # The slower loops assume the fast critic has equilibrated; until the
        # critic's value scale reaches the kernel's eigenvalue the ratio
        # estimates carry raw exp(alpha c) factors and the gradient critic is
        # step-size unstable.  During the first ``warmup`` steps only the
        # running moments and the value critic update.
        self.warmup = int(warmup)
        self.phi = features.phi
        self.psi = features.psi
        self.phi_ref = features.phi[model.ref_state]
        self.psi_ref = features.psi[model.ref_state]

    def init_state(self, theta0: np.ndarray | None = None) -> RsacfaState:
        x1, x2, x3 = self.family.dim, self.features.value_dim, self.features.grad_dim
        theta = np.zeros(x1) if theta0 is None else np.array(theta0, dtype=float)
        return RsacfaState(
            r=initial_critic_weights(self.phi, self.model.ref_state),
            a_mat=np.zeros((x2, x2)),
            b_inv=np.eye(x2) / self.b_epsilon,
            u=np.zeros((x1, x3)),
            w_tilde=np.zeros((x1, x3)),
            theta=theta, n=0,
            delta1=self.delta1, delta2=self.delta2, proj_bound=self.proj_bound,
        )

    # -- individual recursions -------------------------------------------

    def update_ab(self, state: RsacfaState, transition):
        """Fold the observed transition into A and B^-1 (rank-one inverse
        update; the denominator is >= 1 because B^-1 stays positive
        definite)."""
        i, _, j, cost = transition
        phi_i = self.phi[i]
        state.a_mat += np.exp(self.model.alpha * cost) * phi_i[:, None] * self.phi[j]
        b_phi = state.b_inv @ phi_i
        state.b_inv -= b_phi[:, None] * (b_phi / (1.0 + phi_i @ b_phi))

    def critic_step(self, state: RsacfaState):
        """r <- r + a(n) (B^-1 A r / max(phi(ref).r, delta1) - r)."""
        a_n = self.schedules.critic(state.n)
        den = max(float(self.phi_ref @ state.r), state.delta1)
        state.r += a_n * (state.b_inv @ (state.a_mat @ state.r) / den - state.r)

    def is_ratio(self, state: RsacfaState, transition) -> float:
        """Importance-sampling ratio from the approximate critic, with the
        denominator product floored at delta2."""
        i, _, j, cost = transition
        num = np.exp(self.model.alpha * cost) * float(self.phi[j] @ state.r)
        den = max(float(self.phi[i] @ state.r) * float(self.phi_ref @ state.r),
                  state.delta2)
        return num / den

    def td_error(self, state: RsacfaState, transition, rho: float,
                 probs_i: np.ndarray | None = None) -> np.ndarray:
        """Vector TD error of the gradient critic for the observed transition."""
        i, z, j, _ = transition
        if probs_i is None:
            probs_i = self.family.probs(state.theta, i)
        w = state.w_tilde
        return ((rho - 1.0) * self.family.log_grad_from_probs(probs_i, i, z)
                + rho * (w @ self.psi[j]) - w @ self.psi[i] - w @ self.psi_ref)

    def gtd2_step(self, state: RsacfaState, transition, delta: np.ndarray,
                  rho: float):
        """Two-matrix gradient-TD update; both lines read the pre-update u."""
        i, _, j, _ = transition
        b_n = self.schedules.grad(state.n)
        psi_i = self.psi[i]
        u_psi = state.u @ psi_i
        state.u += (b_n * (delta - u_psi))[:, None] * psi_i
        state.w_tilde += (b_n * u_psi)[:, None] * (psi_i + self.psi_ref - rho * self.psi[j])

    def actor_step(self, state: RsacfaState, grad_estimate: np.ndarray):
        """theta <- clamp(theta - c(n) grad_estimate) to the projection box."""
        c_n = self.schedules.actor(state.n)
        state.theta -= c_n * grad_estimate
        np.minimum(state.theta, state.proj_bound, out=state.theta)
        np.maximum(state.theta, -state.proj_bound, out=state.theta)

    # -- one full step ------------------------------------------------------

    def step(self, state: RsacfaState, transition,
             probs_i: np.ndarray | None = None):
        """Apply one observed transition in the per-step order: running
        moments, value critic, TD error, gradient critic, actor.

        The A/B update precedes the critic because those sums include the
        current transition; every other right-hand side reads start-of-step
        values (the ratio uses r before this step's critic move, the actor
        uses w_tilde before this step's gradient-critic move).
        """
        self.update_ab(state, transition)
        if state.n < self.warmup:
            self.critic_step(state)
            state.n += 1
            return
        rho = self.is_ratio(state, transition)
        delta = self.td_error(state, transition, rho, probs_i)
        grad_estimate = state.w_tilde @ self.psi_ref
        self.critic_step(state)
        self.gtd2_step(state, transition, delta, rho)
        self.actor_step(state, grad_estimate)
        state.n += 1

    def run(self, horizon: int, seed: int, theta0: np.ndarray | None = None,
            state: RsacfaState | None = None, start: int | None = None,
            on_step=None) -> RsacfaState:
        """Drive the learner for ``horizon`` steps from a fresh trajectory.

        Deterministic in ``seed``.  ``on_step(cost, state)`` is called after
        every step when given.
        """
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

    def policy(self, state: RsacfaState) -> SoftmaxPolicy:
        return SoftmaxPolicy(self.family, state.theta)


def save_checkpoint(path, state: RsacfaState, rng: np.random.Generator | None = None,
                    schedules: ThreeTimescale | None = None):
    """Write learner state (plus optional RNG state and schedule constants)
    to a flat .npz archive that round-trips bit-exactly."""
    payload = {
        "n": np.int64(state.n),
        "r": state.r, "a_mat": state.a_mat, "b_inv": state.b_inv,
        "u": state.u, "w_tilde": state.w_tilde, "theta": state.theta,
        "delta1": np.float64(state.delta1), "delta2": np.float64(state.delta2),
        "proj_bound": np.float64(state.proj_bound),
    }
    if rng is not None:
        payload["rng_state"] = np.bytes_(json.dumps(rng.bit_generator.state).encode())
    if schedules is not None:
        payload["schedules"] = np.bytes_(json.dumps(schedules.as_dict()).encode())
    np.savez(path, **payload)


def load_checkpoint(path):
    """Read a checkpoint; returns (state, rng | None, schedules | None)."""
    with np.load(path) as z:
        state = RsacfaState(
            r=z["r"].copy(), a_mat=z["a_mat"].copy(), b_inv=z["b_inv"].copy(),
            u=z["u"].copy(), w_tilde=z["w_tilde"].copy(), theta=z["theta"].copy(),
            n=int(z["n"]), delta1=float(z["delta1"]), delta2=float(z["delta2"]),
            proj_bound=float(z["proj_bound"]),
        )
        rng = None
        if "rng_state" in z:
            rng = np.random.default_rng()
            rng.bit_generator.state = json.loads(bytes(z["rng_state"]).decode())
        schedules = None
        if "schedules" in z:
            cfg = json.loads(bytes(z["schedules"]).decode())
            schedules = ThreeTimescale(
                critic=PowerLawSchedule(cfg["a0"], cfg["a_exp"], cfg["tau"]),
                grad=PowerLawSchedule(cfg["b0"], cfg["b_exp"], cfg["tau"]),
                actor=PowerLawSchedule(cfg["c0"], cfg["c_exp"], cfg["tau"]),
            )
    return state, rng, schedules
