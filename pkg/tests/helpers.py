"""Independent reference computations used as test oracles.

Everything here deliberately avoids the package's own iterative solvers:
eigenpairs come from dense decompositions, stationary laws from null-space
solves, and gradients from finite differences of dense eigenvalues.
"""

from __future__ import annotations

import numpy as np

from riskac import MdpModel, SoftmaxFamily, SoftmaxPolicy, build_q_matrix, state_action_onehot


def dense_perron(q: np.ndarray, ref_state: int):
    """Dominant eigenpair via a full dense decomposition, normalized at the
    reference state."""
    w, vecs = np.linalg.eig(np.asarray(q, dtype=float))
    k = int(np.argmax(w.real))
    lam = float(w[k].real)
    v = vecs[:, k].real
    v = v / v[ref_state]
    return lam, v


def stationary_nullspace(p: np.ndarray) -> np.ndarray:
    """Invariant law from the null space of (P' - I) plus the sum constraint."""
    p = np.asarray(p, dtype=float)
    n = p.shape[0]
    a = np.vstack([p.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    d, *_ = np.linalg.lstsq(a, b, rcond=None)
    return d


def fd_log_lambda_gradient(model: MdpModel, family: SoftmaxFamily,
                           theta: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of log(lambda_theta), with lambda from the
    dense eigensolver."""
    grad = np.zeros_like(theta, dtype=float)
    for k in range(theta.size):
        tp = theta.copy()
        tp[k] += h
        tm = theta.copy()
        tm[k] -= h
        lam_p, _ = dense_perron(build_q_matrix(model, SoftmaxPolicy(family, tp)),
                                model.ref_state)
        lam_m, _ = dense_perron(build_q_matrix(model, SoftmaxPolicy(family, tm)),
                                model.ref_state)
        grad[k] = (np.log(lam_p) - np.log(lam_m)) / (2 * h)
    return grad


def tabular_family(n_states: int, n_actions: int,
                   temperature: float = 1.0) -> SoftmaxFamily:
    return SoftmaxFamily(state_action_onehot(n_states, n_actions),
                         temperature=temperature)


def random_policy(family: SoftmaxFamily, rng: np.random.Generator,
                  scale: float = 0.5) -> SoftmaxPolicy:
    return SoftmaxPolicy(family, rng.normal(size=family.dim) * scale)


def simulate_chain_batch(p_pi: np.ndarray, n_steps: int, n_chains: int,
                         rng: np.random.Generator, start: int = 0):
    """Vectorized simulation of ``n_chains`` independent chains under a fixed
    state-to-state kernel; returns the (n_steps, n_chains) state paths."""
    cum = np.cumsum(p_pi, axis=1)
    cum[:, -1] = 1.0
    states = np.full(n_chains, start, dtype=np.int64)
    path = np.empty((n_steps, n_chains), dtype=np.int64)
    for t in range(n_steps):
        u = rng.random(n_chains)
        states = np.array([np.searchsorted(cum[s], x, side="right")
                           for s, x in zip(states, u)], dtype=np.int64)
        np.minimum(states, p_pi.shape[0] - 1, out=states)
        path[t] = states
    return path
