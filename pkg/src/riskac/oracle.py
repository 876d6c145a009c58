"""Model-based ground truth for risk-sensitive policy evaluation.

Everything here is computed from the full transition and cost tensors:
the dominant eigenpair of the policy's multiplicative kernel, the twisted
transition kernel and its stationary law, the exact policy gradient of the
risk-sensitive cost, and the fixed points that the sampled learners are
expected to reach.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp import MdpModel
from .policy import SoftmaxPolicy

DEFAULT_EIG_TOL = 1e-10
DEFAULT_EIG_MAX_ITER = 100_000
DEFAULT_STAT_TOL = 1e-12
DEFAULT_STAT_MAX_ITER = 1_000_000


class IterationLimitError(RuntimeError):
    """An iterative solver ran out of its iteration budget."""


class ReducibleMatrixError(ValueError):
    """The matrix cannot have a strictly positive dominant eigenvector."""


class FeatureDegeneracyError(ValueError):
    """Feature matrix is too degenerate for the requested fixed point."""


class SingularSystemError(ValueError):
    """A matrix required to be non-singular is singular (reports which one)."""

    def __init__(self, name: str, message: str | None = None):
        self.name = name
        super().__init__(message or f"matrix {name} is singular")


def build_q_matrix(model: MdpModel, policy: SoftmaxPolicy) -> np.ndarray:
    """Multiplicative kernel: Q(i,j) = sum_a pi(i,a) exp(alpha c(i,a,j)) p(i,a,j)."""
    return np.einsum("sa,saj->sj", policy.prob_table(), model.exp_cost_kernel)


def perron_eigenpair(q: np.ndarray, ref_state: int, tol: float = DEFAULT_EIG_TOL,
                     max_iter: int = DEFAULT_EIG_MAX_ITER,
                     v0: np.ndarray | None = None):
    """Dominant eigenpair of a nonnegative matrix by normalized power iteration.

    Iterates V <- qV / (qV)[ref_state]; returns (lam, V) with V[ref_state] = 1
    and residual |qV - lam V| <= tol * lam * min(V, 1) componentwise.  The
    componentwise form keeps rows of kernels derived from (lam, V) stochastic
    to within tol even when V spans several orders of magnitude.
    """
    q = np.asarray(q, dtype=float)
    n = q.shape[0]
    if q.ndim != 2 or q.shape[1] != n:
        raise ValueError(f"expected a square matrix, got shape {q.shape}")
    if (q < 0).any():
        raise ValueError("matrix must be nonnegative")
    if (q.sum(axis=1) == 0).any():
        raise ReducibleMatrixError("matrix has a zero row")
    if v0 is None:
        v = np.ones(n)
    else:
        v = np.asarray(v0, dtype=float).copy()
        if v.shape != (n,) or (v <= 0).any():
            raise ValueError("v0 must be a strictly positive start vector")
        v /= v[ref_state]
    w = q @ v
    for _ in range(max_iter):
        lam = w[ref_state]
        if lam <= 0:
            raise ReducibleMatrixError(
                "iterate vanished at the reference state; matrix is reducible"
            )
        v = w / lam
        w = q @ v
        lam_new = w[ref_state]
        if (np.abs(w - lam_new * v) <= tol * lam_new * np.minimum(v, 1.0)).all():
            return float(lam_new), v
    raise IterationLimitError(
        f"power iteration did not reach tol={tol} in {max_iter} iterations"
    )


def twisted_kernel(model: MdpModel, policy: SoftmaxPolicy, spectral) -> np.ndarray:
    """Change-of-measure kernel p~(i,j) = Q(i,j) V(j) / (V(i) lam)."""
    lam, v = spectral
    q = build_q_matrix(model, policy)
    return q * v[None, :] / (v[:, None] * lam)


def stationary_distribution(kernel: np.ndarray, tol: float = DEFAULT_STAT_TOL,
                            max_iter: int = DEFAULT_STAT_MAX_ITER) -> np.ndarray:
    """Invariant law of a row-stochastic matrix by iterated left multiplication.

    If plain iteration stalls (periodic kernels), the second half of the
    budget iterates the half-lazy kernel (I + P)/2, which has the same
    invariant law and converges geometrically for any irreducible chain.
    """
    p = np.asarray(kernel, dtype=float)
    n = p.shape[0]
    if p.ndim != 2 or p.shape[1] != n:
        raise ValueError(f"expected a square matrix, got shape {p.shape}")
    d = np.full(n, 1.0 / n)
    switch = max_iter // 2
    for k in range(max_iter):
        if k == switch:
            p = 0.5 * (p + np.eye(n))
        d_new = d @ p
        d_new /= d_new.sum()  # rows may sum to 1 only within an eigen tolerance
        if np.abs(d_new - d).sum() < tol:
            return d_new
        d = d_new
    raise IterationLimitError(
        f"stationary distribution did not reach tol={tol} in {max_iter} iterations"
    )


@dataclass(frozen=True)
class SpectralSolution:
    """Dominant eigenpair of the multiplicative kernel plus derived laws."""

    lam: float
    value: np.ndarray           # V, normalized to 1 at the reference state
    twisted: np.ndarray         # row-stochastic twisted kernel
    stat_orig: np.ndarray       # stationary law of P_pi
    stat_twisted: np.ndarray    # stationary law of the twisted kernel
    cost: float                 # log(lam), the risk-sensitive cost

    @property
    def lambda_(self) -> float:
        return self.lam


def spectral_solution(model: MdpModel, policy: SoftmaxPolicy,
                      tol: float = DEFAULT_EIG_TOL,
                      max_iter: int = DEFAULT_EIG_MAX_ITER,
                      stat_tol: float = DEFAULT_STAT_TOL) -> SpectralSolution:
    q = build_q_matrix(model, policy)
    lam, v = perron_eigenpair(q, model.ref_state, tol=tol, max_iter=max_iter)
    twisted = q * v[None, :] / (v[:, None] * lam)
    p_pi = model.transition_matrix(policy.prob_table())
    d = stationary_distribution(p_pi, tol=stat_tol)
    d_twisted = stationary_distribution(twisted, tol=stat_tol)
    return SpectralSolution(lam=lam, value=v, twisted=twisted, stat_orig=d,
                            stat_twisted=d_twisted, cost=float(np.log(lam)))


def risk_sensitive_cost(model: MdpModel, policy: SoftmaxPolicy,
                        tol: float = DEFAULT_EIG_TOL,
                        max_iter: int = DEFAULT_EIG_MAX_ITER,
                        v0: np.ndarray | None = None) -> float:
    """log(lam) for the policy's multiplicative kernel; ``v0`` warm-starts
    the power iteration."""
    q = build_q_matrix(model, policy)
    lam, _ = perron_eigenpair(q, model.ref_state, tol=tol, max_iter=max_iter, v0=v0)
    return float(np.log(lam))


def average_cost(model: MdpModel, policy: SoftmaxPolicy,
                 stat_tol: float = DEFAULT_STAT_TOL) -> float:
    """Long-run average single-stage cost under the policy."""
    probs = policy.prob_table()
    d = stationary_distribution(model.transition_matrix(probs), tol=stat_tol)
    return float(d @ model.expected_cost(probs))


def _bracket_table(model: MdpModel, policy: SoftmaxPolicy,
                   sol: SpectralSolution) -> np.ndarray:
    """(S, A) table m(i,a) = sum_j exp(alpha c) p V(j) / (lam V(i))."""
    w = np.einsum("saj,j->sa", model.exp_cost_kernel, sol.value)
    return w / (sol.lam * sol.value[:, None])


def exact_policy_gradient(model: MdpModel, policy: SoftmaxPolicy,
                          sol: SpectralSolution | None = None) -> np.ndarray:
    """Gradient of log(lam) with respect to the policy parameter.

    Computed as the twisted-stationary average of
    pi(i,a) grad log pi(i,a) (m(i,a) - 1) with the unit baseline.
    """
    if sol is None:
        sol = spectral_solution(model, policy)
    m = _bracket_table(model, policy, sol)
    glog = policy.log_grad_table()
    return np.einsum("s,sa,sa,saf->f", sol.stat_twisted, policy.prob_table(),
                     m - 1.0, glog)


def modified_avg_cost(model: MdpModel, policy: SoftmaxPolicy,
                      sol: SpectralSolution | None = None) -> np.ndarray:
    """Twisted-stationary expectation of the per-stage gradient cost
    g(i,a,j) = grad log pi(i,a) (rho(i,a,j) - 1).

    Same quantity as :func:`exact_policy_gradient`, evaluated by the explicit
    triple sum over (i, a, j); tests use the agreement as a cross-check.
    """
    if sol is None:
        sol = spectral_solution(model, policy)
    rho = (np.exp(model.alpha * model.cost) * sol.value[None, None, :]
           / (sol.lam * sol.value[:, None, None]))
    glog = policy.log_grad_table()
    return np.einsum("s,sa,saj,saj,saf->f", sol.stat_twisted, policy.prob_table(),
                     model.trans, rho - 1.0, glog)


def grad_bellman_solution(model: MdpModel, policy: SoftmaxPolicy,
                          sol: SpectralSolution | None = None) -> np.ndarray:
    """Unique table W (S, dim) solving W = T W - W[ref] e, where T is the
    average-cost operator with per-stage cost g and transition weights
    rho p (the twisted kernel).

    W[ref] equals the exact policy gradient; the sampled gradient critic's
    table converges to W.
    """
    if sol is None:
        sol = spectral_solution(model, policy)
    n = model.n_states
    m = _bracket_table(model, policy, sol)
    glog = policy.log_grad_table()
    gbar = np.einsum("sa,sa,saf->sf", policy.prob_table(), m - 1.0, glog)
    e_mat = np.zeros((n, n))
    e_mat[:, model.ref_state] = 1.0
    return np.linalg.solve(np.eye(n) + e_mat - sol.twisted, gbar)


@dataclass(frozen=True)
class CriticFixedPoint:
    """Limit of the projected multiplicative critic for a frozen policy."""

    m_matrix: np.ndarray   # sqrt(D) Phi (Phi' D Phi)^-1 Phi' D Q sqrt(D)^-1
    gamma: float           # its dominant eigenvalue
    y_vec: np.ndarray      # dominant eigenvector, equals sqrt(D) Phi r_star
    r_star: np.ndarray     # critic weights, normalized so phi(ref)'r = gamma
    residual: float        # relative eigen-residual of (gamma, y_vec)


def critic_fixed_point(model: MdpModel, policy: SoftmaxPolicy, phi: np.ndarray,
                       tol: float = DEFAULT_EIG_TOL,
                       max_iter: int = DEFAULT_EIG_MAX_ITER) -> CriticFixedPoint:
    """Fixed point of the function-approximation critic at a frozen policy.

    Solves the dominant eigenproblem of H = (Phi' D Phi)^-1 Phi' D Q Phi and
    maps it back through Y = sqrt(D) Phi r.
    """
    phi = np.asarray(phi, dtype=float)
    q = build_q_matrix(model, policy)
    d = stationary_distribution(model.transition_matrix(policy.prob_table()))
    dphi = d[:, None] * phi
    gram = phi.T @ dphi
    try:
        h = np.linalg.solve(gram, dphi.T @ q @ phi)
    except np.linalg.LinAlgError as exc:
        raise FeatureDegeneracyError(f"Phi' D Phi is singular: {exc}") from None
    phi_ref = phi[model.ref_state]
    if not (phi_ref > 0).any():
        raise FeatureDegeneracyError("reference state has an all-zero feature row")
    # H is nonnegative for positive-cone orthogonal Phi (disjoint supports),
    # so the same normalized power iteration applies; normalize at a feature
    # coordinate active at the reference state.
    ref_k = int(np.argmax(phi_ref))
    gamma, r = perron_eigenpair(h, ref_k, tol=tol, max_iter=max_iter)
    scale = gamma / float(phi_ref @ r)
    r = r * scale
    sqrt_d = np.sqrt(d)
    y = sqrt_d * (phi @ r)
    m_matrix = (sqrt_d[:, None] * phi) @ np.linalg.solve(gram, dphi.T @ q) / sqrt_d[None, :]
    resid = np.abs(m_matrix @ y - gamma * y).max() / (gamma * np.abs(y).max())
    return CriticFixedPoint(m_matrix=m_matrix, gamma=float(gamma), y_vec=y,
                            r_star=r, residual=float(resid))


@dataclass(frozen=True)
class Gtd2FixedPoint:
    """Limit of the importance-sampled gradient critic for a frozen policy
    and frozen value weights."""

    r_tilde_mat: np.ndarray  # (S, S) policy-averaged ratio-weighted kernel
    b1_mat: np.ndarray       # (S, x1) per-state expected gradient cost rows
    c1: np.ndarray           # (x3, x3) Psi' D Psi
    a1: np.ndarray           # (x3, x3) Psi' D (I + E - R~) Psi
    b1: np.ndarray           # (x3, x1) Psi' D B1
    w_star: np.ndarray       # (x1, x3) = (A1^-1 b1)'
    grad_estimate: np.ndarray  # w_star psi(ref), the gradient read-out


def gtd2_fixed_point(model: MdpModel, policy: SoftmaxPolicy, phi: np.ndarray,
                     r_theta: np.ndarray, psi: np.ndarray,
                     delta2: float = 1e-6) -> Gtd2FixedPoint:
    """Fixed point of the two-matrix gradient-critic recursion.

    The per-transition ratio g1(i,a,j) = exp(alpha c) r'phi(j) / max(r'phi(i)
    r'phi(ref), delta2) is built from the supplied critic weights.  A1 is the
    expectation of the per-sample update matrix psi(i)(psi(i) + psi(ref) -
    g1 psi(j))'; with that orientation the sampled recursion converges to
    (A1^-1 b1)' and the read-out w_star psi(ref) is the policy gradient when
    the critic weights are exact.
    """
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    n = model.n_states
    i0 = model.ref_state
    values = phi @ np.asarray(r_theta, dtype=float)
    v0 = float(values[i0])
    den = np.maximum(values * v0, delta2)

    probs = policy.prob_table()
    d = stationary_distribution(model.transition_matrix(probs))
    kv = np.einsum("sa,saj->sj", probs, model.exp_cost_kernel)  # pi-averaged kernel
    r_tilde = kv * values[None, :] / den[:, None]

    q1 = np.einsum("saj,j->sa", model.exp_cost_kernel, values) / den[:, None]
    glog = policy.log_grad_table()
    b1_rows = np.einsum("sa,sa,saf->sf", probs, q1 - 1.0, glog)

    dpsi = d[:, None] * psi
    c1 = psi.T @ dpsi
    e_psi = np.tile(psi[i0], (n, 1))
    a1 = dpsi.T @ (psi + e_psi - r_tilde @ psi)
    b1 = dpsi.T @ b1_rows

    if np.linalg.matrix_rank(c1) < c1.shape[0]:
        raise SingularSystemError("C1")
    try:
        w_cols = np.linalg.solve(a1, b1)
    except np.linalg.LinAlgError:
        raise SingularSystemError("A1") from None
    if not np.isfinite(w_cols).all():
        raise SingularSystemError("A1")
    w_star = w_cols.T
    return Gtd2FixedPoint(r_tilde_mat=r_tilde, b1_mat=b1_rows, c1=c1, a1=a1,
                          b1=b1, w_star=w_star,
                          grad_estimate=w_star @ psi[i0])


def gtd2_stability_matrix(fp: Gtd2FixedPoint) -> np.ndarray:
    """Block matrix [[-C1, -A1], [A1', 0]] governing the coupled recursion;
    all of its eigenvalues have negative real part when A1 and C1 are
    non-singular."""
    x3 = fp.c1.shape[0]
    g = np.zeros((2 * x3, 2 * x3))
    g[:x3, :x3] = -fp.c1
    g[:x3, x3:] = -fp.a1
    g[x3:, :x3] = fp.a1.T
    return g
