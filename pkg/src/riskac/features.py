"""Feature constructions: state aggregation for critics, one-hot policy features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class FeatureError(ValueError):
    """Raised when feature matrices violate their structural requirements."""


def contiguous_groups(n_states: int, factor: int) -> np.ndarray:
    """Partition states into contiguous blocks of ``factor`` states.

    factor=1 is the tabular (one group per state) case.  The last group may
    be smaller when factor does not divide the state count.
    """
    if factor < 1:
        raise FeatureError(f"aggregation factor must be >= 1, got {factor}")
    return np.arange(n_states) // int(factor)


def indicator_matrix(groups: np.ndarray) -> np.ndarray:
    """Group-membership indicator columns: (S, n_groups) with 0/1 entries.

    Columns are orthogonal, nonnegative, and each has a positive entry, so
    the matrix is always a valid main-critic feature matrix.
    """
    groups = np.asarray(groups, dtype=int)
    n_groups = int(groups.max()) + 1
    phi = np.zeros((groups.shape[0], n_groups))
    phi[np.arange(groups.shape[0]), groups] = 1.0
    return phi


def tabular_features(n_states: int) -> np.ndarray:
    return np.eye(n_states)


def state_action_onehot(n_states: int, n_actions: int) -> np.ndarray:
    """One-hot policy features over (state, action) pairs: (S, A, S*A)."""
    xi = np.zeros((n_states, n_actions, n_states * n_actions))
    for i in range(n_states):
        for a in range(n_actions):
            xi[i, a, i * n_actions + a] = 1.0
    return xi


def grouped_action_features(groups: np.ndarray, n_actions: int) -> np.ndarray:
    """One-hot policy features over (state group, action): (S, A, G*A)."""
    groups = np.asarray(groups, dtype=int)
    n_groups = int(groups.max()) + 1
    xi = np.zeros((groups.shape[0], n_actions, n_groups * n_actions))
    for i, g in enumerate(groups):
        for a in range(n_actions):
            xi[i, a, g * n_actions + a] = 1.0
    return xi


@dataclass(frozen=True)
class FeatureMaps:
    """Critic feature matrices: phi for the value critic, psi for the
    gradient critic.

    phi's columns must be pairwise orthogonal, nonnegative, and each must
    contain a positive entry; psi must have full column rank.
    """

    phi: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        phi = np.ascontiguousarray(np.asarray(self.phi, dtype=float))
        psi = np.ascontiguousarray(np.asarray(self.psi, dtype=float))
        if phi.ndim != 2 or psi.ndim != 2 or phi.shape[0] != psi.shape[0]:
            raise FeatureError(
                f"phi {phi.shape} and psi {psi.shape} must be 2-d with matching state counts"
            )
        if (phi < 0).any():
            raise FeatureError("phi entries must be nonnegative")
        gram = phi.T @ phi
        off = gram - np.diag(np.diag(gram))
        if np.abs(off).max(initial=0.0) > 1e-10:
            raise FeatureError("phi columns must be pairwise orthogonal")
        if (np.diag(gram) <= 0).any():
            raise FeatureError("every phi column needs at least one positive entry")
        if np.linalg.matrix_rank(psi) < psi.shape[1]:
            raise FeatureError("psi must have full column rank")
        phi.flags.writeable = False
        psi.flags.writeable = False
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "psi", psi)

    @property
    def n_states(self) -> int:
        return self.phi.shape[0]

    @property
    def value_dim(self) -> int:
        return self.phi.shape[1]

    @property
    def grad_dim(self) -> int:
        return self.psi.shape[1]


def aggregation_features(n_states: int, factor: int) -> FeatureMaps:
    """Indicator features for both critics over the same contiguous partition."""
    phi = indicator_matrix(contiguous_groups(n_states, factor))
    return FeatureMaps(phi=phi, psi=phi.copy())
