"""Two-dimensional gridworld benchmark with slip dynamics and
parity-structured costs.

From every cell the nine moves are left, right, up, down, top-left,
top-right, bottom-left, bottom-right, stay (indices 0-8).  The suggested
move is realized with probability 1 - slip_prob; otherwise one of the
other eight directions is taken uniformly.  Moves that would leave the
grid keep the agent in its cell.

Costs attach to the realized direction: designated fixed-cost states cost
10 regardless; elsewhere an even-indexed action costs 6 when the suggested
direction is realized and 8 otherwise (mean 7, std 1), an odd-indexed
action costs 1 or 9 (mean 5, std 4).

Because clamping can land several directions on the same next cell, the
realized direction is not always recoverable from (state, action, next).
The dense cost tensor therefore stores the risk-level certainty equivalent
c(i,a,j) = log E[exp(alpha c) | i,a,j] / alpha, which leaves the
multiplicative kernel - and with it the spectral solution, twisted kernel,
and risk-sensitive cost of the direction-level dynamics - exactly intact.
Entries reachable by a single direction (all moves from interior cells)
keep the plain rule costs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp import MdpModel

#: displacement (row, col) per direction, in the conventional listing order
DIRECTIONS = ((0, -1), (0, 1), (-1, 0), (1, 0),
              (-1, -1), (-1, 1), (1, -1), (1, 1), (0, 0))
N_ACTIONS = len(DIRECTIONS)


class GridConfigError(ValueError):
    """Raised for inconsistent gridworld configurations."""


@dataclass(frozen=True)
class GridConfig:
    side: int
    slip_prob: float = 0.5
    fixed_cost_states: tuple[int, ...] | None = None   # None selects the corners
    even_costs: tuple[float, float] = (6.0, 8.0)       # (match, mismatch)
    odd_costs: tuple[float, float] = (1.0, 9.0)
    fixed_cost: float = 10.0

    def __post_init__(self):
        if self.side < 2:
            raise GridConfigError(f"grid side must be >= 2, got {self.side}")
        if not 0.0 <= self.slip_prob <= 1.0:
            raise GridConfigError(f"slip_prob must lie in [0, 1], got {self.slip_prob}")
        if min(*self.even_costs, *self.odd_costs, self.fixed_cost) <= 0:
            raise GridConfigError("costs must be positive")
        n = self.side * self.side
        fixed = self.corner_states() if self.fixed_cost_states is None \
            else tuple(int(s) for s in self.fixed_cost_states)
        for s in fixed:
            if not 0 <= s < n:
                raise GridConfigError(f"fixed-cost state {s} outside [0, {n})")
        object.__setattr__(self, "fixed_cost_states", fixed)

    @property
    def n_states(self) -> int:
        return self.side * self.side

    def corner_states(self) -> tuple[int, ...]:
        d = self.side
        return (0, d - 1, d * (d - 1), d * d - 1)

    def state_index(self, row: int, col: int) -> int:
        return row * self.side + col

    def move(self, state: int, direction: int) -> int:
        """Destination cell for a direction, staying put on off-grid moves."""
        row, col = divmod(state, self.side)
        dr, dc = DIRECTIONS[direction]
        r, c = row + dr, col + dc
        if 0 <= r < self.side and 0 <= c < self.side:
            return self.state_index(r, c)
        return state

    def direction_cost(self, state: int, action: int, direction: int) -> float:
        """Single-stage cost when ``direction`` is realized after suggesting
        ``action`` from ``state``; matching means the suggestion itself was
        realized, coincidental landings do not count."""
        if state in self.fixed_cost_states:
            return self.fixed_cost
        match, mismatch = self.even_costs if action % 2 == 0 else self.odd_costs
        return match if direction == action else mismatch

    def direction_probs(self, action: int) -> np.ndarray:
        p = np.full(N_ACTIONS, self.slip_prob / (N_ACTIONS - 1))
        p[action] = 1.0 - self.slip_prob
        return p


def action_cost_distribution(config: GridConfig, state: int, action: int):
    """Realized-direction cost distribution at (state, action):
    list of (cost, probability) pairs with merged equal costs."""
    probs = config.direction_probs(action)
    acc: dict[float, float] = {}
    for d in range(N_ACTIONS):
        c = config.direction_cost(state, action, d)
        acc[c] = acc.get(c, 0.0) + probs[d]
    return sorted(acc.items())


def build_gridworld(config: GridConfig, alpha: float, ref_state: int = 0) -> MdpModel:
    """Dense MDP tensors for the configured grid at risk factor ``alpha``."""
    n = config.n_states
    trans = np.zeros((n, N_ACTIONS, n))
    cost = np.zeros((n, N_ACTIONS, n))
    for i in range(n):
        for a in range(N_ACTIONS):
            probs = config.direction_probs(a)
            groups: dict[int, list[tuple[float, float]]] = {}
            for d in range(N_ACTIONS):
                if probs[d] == 0.0:
                    continue
                j = config.move(i, d)
                groups.setdefault(j, []).append((probs[d], config.direction_cost(i, a, d)))
            for j, entries in groups.items():
                p = sum(q for q, _ in entries)
                trans[i, a, j] = p
                costs = {c for _, c in entries}
                if len(costs) == 1:
                    cost[i, a, j] = costs.pop()
                else:
                    weight = sum(q * np.exp(alpha * c) for q, c in entries)
                    cost[i, a, j] = np.log(weight / p) / alpha
    return MdpModel(trans=trans, cost=cost, alpha=alpha, ref_state=ref_state)


def support_strongly_connected(model: MdpModel) -> bool:
    """True when the union support graph (an edge wherever any action moves
    i to j with positive probability) is strongly connected, which makes the
    chain irreducible under every everywhere-positive policy."""
    support = model.trans.max(axis=1) > 0.0
    n = model.n_states

    def reaches_all(adj) -> bool:
        seen = np.zeros(n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            i = stack.pop()
            for j in np.flatnonzero(adj[i]):
                if not seen[j]:
                    seen[j] = True
                    stack.append(int(j))
        return bool(seen.all())

    return reaches_all(support) and reaches_all(support.T)
