"""Streaming run statistics over a sliding window of recent costs."""

from __future__ import annotations

import numpy as np


def running_risk_cost(costs, alpha: float) -> float:
    """log( mean(exp(alpha * c)) ) over a window, computed with a max shift
    so large alpha*c cannot overflow."""
    costs = np.asarray(costs, dtype=float)
    if costs.size == 0:
        raise ValueError("running risk cost needs a non-empty window")
    z = alpha * costs
    m = z.max()
    return float(m + np.log(np.mean(np.exp(z - m))))


class WindowStats:
    """Sliding window over the last ``window`` costs with O(1) mean/std updates.

    Mean and variance come from compensated running sums maintained under
    insertion and eviction; the risk-sensitive cost is evaluated directly on
    the buffered window when queried.  std is the population deviation over
    exactly min(window, pushes so far) samples.
    """

    def __init__(self, window: int):
        if window <= 0:
            raise ValueError(f"window must be positive, got {window}")
        self.window = int(window)
        self._buf = np.zeros(self.window)
        self._pos = 0
        self._count = 0
        self._sum = 0.0
        self._sum_sq = 0.0
        self._comp1 = 0.0  # Kahan compensation terms
        self._comp2 = 0.0

    def _add(self, x: float, x_sq: float):
        y = x - self._comp1
        t = self._sum + y
        self._comp1 = (t - self._sum) - y
        self._sum = t
        y = x_sq - self._comp2
        t = self._sum_sq + y
        self._comp2 = (t - self._sum_sq) - y
        self._sum_sq = t

    def push(self, cost: float):
        cost = float(cost)
        if self._count >= self.window:
            old = self._buf[self._pos]
            self._add(-old, -old * old)
        else:
            self._count += 1
        self._buf[self._pos] = cost
        self._add(cost, cost * cost)
        self._pos = (self._pos + 1) % self.window

    @property
    def count(self) -> int:
        return self._count

    def values(self) -> np.ndarray:
        """Current window content (unordered; statistics are order-free)."""
        return self._buf[: self._count].copy()

    def mean(self) -> float:
        if self._count == 0:
            raise ValueError("no samples in window")
        return self._sum / self._count

    def std(self) -> float:
        if self._count == 0:
            raise ValueError("no samples in window")
        m = self._sum / self._count
        var = self._sum_sq / self._count - m * m
        return float(np.sqrt(max(var, 0.0)))

    def risk_cost(self, alpha: float) -> float:
        if self._count == 0:
            raise ValueError("no samples in window")
        return running_risk_cost(self._buf[: self._count], alpha)
