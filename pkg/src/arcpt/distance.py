"""Distance between two changepoint configurations.

``d(C1, C2) = |m - k| + min-cost matching`` of the smaller configuration's
times into the larger one's, with cost ``|tau - eta| / N`` per matched pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .series import ChangepointConfig


def assignment_min_cost(costs) -> tuple[float, list[tuple[int, int]]]:
    """Match every column to a distinct row at minimum total cost.

    ``costs`` has shape ``(rows, cols)`` with ``rows >= cols``. Shortest
    augmenting paths with dual potentials (Hungarian method), ``O(cols^2 rows)``.
    Returns the cost and the 0-based ``(row, col)`` pairs sorted by column.
    """
    c = np.asarray(costs, dtype=float)
    if c.ndim != 2:
        raise ValueError("cost matrix must be two-dimensional")
    rows, cols = c.shape
    if rows < cols:
        raise ValueError(f"need rows >= cols, got {rows} x {cols}")
    if cols == 0:
        return 0.0, []
    if not np.all(np.isfinite(c)):
        raise ValueError("costs must be finite")
    # columns are the agents placed one at a time; rows are the slots.
    # index 0 of the slot arrays is a virtual slot holding the current agent.
    a = c.T
    u = np.zeros(cols + 1)
    v = np.zeros(rows + 1)
    owner = np.zeros(rows + 1, dtype=int)  # agent (1-based) occupying each slot
    way = np.zeros(rows + 1, dtype=int)
    for i in range(1, cols + 1):
        owner[0] = i
        j0 = 0
        minv = np.full(rows + 1, np.inf)
        used = np.zeros(rows + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = owner[j0]
            free = ~used[1:]
            cur = a[i0 - 1] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            masked = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(masked)) + 1
            delta = masked[j1 - 1]
            u[owner[used]] += delta
            v[used] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1
    pairs = sorted(((int(j - 1), int(owner[j] - 1)) for j in range(1, rows + 1) if owner[j]),
                   key=lambda rc: rc[1])
    total = float(sum(c[r, k] for r, k in pairs))
    return total, pairs


@dataclass(frozen=True)
class Distance:
    value: float
    count_term: int
    assignment_cost: float
    matching: tuple[tuple[int, int], ...]

    def to_dict(self) -> dict:
        return {"distance": self.value, "count_term": self.count_term,
                "assignment_cost": self.assignment_cost,
                "matching": [list(pair) for pair in self.matching]}


def _as_config(c) -> ChangepointConfig:
    return c if isinstance(c, ChangepointConfig) else ChangepointConfig(tuple(int(t) for t in c))


def config_match(c1, c2, n: int) -> Distance:
    """Distance with its matching, given as ``(time in c1, time in c2)`` pairs."""
    c1, c2 = _as_config(c1), _as_config(c2)
    c1.validate(n)
    c2.validate(n)
    # equal counts are oriented by the times too, so d(a, b) and d(b, a) do the same arithmetic
    swapped = (c1.m, c1.taus) < (c2.m, c2.taus)
    big, small = (c2, c1) if swapped else (c1, c2)
    count = big.m - small.m
    if small.m == 0:
        return Distance(float(count), count, 0.0, ())
    t_big = np.asarray(big.taus, dtype=float)
    t_small = np.asarray(small.taus, dtype=float)
    costs = np.abs(t_big[:, None] - t_small[None, :]) / n
    cost, pairs = assignment_min_cost(costs)
    matched = [(big.taus[r], small.taus[k]) for r, k in pairs]
    if swapped:
        matched = [(b, a) for a, b in matched]
    return Distance(count + cost, count, cost, tuple(sorted(matched)))


def config_distance(c1, c2, n: int) -> float:
    """``|m - k|`` plus the minimum matching cost; symmetric by construction."""
    return config_match(c1, c2, n).value
