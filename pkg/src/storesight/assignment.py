"""Linear assignment and the association primitives built on it."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidThresholds, NonFiniteCost
from .geometry import BBox, Detection, iou_distance_matrix


@dataclass
class AssignmentResult:
    matches: list[tuple[int, int]] = field(default_factory=list)
    unmatched_rows: list[int] = field(default_factory=list)
    unmatched_cols: list[int] = field(default_factory=list)

    def total_cost(self, cost) -> float:
        cost = np.asarray(cost, dtype=float)
        return float(sum(cost[i, j] for i, j in self.matches))


def _hungarian(cost: np.ndarray) -> np.ndarray:
    """Shortest augmenting path with potentials, for ``n <= m``.

    Returns ``col_of_row`` of length n. Runs in O(n^2 m). Rows are inserted in
    ascending order and the scan keeps the first (lowest) column on ties, so the
    result is deterministic.
    """
    n, m = cost.shape
    INF = np.inf
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    # row_of_col[j] for 1-based column j; 0 means free
    row_of_col = np.zeros(m + 1, dtype=int)
    way = np.zeros(m + 1, dtype=int)
    for i in range(1, n + 1):
        row_of_col[0] = i
        j0 = 0
        minv = np.full(m + 1, INF)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = row_of_col[j0]
            free = ~used[1:]
            reduced = cost[i0 - 1] - u[i0] - v[1:]
            better = free & (reduced < minv[1:])
            minv[1:][better] = reduced[better]
            way[1:][better] = j0
            cand = np.where(free, minv[1:], INF)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            used_idx = np.nonzero(used)[0]
            u[row_of_col[used_idx]] += delta
            v[used_idx] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if row_of_col[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            row_of_col[j0] = row_of_col[j1]
            j0 = j1
    col_of_row = np.full(n, -1, dtype=int)
    for j in range(1, m + 1):
        if row_of_col[j]:
            col_of_row[row_of_col[j] - 1] = j - 1
    return col_of_row


def solve_assignment(cost) -> AssignmentResult:
    """Minimum-cost matching of ``min(rows, cols)`` pairs on a rectangular cost matrix."""
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        cost = cost.reshape(len(cost), -1) if cost.size else np.zeros((len(cost), 0))
    n, m = cost.shape
    if not np.all(np.isfinite(cost)):
        raise NonFiniteCost("cost matrix contains NaN or infinite entries")
    if n == 0 or m == 0:
        return AssignmentResult([], list(range(n)), list(range(m)))
    if n <= m:
        col_of_row = _hungarian(cost)
        matches = [(i, int(col_of_row[i])) for i in range(n)]
    else:
        row_of_col = _hungarian(cost.T)
        matches = sorted((int(row_of_col[j]), j) for j in range(m))
    rows = {i for i, _ in matches}
    cols = {j for _, j in matches}
    return AssignmentResult(
        matches,
        [i for i in range(n) if i not in rows],
        [j for j in range(m) if j not in cols],
    )


def partition_by_score(dets: Sequence[Detection], tau_high: float, tau_low: float):
    """Split detections into ``(high, low, discarded)`` by confidence."""
    if not 0.0 <= tau_low <= tau_high <= 1.0:
        raise InvalidThresholds(f"need 0 <= tau_low <= tau_high <= 1, got {tau_low}, {tau_high}")
    high, low, discarded = [], [], []
    for d in dets:
        if d.score >= tau_high:
            high.append(d)
        elif d.score >= tau_low:
            low.append(d)
        else:
            discarded.append(d)
    return high, low, discarded


def associate(track_boxes: Sequence[BBox], det_boxes: Sequence[BBox], max_cost: float) -> AssignmentResult:
    """Optimal IoU matching, then demote pairs costing more than ``max_cost``."""
    if not 0.0 < max_cost <= 1.0:
        raise InvalidThresholds(f"max_cost must be in (0, 1], got {max_cost}")
    cost = iou_distance_matrix(track_boxes, det_boxes)
    res = solve_assignment(cost)
    kept = []
    rows = set(res.unmatched_rows)
    cols = set(res.unmatched_cols)
    for i, j in res.matches:
        if cost[i, j] > max_cost:
            rows.add(i)
            cols.add(j)
        else:
            kept.append((i, j))
    return AssignmentResult(kept, sorted(rows), sorted(cols))
