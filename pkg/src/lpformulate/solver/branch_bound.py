"""Integer solving: branch and bound over LP relaxations, plus a
brute-force box-enumeration oracle used to cross-check it in tests.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from ..canonical import SENSE_GE, SENSE_LE, CanonicalLP, CanonicalRow
from ..errors import BoxTooLarge, ToolkitError
from .simplex import (
    DEFAULT_TOLERANCES,
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    LpSolution,
    SolverTolerances,
    lp_arrays,
    solve_lp,
)

_NODE_LIMIT = 1_000_000
_CHUNK = 1 << 19  # points per brute-force batch


@dataclass(frozen=True)
class IlpSolution:
    status: str
    objective_value: float | None = None
    assignment: Mapping[str, float] = field(default_factory=dict)
    node_count: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def solve_ilp(
    lp: CanonicalLP, tol: SolverTolerances = DEFAULT_TOLERANCES
) -> IlpSolution:
    """Branch and bound: most-fractional branching, best-bound node order."""
    names = lp.variable_order
    lp_arrays(lp)  # validates dimensions and objective count up front
    maximize = lp.objectives[0].direction == "maximize"
    sign = 1.0 if maximize else -1.0

    root = solve_lp(lp, tol)
    nodes = 1
    if root.status == UNBOUNDED:
        # an unbounded relaxation leaves nothing to branch on
        return IlpSolution(status=UNBOUNDED, node_count=nodes)
    if root.status == INFEASIBLE:
        return IlpSolution(status=INFEASIBLE, node_count=nodes)

    best: LpSolution | None = None
    best_value = -math.inf  # in maximize orientation

    counter = 0
    heap: list[tuple[float, int, tuple[CanonicalRow, ...], LpSolution]] = []
    heapq.heappush(heap, (-sign * root.objective_value, counter, (), root))

    while heap:
        neg_bound, _, bounds, relax = heapq.heappop(heap)
        bound = -neg_bound
        if bound <= best_value + tol.pivot:
            continue
        frac_var = _most_fractional(lp, relax, tol)
        if frac_var is None:
            value = sign * relax.objective_value
            if value > best_value + tol.pivot:
                best_value = value
                best = relax
            continue

        split = relax.assignment[names[frac_var]]
        for child_row in _branch_rows(lp, frac_var, split):
            child_lp = _with_rows(lp, bounds + (child_row,))
            if nodes >= _NODE_LIMIT:
                raise ToolkitError("branch-and-bound node limit exceeded")
            child = solve_lp(child_lp, tol)
            nodes += 1
            if child.status != OPTIMAL:
                continue
            child_bound = sign * child.objective_value
            if child_bound <= best_value + tol.pivot:
                continue
            counter += 1
            heapq.heappush(
                heap, (-child_bound, counter, bounds + (child_row,), child)
            )

    if best is None:
        return IlpSolution(status=INFEASIBLE, node_count=nodes)
    assignment = {}
    for i, name in enumerate(names):
        v = best.assignment[name]
        assignment[name] = float(round(v)) if lp.integral[i] else float(v)
    c, _, _, _ = lp_arrays(lp)
    value = float(c @ np.array([assignment[n] for n in names]))
    return IlpSolution(
        status=OPTIMAL,
        objective_value=value,
        assignment=assignment,
        node_count=nodes,
    )


def _most_fractional(
    lp: CanonicalLP, sol: LpSolution, tol: SolverTolerances
) -> int | None:
    """Index of the integral variable farthest from an integer, if any."""
    worst = None
    worst_dist = tol.integrality
    for i, name in enumerate(lp.variable_order):
        if not lp.integral[i]:
            continue
        v = sol.assignment[name]
        dist = abs(v - round(v))
        if dist > worst_dist:
            worst_dist = dist
            worst = i
    return worst


def _branch_rows(lp: CanonicalLP, var: int, value: float):
    n = len(lp.variable_order)
    unit = [Fraction(0)] * n
    unit[var] = Fraction(1)
    floor_rhs = Fraction(math.floor(value))
    yield CanonicalRow(tuple(unit), SENSE_LE, floor_rhs, note="branch")
    yield CanonicalRow(tuple(unit), SENSE_GE, floor_rhs + 1, note="branch")


def _with_rows(lp: CanonicalLP, extra: tuple[CanonicalRow, ...]) -> CanonicalLP:
    return CanonicalLP(
        objectives=lp.objectives,
        rows=lp.rows + extra,
        variable_order=lp.variable_order,
        nonneg=lp.nonneg,
        integral=lp.integral,
    )


def brute_force_ilp(
    lp: CanonicalLP,
    box: Sequence[tuple[int, int]],
    tol: SolverTolerances = DEFAULT_TOLERANCES,
    max_points: int = 10_000_000,
) -> IlpSolution:
    """Exhaustive scan of all integer points in the box; exact within it.

    The box must be known to contain the feasible region for the result
    to agree with solve_ilp; the scan itself is the independent oracle.
    """
    c, a, b, senses = lp_arrays(lp)
    n = len(lp.variable_order)
    if len(box) != n:
        raise BoxTooLarge(f"box has {len(box)} ranges for {n} variables")
    if not all(lp.integral):
        raise ToolkitError("brute force requires all variables integral")

    sizes = [hi - lo + 1 for lo, hi in box]
    if any(s <= 0 for s in sizes):
        return IlpSolution(status=INFEASIBLE, node_count=0)
    total = math.prod(sizes)
    if total > max_points:
        raise BoxTooLarge(f"box holds {total} points (budget {max_points})")

    lows = np.array([lo for lo, _ in box], dtype=float)
    shape = tuple(sizes)
    maximize = lp.objectives[0].direction == "maximize"
    slack = tol.feasibility * np.maximum(1.0, np.abs(b)) if len(b) else None

    best_value = -np.inf
    best_point: np.ndarray | None = None
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total))
        coords = np.unravel_index(idx, shape)
        pts = np.stack(coords, axis=1).astype(float) + lows
        feasible = np.ones(len(pts), dtype=bool)
        for j in range(n):
            if lp.nonneg[j]:
                feasible &= pts[:, j] >= -tol.feasibility
        if len(b):
            lhs = pts @ a.T
            for i, sense in enumerate(senses):
                if sense == SENSE_LE:
                    feasible &= lhs[:, i] <= b[i] + slack[i]
                else:
                    feasible &= lhs[:, i] >= b[i] - slack[i]
        if not feasible.any():
            continue
        good = pts[feasible]
        values = good @ c
        pick = int(np.argmax(values) if maximize else np.argmin(values))
        value = float(values[pick])
        if best_point is None or (value > best_value if maximize else value < best_value):
            best_value = value
            best_point = good[pick]

    if best_point is None:
        return IlpSolution(status=INFEASIBLE, node_count=int(total))
    assignment = {
        name: float(v) for name, v in zip(lp.variable_order, best_point)
    }
    return IlpSolution(
        status=OPTIMAL,
        objective_value=best_value,
        assignment=assignment,
        node_count=int(total),
    )
