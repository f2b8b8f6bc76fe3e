"""Dense two-phase simplex for the toolkit's desk-scale linear programs.

Maximization/minimization over nonnegative variables with <= / >= rows.
Bland's smallest-index pivoting rule is used in both phases, which rules
out cycling. Floating point with a small pivot tolerance is enough at
this problem scale; exactness where it matters (matching) lives upstream
on rationals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..canonical import SENSE_GE, SENSE_LE, CanonicalLP
from ..errors import DimensionMismatch, MultiObjectiveUnsupported

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNBOUNDED = "Unbounded"


@dataclass(frozen=True)
class SolverTolerances:
    pivot: float = 1e-9
    feasibility: float = 1e-9
    integrality: float = 1e-6


DEFAULT_TOLERANCES = SolverTolerances()


@dataclass(frozen=True)
class LpSolution:
    status: str
    objective_value: float | None = None
    assignment: Mapping[str, float] = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def lp_arrays(lp: CanonicalLP) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[str]]:
    """Float views of a CanonicalLP: objective c, matrix A, rhs b, senses."""
    if len(lp.objectives) != 1:
        raise MultiObjectiveUnsupported(
            f"expected exactly one objective, got {len(lp.objectives)}"
        )
    n = len(lp.variable_order)
    obj = lp.objectives[0]
    if len(obj.coefficients) != n:
        raise DimensionMismatch("objective length disagrees with variable order")
    c = np.array([float(v) for v in obj.coefficients])
    rows = []
    rhs = []
    senses = []
    for i, row in enumerate(lp.rows):
        if len(row.coefficients) != n:
            raise DimensionMismatch(f"row {i} length disagrees with variable order")
        rows.append([float(v) for v in row.coefficients])
        rhs.append(float(row.rhs))
        senses.append(row.sense)
    a = np.array(rows) if rows else np.zeros((0, n))
    b = np.array(rhs)
    return c, a, b, senses


def solve_lp(lp: CanonicalLP, tol: SolverTolerances = DEFAULT_TOLERANCES) -> LpSolution:
    """Solve the LP relaxation of a canonical formulation."""
    c, a, b, senses = lp_arrays(lp)
    maximize = lp.objectives[0].direction == "maximize"
    status, x = _simplex(c if not maximize else -c, a, b, senses, tol)
    if status != OPTIMAL:
        return LpSolution(status=status)
    value = float(c @ x)
    assignment = {name: float(v) for name, v in zip(lp.variable_order, x)}
    return LpSolution(status=OPTIMAL, objective_value=value, assignment=assignment)


def _simplex(
    c: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
    senses: list[str],
    tol: SolverTolerances,
) -> tuple[str, np.ndarray]:
    """Minimize c.x subject to a x {<=,>=} b, x >= 0."""
    m, n = a.shape
    eps = tol.pivot

    # orient every row so its rhs is nonnegative
    a = a.copy()
    b = b.copy()
    flip = b < 0
    a[flip] *= -1.0
    b[flip] *= -1.0
    oriented = []
    for i, s in enumerate(senses):
        if flip[i]:
            oriented.append(SENSE_GE if s == SENSE_LE else SENSE_LE)
        else:
            oriented.append(s)

    # columns: n structural | m slack/surplus | artificials
    n_art = sum(1 for s in oriented if s == SENSE_GE)
    width = n + m + n_art
    table = np.zeros((m, width + 1))
    basis = np.zeros(m, dtype=int)
    art_cols = []
    k = 0
    for i in range(m):
        table[i, :n] = a[i]
        table[i, -1] = b[i]
        if oriented[i] == SENSE_LE:
            table[i, n + i] = 1.0  # slack, starts basic
            basis[i] = n + i
        else:
            table[i, n + i] = -1.0  # surplus
            col = n + m + k
            table[i, col] = 1.0  # artificial, starts basic
            basis[i] = col
            art_cols.append(col)
            k += 1

    # phase 1: minimize the sum of artificials
    if art_cols:
        obj = np.zeros(width + 1)
        obj[art_cols] = 1.0
        for i in range(m):
            if basis[i] in art_cols:
                obj -= table[i]
        status = _pivot_loop(table, basis, obj, eps)
        if status == UNBOUNDED:  # cannot happen: phase-1 objective >= 0
            return INFEASIBLE, np.zeros(n)
        if -obj[-1] > max(tol.feasibility, 1e-8):
            return INFEASIBLE, np.zeros(n)
        _purge_artificials(table, basis, art_cols, n + m, eps)

    # phase 2 on structural + slack columns only
    obj = np.zeros(width + 1)
    obj[:n] = c
    for i in range(m):
        if obj[basis[i]] != 0.0:
            obj -= obj[basis[i]] * table[i]
    status = _pivot_loop(table, basis, obj, eps, allowed=n + m)
    if status == UNBOUNDED:
        return UNBOUNDED, np.zeros(n)

    x = np.zeros(n)
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = table[i, -1]
    np.clip(x, 0.0, None, out=x)
    return OPTIMAL, x


def _pivot_loop(
    table: np.ndarray,
    basis: np.ndarray,
    obj: np.ndarray,
    eps: float,
    allowed: int | None = None,
) -> str:
    """Run Bland-rule pivots in place until optimal or unbounded."""
    m = table.shape[0]
    limit = allowed if allowed is not None else table.shape[1] - 1
    while True:
        entering = -1
        for j in range(limit):
            if obj[j] < -eps:
                entering = j
                break
        if entering < 0:
            return OPTIMAL

        leaving = -1
        best_ratio = np.inf
        for i in range(m):
            coef = table[i, entering]
            if coef > eps:
                ratio = table[i, -1] / coef
                if leaving < 0 or ratio < best_ratio - eps or (
                    abs(ratio - best_ratio) <= eps and basis[i] < basis[leaving]
                ):
                    best_ratio = ratio
                    leaving = i
        if leaving < 0:
            return UNBOUNDED

        _pivot(table, basis, obj, leaving, entering)


def _pivot(
    table: np.ndarray, basis: np.ndarray, obj: np.ndarray, row: int, col: int
) -> None:
    table[row] /= table[row, col]
    for i in range(table.shape[0]):
        if i != row and table[i, col] != 0.0:
            table[i] -= table[i, col] * table[row]
    if obj[col] != 0.0:
        obj -= obj[col] * table[row]
    basis[row] = col


def _purge_artificials(
    table: np.ndarray,
    basis: np.ndarray,
    art_cols: list[int],
    real_width: int,
    eps: float,
) -> None:
    """Drive leftover artificial variables out of the basis, then disable
    their columns so phase 2 can never re-enter them."""
    art = set(art_cols)
    for i in range(table.shape[0]):
        if basis[i] in art:
            for j in range(real_width):
                if abs(table[i, j]) > eps:
                    dummy = np.zeros(table.shape[1])
                    _pivot(table, basis, dummy, i, j)
                    break
            # a row with no eligible pivot is redundant; zero it out
            if basis[i] in art:
                table[i, :] = 0.0
    for col in art_cols:
        table[:, col] = 0.0


def check_point(
    lp: CanonicalLP, x: np.ndarray, tol: SolverTolerances = DEFAULT_TOLERANCES
) -> bool:
    """Feasibility of a point against all rows, within tolerance."""
    _, a, b, senses = lp_arrays(lp)
    if a.shape[0] == 0:
        return bool(np.all(x >= -tol.feasibility))
    lhs = a @ x
    slack = tol.feasibility * np.maximum(1.0, np.abs(b))
    for i, sense in enumerate(senses):
        if sense == SENSE_LE and lhs[i] > b[i] + slack[i]:
            return False
        if sense == SENSE_GE and lhs[i] < b[i] - slack[i]:
            return False
    return bool(np.all(x >= -tol.feasibility))
