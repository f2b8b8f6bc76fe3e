"""Embedded LP/ILP solving and LP-file interchange.

solve_lp     two-phase dense simplex with Bland's anti-cycling rule
solve_ilp    branch and bound over LP relaxations
brute_force_ilp  exhaustive integer scan inside a finite box (test oracle)
emit_lp_file / parse_lp_file  deterministic LP-format round-trip
"""

from .simplex import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    LpSolution,
    SolverTolerances,
    solve_lp,
)
from .branch_bound import IlpSolution, brute_force_ilp, solve_ilp
from .lpfile import emit_lp_file, parse_lp_file

__all__ = [
    "OPTIMAL",
    "INFEASIBLE",
    "UNBOUNDED",
    "LpSolution",
    "IlpSolution",
    "SolverTolerances",
    "solve_lp",
    "solve_ilp",
    "brute_force_ilp",
    "emit_lp_file",
    "parse_lp_file",
]
