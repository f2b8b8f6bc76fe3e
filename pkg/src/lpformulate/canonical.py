"""Lowering of IR declarations to canonical linear rows.

Every declaration becomes a coefficient vector over a fixed variable
order, a sense, and a right-hand side, all exact rationals:

    sum         x1 + ... + xn  op  limit
    upperbound  x  <=  limit
    lowerbound  x  >=  limit
    linear      sum(a_i * x_i)  op  limit
    ratio       x  op  limit * (x1 + ... + xn)   ->  (e_x - limit*1) . x  op  0
    xby         x  op  param * y                 ->  x - param*y  op  0
    xy          x  op  y                         ->  x - y  op  0
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import DegenerateRow, SchemaViolation, ToolkitError
from .ir import ConstraintDecl, Formulation, ObjectiveDecl, ProblemRecord, VariableResolver

SENSE_LE = "<="
SENSE_GE = ">="


@dataclass(frozen=True)
class CanonicalRow:
    """One constraint as (coefficients, sense, rhs) over the variable order."""

    coefficients: tuple[Fraction, ...]
    sense: str
    rhs: Fraction
    note: str = field(default="", compare=False)

    @property
    def degenerate(self) -> bool:
        return all(c == 0 for c in self.coefficients)

    def satisfied_by(self, point: Sequence[Fraction | int]) -> bool:
        lhs = sum(c * p for c, p in zip(self.coefficients, point))
        return lhs <= self.rhs if self.sense == SENSE_LE else lhs >= self.rhs


@dataclass(frozen=True)
class ObjectiveRow:
    """Objective coefficients and direction; the name is informational only."""

    coefficients: tuple[Fraction, ...]
    direction: str
    name: str = field(default="", compare=False)


@dataclass(frozen=True)
class CanonicalLP:
    objectives: tuple[ObjectiveRow, ...]
    rows: tuple[CanonicalRow, ...]
    variable_order: tuple[str, ...]
    nonneg: tuple[bool, ...]
    integral: tuple[bool, ...]


def canonical_row(
    c: ConstraintDecl,
    order: Sequence[str],
    mapping: Mapping[str, str] | None = None,
    resolver: VariableResolver | None = None,
) -> CanonicalRow:
    """Lower one constraint declaration onto the given variable order."""
    resolver = resolver or VariableResolver(order, mapping)
    n = len(resolver.order)
    coeffs = [Fraction(0)] * n
    sense = _sense_for(c)

    if c.con_type == "sum":
        limit = _require_limit(c)
        coeffs = [Fraction(1)] * n
        rhs = limit
    elif c.con_type in ("upperbound", "lowerbound"):
        limit = _require_limit(c)
        coeffs[resolver.index(_require(c.var, c, "var"))] = Fraction(1)
        rhs = limit
    elif c.con_type == "linear":
        limit = _require_limit(c)
        if not c.terms:
            raise SchemaViolation("terms", "linear constraint needs terms")
        for name, q in c.terms.items():
            coeffs[resolver.index(name)] += q.value
        rhs = limit
    elif c.con_type == "ratio":
        limit = _require_limit(c)
        coeffs = [-limit] * n
        coeffs[resolver.index(_require(c.var, c, "var"))] += Fraction(1)
        rhs = Fraction(0)
    elif c.con_type == "xby":
        param = _require(c.param, c, "param").value
        coeffs[resolver.index(_require(c.x_var, c, "x_var"))] += Fraction(1)
        coeffs[resolver.index(_require(c.y_var, c, "y_var"))] -= param
        rhs = Fraction(0)
    elif c.con_type == "xy":
        coeffs[resolver.index(_require(c.x_var, c, "x_var"))] += Fraction(1)
        coeffs[resolver.index(_require(c.y_var, c, "y_var"))] -= Fraction(1)
        rhs = Fraction(0)
    else:
        raise SchemaViolation("type", f"unknown constraint type {c.con_type!r}")

    row = CanonicalRow(tuple(coeffs), sense, rhs, note=c.direction)
    if row.degenerate and not _trivially_true(sense, rhs):
        raise DegenerateRow(
            f"{c.con_type} constraint lowers to 0 {sense} {rhs} with no variables"
        )
    return row


def _sense_for(c: ConstraintDecl) -> str:
    # bound types carry their sense in the type itself
    if c.con_type == "lowerbound":
        return SENSE_GE
    if c.con_type == "upperbound":
        return SENSE_LE
    return SENSE_LE if c.operator == "LESS_OR_EQUAL" else SENSE_GE


def _trivially_true(sense: str, rhs: Fraction) -> bool:
    return rhs >= 0 if sense == SENSE_LE else rhs <= 0


def _require_limit(c: ConstraintDecl) -> Fraction:
    return _require(c.limit, c, "limit").value


def _require(value, c: ConstraintDecl, name: str):
    if value is None:
        raise SchemaViolation(name, f"{c.con_type} constraint requires {name}")
    return value


def canonical_objective(
    o: ObjectiveDecl,
    order: Sequence[str],
    mapping: Mapping[str, str] | None = None,
    resolver: VariableResolver | None = None,
) -> ObjectiveRow:
    resolver = resolver or VariableResolver(order, mapping)
    n = len(resolver.order)
    coeffs = [Fraction(0)] * n
    if o.obj_type == "linear":
        if not o.terms:
            raise SchemaViolation("terms", "linear objective needs terms")
        for name, q in o.terms.items():
            coeffs[resolver.index(name)] += q.value
    elif o.obj_type == "sum":
        if not o.vars:
            raise SchemaViolation("vars", "sum objective needs a vars list")
        for name in o.vars:
            coeffs[resolver.index(name)] += Fraction(1)
    else:
        raise SchemaViolation("type", f"unknown objective type {o.obj_type!r}")
    return ObjectiveRow(tuple(coeffs), o.direction, name=o.name)


def canonicalize(
    f: Formulation,
    rec: ProblemRecord | None = None,
    *,
    integral: bool = True,
) -> CanonicalLP:
    """Lower a whole formulation against a record's variable order.

    Without a record the formulation's own variable list is the order.
    All variables default to nonnegative; integrality defaults on and can
    be relaxed for LP-relaxation runs.
    """
    if rec is not None:
        order = tuple(rec.variable_order)
        resolver = VariableResolver(order, rec.entity_mapping)
    else:
        order = tuple(f.vars)
        resolver = VariableResolver(order)

    objectives = []
    for i, obj in enumerate(f.objectives):
        try:
            objectives.append(canonical_objective(obj, order, resolver=resolver))
        except ToolkitError as exc:
            exc.objective_index = i
            raise
    rows = []
    for i, con in enumerate(f.constraints):
        try:
            rows.append(canonical_row(con, order, resolver=resolver))
        except ToolkitError as exc:
            exc.constraint_index = i
            raise

    n = len(order)
    return CanonicalLP(
        objectives=tuple(objectives),
        rows=tuple(rows),
        variable_order=order,
        nonneg=(True,) * n,
        integral=(integral,) * n,
    )


def normalize_sense(row: CanonicalRow) -> CanonicalRow:
    """Rewrite >= rows as <= by negation; <= rows pass through. Idempotent."""
    if row.sense == SENSE_LE:
        return row
    return CanonicalRow(
        coefficients=tuple(-c for c in row.coefficients),
        sense=SENSE_LE,
        rhs=-row.rhs,
        note=row.note,
    )
