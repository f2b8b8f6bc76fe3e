"""IR data model for LP word problems, JSON (de)serialization, and validation.

The serialized schema mirrors the dataset records: a formulation is
``{"obj_declaration": {...}, "const_declarations": [...], "vars": [...]}``
with quantities stored as strings. Objective type tags translate at the
boundary: ``objective`` <-> internal ``linear``, ``objvar`` <-> internal
``sum``. Unknown keys are preserved and round-trip unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Mapping

from .errors import (
    MalformedJson,
    SchemaViolation,
    ToolkitError,
    UnresolvedVariable,
)
from .quantities import Quantity, coerce_quantity

CONSTRAINT_TYPES = ("sum", "upperbound", "lowerbound", "linear", "ratio", "xby", "xy")
OBJECTIVE_TYPES = ("linear", "sum")
OPERATORS = ("LESS_OR_EQUAL", "GREATER_OR_EQUAL")
DIRECTIONS = ("maximize", "minimize")
SPAN_LABELS = ("CONST_DIR", "LIMIT", "PARAM", "VAR", "OBJ_DIR", "OBJ_NAME")

# serialized objective tag <-> internal objective type
_OBJ_TAG_TO_TYPE = {"objective": "linear", "objvar": "sum"}
_OBJ_TYPE_TO_TAG = {v: k for k, v in _OBJ_TAG_TO_TYPE.items()}

# required/forbidden value-bearing fields per constraint type
_CONSTRAINT_FIELDS: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {
    "sum": (("limit",), ("terms",)),
    "upperbound": (("var", "limit"), ()),
    "lowerbound": (("var", "limit"), ()),
    "linear": (("terms", "limit"), ()),
    "ratio": (("var", "limit"), ()),
    "xby": (("x_var", "y_var", "param"), ()),
    "xy": (("x_var", "y_var"), ()),
}


@dataclass(frozen=True)
class EntitySpan:
    """A tagged region of the problem text."""

    start: int
    end: int
    label: str
    surface: str


@dataclass(frozen=True)
class ObjectiveDecl:
    obj_type: str
    direction: str
    name: str = ""
    terms: Mapping[str, Quantity] | None = None
    vars: tuple[str, ...] | None = None

    def referenced_vars(self) -> tuple[str, ...]:
        if self.terms is not None:
            return tuple(self.terms)
        return self.vars or ()


@dataclass(frozen=True)
class ConstraintDecl:
    con_type: str
    operator: str
    direction: str = ""
    limit: Quantity | None = None
    terms: Mapping[str, Quantity] | None = None
    var: str | None = None
    x_var: str | None = None
    y_var: str | None = None
    param: Quantity | None = None

    def referenced_vars(self) -> tuple[str, ...]:
        names: list[str] = []
        if self.terms is not None:
            names.extend(self.terms)
        for name in (self.var, self.x_var, self.y_var):
            if name is not None:
                names.append(name)
        return tuple(names)


@dataclass(frozen=True)
class Formulation:
    """One problem's IR: objectives, constraints, and its variable list."""

    objectives: tuple[ObjectiveDecl, ...]
    constraints: tuple[ConstraintDecl, ...]
    vars: tuple[str, ...]
    extra: Mapping[str, Any] = field(default_factory=dict)

    def declarations(self) -> tuple[ObjectiveDecl | ConstraintDecl, ...]:
        """Objectives first, then constraints: the unit counted by metrics."""
        return tuple(self.objectives) + tuple(self.constraints)


@dataclass(frozen=True)
class ProblemRecord:
    """A corpus entry: text, tagged spans, variable bookkeeping, optional gold."""

    id: str
    text: str
    spans: tuple[EntitySpan, ...]
    variable_order: tuple[str, ...]
    entity_mapping: Mapping[str, str]
    gold: Formulation | None = None
    extra: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Violation:
    location: str
    message: str

    def __str__(self) -> str:
        return f"{self.location}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __iter__(self) -> Iterator[Violation]:
        return iter(self.violations)


class VariableResolver:
    """Maps surface variable names onto a canonical ordered variable list.

    Lookup is case-insensitive and tolerates naive singular/plural
    variation, first through the record's entity mapping and then against
    the variable list itself.
    """

    def __init__(self, order: Iterable[str], mapping: Mapping[str, str] | None = None):
        self.order = tuple(order)
        self._index = {name: i for i, name in enumerate(self.order)}
        self._lookup: dict[str, str] = {}
        for name in self.order:
            self._register(name, name)
        for surface, target in (mapping or {}).items():
            if target in self._index:
                self._register(surface, target)

    def _register(self, surface: str, target: str) -> None:
        for key in _name_keys(surface):
            self._lookup.setdefault(key, target)

    def try_resolve(self, name: str) -> str | None:
        if name in self._index:
            return name
        for key in _name_keys(name):
            hit = self._lookup.get(key)
            if hit is not None:
                return hit
        return None

    def resolve(self, name: str) -> str:
        hit = self.try_resolve(name)
        if hit is None:
            raise UnresolvedVariable(f"unknown variable {name!r}")
        return hit

    def index(self, name: str) -> int:
        return self._index[self.resolve(name)]


def _name_keys(name: str) -> tuple[str, ...]:
    base = " ".join(name.lower().split())
    keys = [base]
    if base.endswith("es"):
        keys.append(base[:-2])
    if base.endswith("s"):
        keys.append(base[:-1])
    else:
        keys.append(base + "s")
    return tuple(keys)


# ---------------------------------------------------------------------------
# parsing


def parse_problem(json_text: str) -> ProblemRecord:
    """Parse one corpus record; raises MalformedJson / SchemaViolation."""
    data = _loads(json_text)
    if not isinstance(data, dict):
        raise SchemaViolation("$", "record must be a JSON object")
    return record_from_dict(data)


def record_from_dict(data: Mapping[str, Any]) -> ProblemRecord:
    known = {"id", "text", "spans", "variable_order", "entity_mapping", "gold"}
    rec_id = data.get("id")
    if not isinstance(rec_id, str) or not rec_id:
        raise SchemaViolation("id", "record id must be a non-empty string")
    text = data.get("text", "")
    if not isinstance(text, str):
        raise SchemaViolation("text", "text must be a string")

    order_raw = data.get("variable_order")
    if not isinstance(order_raw, list) or not order_raw:
        raise SchemaViolation("variable_order", "must be a non-empty list")
    order = tuple(str(v) for v in order_raw)
    if len(set(order)) != len(order):
        raise SchemaViolation("variable_order", "duplicate variable names")

    mapping_raw = data.get("entity_mapping", {})
    if not isinstance(mapping_raw, dict):
        raise SchemaViolation("entity_mapping", "must be an object")
    mapping = {str(k): str(v) for k, v in mapping_raw.items()}
    for surface, target in mapping.items():
        if target not in order:
            raise SchemaViolation(
                f"entity_mapping[{surface!r}]",
                f"target {target!r} not in variable_order",
            )

    spans = tuple(
        _parse_span(span, text, i) for i, span in enumerate(data.get("spans", []))
    )

    gold = None
    if data.get("gold") is not None:
        gold = formulation_from_dict(data["gold"], path="gold")
        resolver = VariableResolver(gold.vars, mapping)
        for i, decl in enumerate(gold.declarations()):
            for name in decl.referenced_vars():
                if resolver.try_resolve(name) is None:
                    raise SchemaViolation(
                        f"gold.declarations[{i}]",
                        f"variable {name!r} not present in vars",
                    )

    extra = {k: v for k, v in data.items() if k not in known}
    return ProblemRecord(
        id=rec_id,
        text=text,
        spans=spans,
        variable_order=order,
        entity_mapping=mapping,
        gold=gold,
        extra=extra,
    )


def _parse_span(raw: Any, text: str, i: int) -> EntitySpan:
    path = f"spans[{i}]"
    if not isinstance(raw, dict):
        raise SchemaViolation(path, "span must be an object")
    try:
        start = int(raw["start"])
        end = int(raw["end"])
        label = str(raw["label"])
        surface = str(raw.get("surface", text[start:end]))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaViolation(path, f"bad span fields: {exc}") from exc
    if label not in SPAN_LABELS:
        raise SchemaViolation(path, f"unknown label {label!r}")
    if not (0 <= start < end <= len(text)):
        raise SchemaViolation(path, f"offsets [{start}, {end}) outside text")
    if text[start:end] != surface:
        raise SchemaViolation(path, "surface does not equal text[start:end]")
    return EntitySpan(start=start, end=end, label=label, surface=surface)


def parse_formulation(json_text: str) -> Formulation:
    """Parse a bare formulation (the unit emitted by upstream models)."""
    data = _loads(json_text)
    return formulation_from_dict(data, path="$")


def formulation_from_dict(data: Any, path: str = "$") -> Formulation:
    if not isinstance(data, dict):
        raise SchemaViolation(path, "formulation must be a JSON object")
    known = {"obj_declaration", "const_declarations", "vars"}

    raw_obj = data.get("obj_declaration")
    if raw_obj is None:
        raise SchemaViolation(f"{path}.obj_declaration", "missing objective")
    raw_objs = raw_obj if isinstance(raw_obj, list) else [raw_obj]
    if not raw_objs:
        raise SchemaViolation(f"{path}.obj_declaration", "empty objective list")
    objectives = tuple(
        _parse_objective(o, f"{path}.obj_declaration[{i}]")
        for i, o in enumerate(raw_objs)
    )

    raw_cons = data.get("const_declarations", [])
    if not isinstance(raw_cons, list):
        raise SchemaViolation(f"{path}.const_declarations", "must be a list")
    constraints = tuple(
        _parse_constraint(c, f"{path}.const_declarations[{i}]")
        for i, c in enumerate(raw_cons)
    )

    raw_vars = data.get("vars", [])
    if not isinstance(raw_vars, list):
        raise SchemaViolation(f"{path}.vars", "must be a list")
    vars_ = tuple(str(v) for v in raw_vars)

    extra = {k: v for k, v in data.items() if k not in known}
    return Formulation(
        objectives=objectives, constraints=constraints, vars=vars_, extra=extra
    )


def _parse_objective(raw: Any, path: str) -> ObjectiveDecl:
    if not isinstance(raw, dict):
        raise SchemaViolation(path, "objective must be an object")
    tag = raw.get("type")
    obj_type = _OBJ_TAG_TO_TYPE.get(tag, tag)
    if obj_type not in OBJECTIVE_TYPES:
        raise SchemaViolation(f"{path}.type", f"unknown objective type {tag!r}")
    direction = raw.get("direction")
    if direction not in DIRECTIONS:
        raise SchemaViolation(f"{path}.direction", f"bad direction {direction!r}")
    name = str(raw.get("name", ""))
    terms = None
    vars_: tuple[str, ...] | None = None
    if "terms" in raw and raw["terms"] is not None:
        terms = _parse_terms(raw["terms"], f"{path}.terms")
    if "vars" in raw and raw["vars"] is not None:
        if not isinstance(raw["vars"], list):
            raise SchemaViolation(f"{path}.vars", "must be a list")
        vars_ = tuple(str(v) for v in raw["vars"])
    return ObjectiveDecl(
        obj_type=obj_type, direction=direction, name=name, terms=terms, vars=vars_
    )


def _parse_constraint(raw: Any, path: str) -> ConstraintDecl:
    if not isinstance(raw, dict):
        raise SchemaViolation(path, "constraint must be an object")
    con_type = raw.get("type")
    if con_type not in CONSTRAINT_TYPES:
        raise SchemaViolation(f"{path}.type", f"unknown constraint type {con_type!r}")
    operator = raw.get("operator")
    if operator not in OPERATORS:
        raise SchemaViolation(f"{path}.operator", f"bad operator {operator!r}")
    direction = str(raw.get("direction", ""))
    limit = _optional_quantity(raw.get("limit"), f"{path}.limit")
    param = _optional_quantity(raw.get("param"), f"{path}.param")
    terms = None
    if raw.get("terms") is not None:
        terms = _parse_terms(raw["terms"], f"{path}.terms")
    var = str(raw["var"]) if raw.get("var") is not None else None
    x_var = str(raw["x_var"]) if raw.get("x_var") is not None else None
    y_var = str(raw["y_var"]) if raw.get("y_var") is not None else None
    return ConstraintDecl(
        con_type=con_type,
        operator=operator,
        direction=direction,
        limit=limit,
        terms=terms,
        var=var,
        x_var=x_var,
        y_var=y_var,
        param=param,
    )


def _parse_terms(raw: Any, path: str) -> dict[str, Quantity]:
    if not isinstance(raw, dict):
        raise SchemaViolation(path, "terms must be an object")
    terms: dict[str, Quantity] = {}
    for key, value in raw.items():
        try:
            terms[str(key)] = coerce_quantity(value)
        except ToolkitError as exc:
            raise SchemaViolation(f"{path}[{key!r}]", str(exc)) from exc
    return terms


def _optional_quantity(raw: Any, path: str) -> Quantity | None:
    if raw is None:
        return None
    try:
        return coerce_quantity(raw)
    except ToolkitError as exc:
        raise SchemaViolation(path, str(exc)) from exc


def _loads(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedJson(f"invalid JSON: {exc}") from exc


# ---------------------------------------------------------------------------
# serialization


def serialize_ir(f: Formulation) -> str:
    """Single-line JSON in the dataset schema; deterministic field order."""
    return json.dumps(formulation_to_dict(f), ensure_ascii=False)


def formulation_to_dict(f: Formulation) -> dict[str, Any]:
    objs = [_objective_to_dict(o) for o in f.objectives]
    out: dict[str, Any] = {
        "obj_declaration": objs[0] if len(objs) == 1 else objs,
        "const_declarations": [_constraint_to_dict(c) for c in f.constraints],
        "vars": list(f.vars),
    }
    out.update(f.extra)
    return out


def _objective_to_dict(o: ObjectiveDecl) -> dict[str, Any]:
    out: dict[str, Any] = {
        "type": _OBJ_TYPE_TO_TAG[o.obj_type],
        "direction": o.direction,
        "name": o.name,
    }
    if o.terms is not None:
        out["terms"] = {k: q.source_text for k, q in o.terms.items()}
    if o.vars is not None:
        out["vars"] = list(o.vars)
    return out


def _constraint_to_dict(c: ConstraintDecl) -> dict[str, Any]:
    out: dict[str, Any] = {"type": c.con_type, "direction": c.direction}
    if c.limit is not None:
        out["limit"] = c.limit.source_text
    if c.terms is not None:
        out["terms"] = {k: q.source_text for k, q in c.terms.items()}
    if c.var is not None:
        out["var"] = c.var
    if c.x_var is not None:
        out["x_var"] = c.x_var
    if c.param is not None:
        out["param"] = c.param.source_text
    if c.y_var is not None:
        out["y_var"] = c.y_var
    out["operator"] = c.operator
    return out


def objective_to_dict(o: ObjectiveDecl) -> dict[str, Any]:
    return _objective_to_dict(o)


def constraint_to_dict(c: ConstraintDecl) -> dict[str, Any]:
    return _constraint_to_dict(c)


def objective_from_dict(raw: Mapping[str, Any], path: str = "$") -> ObjectiveDecl:
    return _parse_objective(raw, path)


def constraint_from_dict(raw: Mapping[str, Any], path: str = "$") -> ConstraintDecl:
    return _parse_constraint(raw, path)


def serialize_record(rec: ProblemRecord) -> str:
    out: dict[str, Any] = {
        "id": rec.id,
        "text": rec.text,
        "spans": [
            {"start": s.start, "end": s.end, "label": s.label, "surface": s.surface}
            for s in rec.spans
        ],
        "variable_order": list(rec.variable_order),
        "entity_mapping": dict(rec.entity_mapping),
    }
    if rec.gold is not None:
        out["gold"] = formulation_to_dict(rec.gold)
    out.update(rec.extra)
    return json.dumps(out, ensure_ascii=False)


def load_corpus(path: str) -> list[ProblemRecord]:
    """Read a corpus: JSON-lines, or a single JSON record/array per file."""
    with open(path, encoding="utf-8") as fh:
        content = fh.read()
    stripped = content.strip()
    if not stripped:
        return []
    if stripped.startswith("["):
        data = _loads(stripped)
        return [record_from_dict(item) for item in data]
    lines = [line for line in content.splitlines() if line.strip()]
    if len(lines) == 1:
        return [parse_problem(lines[0])]
    return [parse_problem(line) for line in lines]


def dump_corpus(records: Iterable[ProblemRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(serialize_record(rec) + "\n")


# ---------------------------------------------------------------------------
# validation


def validate(
    f: Formulation, mapping: Mapping[str, str] | None = None
) -> ValidationReport:
    """Structural well-formedness check; violations are data, not errors."""
    violations: list[Violation] = []
    if not f.objectives:
        violations.append(Violation("objectives", "at least one objective required"))
    if len(set(f.vars)) != len(f.vars):
        violations.append(Violation("vars", "duplicate variable names"))

    resolver = VariableResolver(f.vars, mapping)

    for i, obj in enumerate(f.objectives):
        loc = f"objectives[{i}]"
        if obj.obj_type not in OBJECTIVE_TYPES:
            violations.append(Violation(loc, f"unknown type {obj.obj_type!r}"))
            continue
        if obj.direction not in DIRECTIONS:
            violations.append(Violation(loc, f"bad direction {obj.direction!r}"))
        if obj.obj_type == "linear":
            if not obj.terms:
                violations.append(Violation(loc, "linear objective must have terms"))
            if obj.vars is not None:
                violations.append(
                    Violation(loc, "linear objective must not have a vars list")
                )
        else:
            if not obj.vars:
                violations.append(Violation(loc, "sum objective must list vars"))
            if obj.terms is not None:
                violations.append(Violation(loc, "sum objective must not have terms"))
        _check_references(obj.referenced_vars(), resolver, loc, violations)

    for i, con in enumerate(f.constraints):
        loc = f"constraints[{i}]"
        if con.con_type not in CONSTRAINT_TYPES:
            violations.append(Violation(loc, f"unknown type {con.con_type!r}"))
            continue
        required, forbidden = _CONSTRAINT_FIELDS[con.con_type]
        present = {
            "limit": con.limit is not None,
            "terms": con.terms is not None,
            "var": con.var is not None,
            "x_var": con.x_var is not None,
            "y_var": con.y_var is not None,
            "param": con.param is not None,
        }
        for name in required:
            if not present[name]:
                violations.append(
                    Violation(loc, f"{con.con_type} constraint requires {name}")
                )
        for name in forbidden:
            if present[name]:
                violations.append(
                    Violation(loc, f"{con.con_type} must not have {name}")
                )
        if con.con_type == "linear" and con.terms is not None and not con.terms:
            violations.append(Violation(loc, "linear constraint needs nonempty terms"))
        if con.con_type == "ratio" and con.limit is not None:
            if not (0 <= con.limit.value <= 1):
                violations.append(Violation(loc, "ratio limit must lie in [0, 1]"))
        if con.con_type == "lowerbound" and con.operator != "GREATER_OR_EQUAL":
            violations.append(
                Violation(loc, "lowerbound operator should be GREATER_OR_EQUAL")
            )
        if con.con_type == "upperbound" and con.operator != "LESS_OR_EQUAL":
            violations.append(
                Violation(loc, "upperbound operator should be LESS_OR_EQUAL")
            )
        _check_references(con.referenced_vars(), resolver, loc, violations)

    return ValidationReport(tuple(violations))


def _check_references(
    names: Iterable[str],
    resolver: VariableResolver,
    loc: str,
    violations: list[Violation],
) -> None:
    for name in names:
        if resolver.try_resolve(name) is None:
            violations.append(Violation(loc, f"unresolved variable {name!r}"))
