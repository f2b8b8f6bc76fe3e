"""Rule-based repair and penalty scoring of candidate formulations.

Corrections (deterministic edits, applied to a fixpoint):

    C1  a linear objective whose terms all share one coefficient becomes a
        sum objective over those variables
    C2  lowerbound constraints get GREATER_OR_EQUAL, upperbound LESS_OR_EQUAL
    C3  sum constraints carry no terms
    C4  constraints with identical sense-normalized canonical rows are
        deduplicated, first occurrence kept

Scoring rules (nonnegative penalties subtracted from the model score):

    S1  fewer constraints than tagged constraint-direction spans
    S2  tagged limit quantities absent from the formulation's limits
    S3  tagged parameter quantities absent from the coefficients
    S4  coefficient magnitudes inside one constraint spread beyond a
        threshold ratio
    S5  parameter/limit monotonicity between same-type constraint pairs:
        componentwise-larger parameters must come with a larger limit, and
        two distinct constraints should not share one parameter vector
    OBJVAR_HINT  a linear objective duplicating a constraint's parameter
        vector is usually a miscast sum objective
    EXEC_FAIL    the formulation does not execute to an optimum
    CANON_FAIL   the formulation cannot be lowered at all; ranks last
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

from .canonical import canonicalize, canonical_row, normalize_sense
from .errors import OrphanBeam, SchemaViolation, ToolkitError
from .ir import (
    ConstraintDecl,
    Formulation,
    ObjectiveDecl,
    ProblemRecord,
    VariableResolver,
    formulation_from_dict,
    formulation_to_dict,
)
from .quantities import parse_quantity, quantity_candidates
from .solver import OPTIMAL, solve_ilp

DEFAULT_WEIGHTS: dict[str, float] = {
    "S1": 2.0,
    "S2": 1.0,
    "S3": 1.0,
    "S4": 0.5,
    "S5": 1.5,
    "OBJVAR_HINT": 0.25,
    "EXEC_FAIL": 3.0,
}
ALL_RULES = tuple(DEFAULT_WEIGHTS) + ("CANON_FAIL", "C1", "C2", "C3", "C4")


@dataclass(frozen=True)
class RuleConfig:
    weights: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    scale_threshold: float = 1e4
    enabled: frozenset[str] = frozenset(ALL_RULES)

    def weight(self, rule_id: str) -> float:
        if rule_id not in self.enabled:
            return 0.0
        return float(self.weights.get(rule_id, DEFAULT_WEIGHTS.get(rule_id, 0.0)))

    def on(self, rule_id: str) -> bool:
        return rule_id in self.enabled

    @classmethod
    def from_json(cls, text: str) -> "RuleConfig":
        data = json.loads(text)
        if not isinstance(data, dict):
            raise SchemaViolation("$", "rule config must be a JSON object")
        weights = dict(DEFAULT_WEIGHTS)
        scale = 1e4
        enabled = set(ALL_RULES)
        for key, value in data.items():
            if key == "scale_threshold":
                scale = float(value)
                if scale <= 0:
                    raise SchemaViolation(key, "scale_threshold must be positive")
            elif key == "enabled":
                enabled = set(str(v) for v in value)
            else:
                weights[key] = float(value)
                if weights[key] < 0:
                    raise SchemaViolation(key, "weights must be nonnegative")
        return cls(
            weights=weights, scale_threshold=scale, enabled=frozenset(enabled)
        )


@dataclass(frozen=True)
class BeamCandidate:
    """One model hypothesis: a formulation plus its score bookkeeping."""

    formulation: Formulation | None
    logprob: float = 0.0
    penalties: tuple[tuple[str, float], ...] = ()
    total_score: float = 0.0
    index: int = 0
    raw: str | None = None  # unparseable payload, kept for reporting


@dataclass(frozen=True)
class CorrectionEntry:
    rule_id: str
    location: tuple[str, int]
    before: dict | None
    after: dict | None


@dataclass(frozen=True)
class CorrectionLog:
    entries: tuple[CorrectionEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)


# ---------------------------------------------------------------------------
# corrections


def apply_corrections(
    f: Formulation, cfg: RuleConfig | None = None
) -> tuple[Formulation, CorrectionLog]:
    """Repair a formulation in a fixed rule order until it stops changing."""
    cfg = cfg or RuleConfig()
    entries: list[CorrectionEntry] = []
    current = f
    for _ in range(8):
        updated = _correction_pass(current, cfg, entries)
        if updated == current:
            break
        current = updated
    return current, CorrectionLog(tuple(entries))


def _correction_pass(
    f: Formulation, cfg: RuleConfig, entries: list[CorrectionEntry]
) -> Formulation:
    objectives = list(f.objectives)
    if cfg.on("C1"):
        for i, obj in enumerate(objectives):
            if (
                obj.obj_type == "linear"
                and obj.terms
                and len(obj.terms) >= 2
                and len({q.value for q in obj.terms.values()}) == 1
            ):
                fixed = ObjectiveDecl(
                    obj_type="sum",
                    direction=obj.direction,
                    name=obj.name,
                    terms=None,
                    vars=tuple(obj.terms),
                )
                entries.append(
                    CorrectionEntry(
                        "C1",
                        ("objective", i),
                        _obj_dict(obj),
                        _obj_dict(fixed),
                    )
                )
                objectives[i] = fixed

    constraints = list(f.constraints)
    for i, con in enumerate(constraints):
        if cfg.on("C2"):
            wanted = None
            if con.con_type == "lowerbound" and con.operator != "GREATER_OR_EQUAL":
                wanted = "GREATER_OR_EQUAL"
            elif con.con_type == "upperbound" and con.operator != "LESS_OR_EQUAL":
                wanted = "LESS_OR_EQUAL"
            if wanted:
                fixed = replace(con, operator=wanted)
                entries.append(
                    CorrectionEntry(
                        "C2", ("constraint", i), _con_dict(con), _con_dict(fixed)
                    )
                )
                constraints[i] = fixed
                con = fixed
        if cfg.on("C3") and con.con_type == "sum" and con.terms is not None:
            fixed = replace(con, terms=None)
            entries.append(
                CorrectionEntry(
                    "C3", ("constraint", i), _con_dict(con), _con_dict(fixed)
                )
            )
            constraints[i] = fixed

    if cfg.on("C4"):
        resolver = VariableResolver(f.vars)
        seen: set = set()
        kept: list[ConstraintDecl] = []
        for i, con in enumerate(constraints):
            key = None
            try:
                row = normalize_sense(canonical_row(con, f.vars, resolver=resolver))
                key = (row.coefficients, row.sense, row.rhs)
            except ToolkitError:
                pass  # uncanonicalizable constraints are kept for later repair
            if key is not None and key in seen:
                entries.append(
                    CorrectionEntry("C4", ("constraint", i), _con_dict(con), None)
                )
                continue
            if key is not None:
                seen.add(key)
            kept.append(con)
        constraints = kept

    return Formulation(
        objectives=tuple(objectives),
        constraints=tuple(constraints),
        vars=f.vars,
        extra=f.extra,
    )


def replay_corrections(f: Formulation, log: CorrectionLog) -> Formulation:
    """Re-apply a correction log; used to check the log fully explains the
    edit. Removal entries are applied after in-place edits of each pass, so
    locations always refer to the pre-removal indexing of that pass."""
    from .ir import constraint_from_dict, objective_from_dict

    objectives = list(f.objectives)
    constraints = list(f.constraints)
    doomed: list[int] = []

    def flush_removals() -> None:
        for pos in sorted(doomed, reverse=True):
            del constraints[pos]
        doomed.clear()

    for entry in log.entries:
        kind, pos = entry.location
        if entry.after is None:
            doomed.append(pos)
            continue
        flush_removals()
        if kind == "objective":
            objectives[pos] = objective_from_dict(entry.after)
        else:
            constraints[pos] = constraint_from_dict(entry.after)
    flush_removals()
    return Formulation(
        objectives=tuple(objectives),
        constraints=tuple(constraints),
        vars=f.vars,
        extra=f.extra,
    )


def _obj_dict(obj: ObjectiveDecl) -> dict:
    from .ir import objective_to_dict

    return objective_to_dict(obj)


def _con_dict(con: ConstraintDecl) -> dict:
    from .ir import constraint_to_dict

    return constraint_to_dict(con)


# ---------------------------------------------------------------------------
# scoring


def score_candidate(
    f: Formulation | None,
    rec: ProblemRecord | None,
    cfg: RuleConfig | None = None,
) -> tuple[tuple[str, float], ...]:
    """Penalty breakdown for one candidate; magnitudes are weighted."""
    cfg = cfg or RuleConfig()
    if f is None:
        return (("CANON_FAIL", math.inf),)
    try:
        lp = canonicalize(f, rec)
    except ToolkitError:
        return (("CANON_FAIL", math.inf),)

    penalties: list[tuple[str, float]] = []

    spans = rec.spans if rec is not None else ()
    if cfg.on("S1"):
        dir_count = sum(1 for s in spans if s.label == "CONST_DIR")
        missing = dir_count - len(f.constraints)
        if missing > 0:
            penalties.append(("S1", cfg.weight("S1") * missing))

    if cfg.on("S2"):
        frac = _missing_fraction(
            (s.surface for s in spans if s.label == "LIMIT"),
            _limit_pool(f),
        )
        if frac > 0:
            penalties.append(("S2", cfg.weight("S2") * frac))

    if cfg.on("S3"):
        frac = _missing_fraction(
            (s.surface for s in spans if s.label == "PARAM"),
            _param_pool(f),
        )
        if frac > 0:
            penalties.append(("S3", cfg.weight("S3") * frac))

    if cfg.on("S4"):
        excess = 0.0
        for row in lp.rows:
            mags = [abs(c) for c in row.coefficients if c != 0]
            if len(mags) >= 2:
                spread = float(max(mags) / min(mags))
                if spread > cfg.scale_threshold:
                    excess += spread / cfg.scale_threshold - 1.0
        if excess > 0:
            penalties.append(("S4", cfg.weight("S4") * excess))

    if cfg.on("S5"):
        violations = _pair_violations(f, lp.variable_order, rec)
        if violations:
            penalties.append(("S5", cfg.weight("S5") * violations))

    if cfg.on("OBJVAR_HINT"):
        hints = _objvar_hints(f, lp, rec)
        if hints:
            penalties.append(("OBJVAR_HINT", cfg.weight("OBJVAR_HINT") * hints))

    if cfg.on("EXEC_FAIL") and len(lp.objectives) == 1:
        try:
            if solve_ilp(lp).status != OPTIMAL:
                penalties.append(("EXEC_FAIL", cfg.weight("EXEC_FAIL")))
        except ToolkitError:
            penalties.append(("EXEC_FAIL", cfg.weight("EXEC_FAIL")))

    return tuple(p for p in penalties if p[1] > 0)


def _limit_pool(f: Formulation) -> set[Fraction]:
    return {c.limit.value for c in f.constraints if c.limit is not None}


def _param_pool(f: Formulation) -> set[Fraction]:
    pool: set[Fraction] = set()
    for obj in f.objectives:
        if obj.terms:
            pool.update(q.value for q in obj.terms.values())
    for con in f.constraints:
        if con.terms:
            pool.update(q.value for q in con.terms.values())
        if con.param is not None:
            pool.add(con.param.value)
    return pool


def _missing_fraction(surfaces: Iterable[str], pool: set[Fraction]) -> float:
    total = 0
    misses = 0
    for surface in surfaces:
        try:
            q = parse_quantity(surface)
        except ToolkitError:
            continue
        total += 1
        if not (quantity_candidates(q) & pool):
            misses += 1
    return misses / total if total else 0.0


def _parameter_vector(
    con: ConstraintDecl, order: Sequence[str], resolver: VariableResolver
) -> tuple[Fraction, ...] | None:
    """Raw nonnegative parameter vector of a linear or sum constraint."""
    if con.con_type == "sum":
        return tuple(Fraction(1) for _ in order)
    if con.con_type == "linear" and con.terms:
        coeffs = [Fraction(0)] * len(order)
        for name, q in con.terms.items():
            hit = resolver.try_resolve(name)
            if hit is None:
                return None
            coeffs[resolver.index(hit)] += q.value
        return tuple(coeffs)
    return None


def _pair_violations(
    f: Formulation, order: Sequence[str], rec: ProblemRecord | None
) -> int:
    """Monotonicity and distinctness checks across same-type constraint pairs.

    Works on the as-written nonnegative parameters and limits: growing
    every parameter while shrinking the limit is inconsistent whichever
    way the inequality points.
    """
    mapping = rec.entity_mapping if rec is not None else None
    resolver = VariableResolver(order, mapping)
    rows = []
    for con in f.constraints:
        if con.con_type not in ("linear", "sum") or con.limit is None:
            continue
        w = _parameter_vector(con, order, resolver)
        if w is not None:
            rows.append((con.con_type, w, con.limit.value))
    violations = 0
    for i in range(len(rows)):
        for j in range(i + 1, len(rows)):
            type_i, w_i, z_i = rows[i]
            type_j, w_j, z_j = rows[j]
            if type_i != type_j:
                continue
            if w_i == w_j:
                violations += 1  # distinct constraints sharing one vector
                continue
            if all(a >= b for a, b in zip(w_i, w_j)) and z_i < z_j:
                violations += 1
            elif all(b >= a for a, b in zip(w_i, w_j)) and z_j < z_i:
                violations += 1
    return violations


def _objvar_hints(f: Formulation, lp, rec: ProblemRecord | None) -> int:
    hits = 0
    constraint_vectors = set()
    resolver = VariableResolver(
        lp.variable_order, rec.entity_mapping if rec is not None else None
    )
    for con in f.constraints:
        w = _parameter_vector(con, lp.variable_order, resolver)
        if w is not None:
            constraint_vectors.add(w)
    for obj, row in zip(f.objectives, lp.objectives):
        if obj.obj_type == "linear" and row.coefficients in constraint_vectors:
            hits += 1
    return hits


# ---------------------------------------------------------------------------
# ranking


def rank_beams(
    candidates: Sequence[BeamCandidate],
    rec: ProblemRecord | None,
    cfg: RuleConfig | None = None,
) -> list[BeamCandidate]:
    """Correct, score, and sort candidates best-first, deterministically."""
    if not candidates:
        raise ValueError("rank_beams needs at least one candidate")
    cfg = cfg or RuleConfig()
    scored: list[BeamCandidate] = []
    for pos, cand in enumerate(candidates):
        index = pos  # tie-break key: position in the input list
        if cand.formulation is None:
            corrected = None
        else:
            corrected, _ = apply_corrections(cand.formulation, cfg)
        penalties = score_candidate(corrected, rec, cfg)
        total = cand.logprob - sum(m for _, m in penalties)
        scored.append(
            BeamCandidate(
                formulation=corrected,
                logprob=cand.logprob,
                penalties=penalties,
                total_score=total,
                index=index,
                raw=cand.raw,
            )
        )
    scored.sort(key=lambda c: (-c.total_score, len(c.penalties), c.index))
    return scored


def select_top_k(ranked: Sequence[BeamCandidate], k: int) -> list[BeamCandidate]:
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    return list(ranked[:k])


# ---------------------------------------------------------------------------
# beam file I/O


def candidate_from_dict(raw: Mapping[str, Any], index: int) -> BeamCandidate:
    logprob = float(raw.get("logprob", 0.0))
    payload = raw.get("ir")
    formulation = None
    raw_text = None
    try:
        if isinstance(payload, str):
            formulation = formulation_from_dict(json.loads(payload))
        else:
            formulation = formulation_from_dict(payload)
    except (ToolkitError, json.JSONDecodeError, TypeError):
        raw_text = payload if isinstance(payload, str) else json.dumps(payload)
    return BeamCandidate(
        formulation=formulation, logprob=logprob, index=index, raw=raw_text
    )


def candidate_to_dict(cand: BeamCandidate) -> dict[str, Any]:
    out: dict[str, Any] = {}
    if cand.formulation is not None:
        out["ir"] = formulation_to_dict(cand.formulation)
    else:
        out["ir"] = cand.raw
    out["logprob"] = cand.logprob
    out["penalties"] = [[rule, mag] for rule, mag in cand.penalties]
    out["total_score"] = cand.total_score
    return out


def load_beams(path: str) -> dict[str, list[BeamCandidate]]:
    """Read a JSON-lines beam file: {"id": ..., "candidates": [...]}."""
    beams: dict[str, list[BeamCandidate]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise OrphanBeam(f"line {lineno}: invalid JSON ({exc})") from exc
            if not isinstance(data, dict) or "id" not in data:
                raise OrphanBeam(f"line {lineno}: beam line needs an id")
            beam_id = str(data["id"])
            if beam_id in beams:
                raise OrphanBeam(f"duplicate beam id {beam_id!r} at line {lineno}")
            raw_candidates = data.get("candidates", [])
            if not isinstance(raw_candidates, list) or not raw_candidates:
                raise OrphanBeam(f"line {lineno}: no candidates for {beam_id!r}")
            beams[beam_id] = [
                candidate_from_dict(c, i) for i, c in enumerate(raw_candidates)
            ]
    return beams
