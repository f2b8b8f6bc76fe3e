"""IR-level data augmentation: parameter mutation, multi-objective
synthesis by limit removal, text generation through a pluggable service,
and textual validation of the generated problems.

Generated records are quarantined in their own corpus with provenance
and never mixed silently into original data.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Mapping, Sequence

import requests

from .canonical import canonicalize
from .errors import (
    EmptyGeneration,
    NotEligible,
    ServiceUnavailable,
    ToolkitError,
)
from .ir import (
    ConstraintDecl,
    Formulation,
    ObjectiveDecl,
    ProblemRecord,
    VariableResolver,
    formulation_to_dict,
)
from .quantities import Quantity, make_quantity, value_in_text
from .solver import INFEASIBLE, solve_lp

# corpus-level defaults: simulated singles and multi-objective conversions
# per original record
DEFAULT_SINGLES_RATIO = Fraction(3553, 713)
DEFAULT_MULTI_RATIO = Fraction(483, 713)

MAXIMIZE_WORDS = ("maximize", "maximise", "maximum", "largest", "greatest", "most")
MINIMIZE_WORDS = ("minimize", "minimise", "minimum", "smallest", "least", "fewest")
DIRECTION_PHRASES = (
    "at most",
    "at least",
    "no more than",
    "no less than",
    "up to",
    "cannot exceed",
    "must not exceed",
    "a minimum of",
    "a maximum of",
    "limited to",
)


@dataclass(frozen=True)
class MutationConfig:
    seed: int = 0
    coefficient_jitter: float = 0.5  # relative half-range, multiplicative
    limit_jitter: float = 0.5
    rename_pool: Mapping[str, Sequence[str]] = field(default_factory=dict)
    mutations_per_record: int = 5


@dataclass(frozen=True)
class GenServiceConfig:
    endpoint: str = "stub:"
    auth_env: str = ""  # name of the env var holding the token, never the token
    prompt_template: str = (
        "Write one self-contained optimization word problem whose data is "
        "exactly: {draft}"
    )
    max_attempts: int = 3
    timeout: float = 10.0


@dataclass(frozen=True)
class GeneratedProblem:
    text: str
    formulation: Formulation


@dataclass(frozen=True)
class GenValidationReport:
    misses: tuple[str, ...]

    @property
    def accept(self) -> bool:
        return not self.misses


@dataclass(frozen=True)
class AugmentedRecord:
    text: str
    formulation: Formulation
    provenance: Mapping[str, Any]

    def to_json(self) -> str:
        return json.dumps(
            {
                "text": self.text,
                "ir": formulation_to_dict(self.formulation),
                "provenance": dict(self.provenance),
            },
            ensure_ascii=False,
        )


# ---------------------------------------------------------------------------
# mutation


def mutate_parameters(f: Formulation, cfg: MutationConfig) -> list[Formulation]:
    """Seeded structure-preserving mutants: same types, counts, operators,
    and variable arity; quantities jittered multiplicatively, kept exact."""
    rng = random.Random(cfg.seed)
    return [_mutate_once(f, rng, cfg) for _ in range(cfg.mutations_per_record)]


def _mutate_once(
    f: Formulation, rng: random.Random, cfg: MutationConfig
) -> Formulation:
    renames = _pick_renames(f, rng, cfg)
    resolver = VariableResolver(f.vars)

    def rename(name: str) -> str:
        hit = resolver.try_resolve(name)
        return renames.get(hit, name) if hit is not None else name

    def jitter(q: Quantity, rel: float, cap_at_one: bool = False) -> Quantity:
        lo = max(1, round(1000 * (1 - rel)))
        hi = round(1000 * (1 + rel))
        if cap_at_one and q.value > 0:
            hi = min(hi, int(1000 / q.value))
        hi = max(hi, lo)
        factor = Fraction(rng.randint(lo, hi), 1000)
        if factor == 1:
            return q  # keep the original surface form on the fixpoint
        return make_quantity(q.value * factor)

    objectives = []
    for obj in f.objectives:
        if obj.terms is not None:
            terms = {
                rename(k): jitter(q, cfg.coefficient_jitter)
                for k, q in obj.terms.items()
            }
            objectives.append(replace(obj, terms=terms))
        else:
            objectives.append(
                replace(obj, vars=tuple(rename(v) for v in obj.vars or ()))
            )

    constraints = []
    for con in f.constraints:
        limit = con.limit
        if limit is not None:
            limit = jitter(limit, cfg.limit_jitter, cap_at_one=con.con_type == "ratio")
        terms = con.terms
        if terms is not None:
            terms = {
                rename(k): jitter(q, cfg.coefficient_jitter) for k, q in terms.items()
            }
        param = con.param
        if param is not None:
            param = jitter(param, cfg.coefficient_jitter)
        constraints.append(
            replace(
                con,
                limit=limit,
                terms=terms,
                param=param,
                var=rename(con.var) if con.var else con.var,
                x_var=rename(con.x_var) if con.x_var else con.x_var,
                y_var=rename(con.y_var) if con.y_var else con.y_var,
            )
        )

    return Formulation(
        objectives=tuple(objectives),
        constraints=tuple(constraints),
        vars=tuple(renames.get(v, v) for v in f.vars),
        extra=f.extra,
    )


def _pick_renames(
    f: Formulation, rng: random.Random, cfg: MutationConfig
) -> dict[str, str]:
    if not cfg.rename_pool:
        return {}
    domain = rng.choice(sorted(cfg.rename_pool))
    pool = list(cfg.rename_pool[domain])
    if len(pool) < len(f.vars):
        return {}
    picked = rng.sample(pool, len(f.vars))
    return dict(zip(f.vars, picked))


# ---------------------------------------------------------------------------
# multi-objective synthesis


def constraint_to_objective(f: Formulation, index: int) -> Formulation:
    """Turn one linear constraint into an extra objective by dropping its
    limit; resource rows (<=) become minimizations, requirement rows (>=)
    maximizations. Applies only to rich problems (over three linear rows)."""
    linear_count = sum(1 for c in f.constraints if c.con_type == "linear")
    if linear_count <= 3:
        raise NotEligible(
            f"needs more than three linear constraints, found {linear_count}"
        )
    if not (0 <= index < len(f.constraints)):
        raise NotEligible(f"constraint index {index} out of range")
    target = f.constraints[index]
    if target.con_type != "linear":
        raise NotEligible(f"constraint {index} is {target.con_type}, not linear")

    new_obj = ObjectiveDecl(
        obj_type="linear",
        direction="minimize" if target.operator == "LESS_OR_EQUAL" else "maximize",
        name=target.direction or "converted constraint",
        terms=dict(target.terms or {}),
    )
    constraints = tuple(c for i, c in enumerate(f.constraints) if i != index)
    return Formulation(
        objectives=tuple(f.objectives) + (new_obj,),
        constraints=constraints,
        vars=f.vars,
        extra=f.extra,
    )


def eligible_for_multi_objective(f: Formulation) -> list[int]:
    if sum(1 for c in f.constraints if c.con_type == "linear") <= 3:
        return []
    return [i for i, c in enumerate(f.constraints) if c.con_type == "linear"]


# ---------------------------------------------------------------------------
# text generation


def render_problem_text(f: Formulation) -> str:
    """Deterministic prose covering every quantity, variable, and direction."""
    parts: list[str] = []
    names = ", ".join(f.vars)
    parts.append(f"A planner chooses how many {names} to use.")
    for con in f.constraints:
        parts.append(_render_constraint(con))
    for obj in f.objectives:
        direction = "Maximize" if obj.direction == "maximize" else "Minimize"
        label = obj.name or "the objective"
        if obj.terms is not None:
            contributions = ", ".join(
                f"{q.source_text} per {var}" for var, q in obj.terms.items()
            )
            parts.append(f"{direction} {label}, earning {contributions}.")
        else:
            listed = " and ".join(obj.vars or ())
            parts.append(f"{direction} the total of {listed}.")
    return " ".join(parts)


def _render_constraint(con: ConstraintDecl) -> str:
    at_phrase = "at most" if con.operator == "LESS_OR_EQUAL" else "at least"
    if con.con_type == "sum":
        return f"Altogether, {at_phrase} {con.limit.source_text} may be chosen."
    if con.con_type in ("upperbound", "lowerbound"):
        return f"The count of {con.var} must be {at_phrase} {con.limit.source_text}."
    if con.con_type == "linear":
        uses = ", ".join(
            f"{q.source_text} per {var}" for var, q in (con.terms or {}).items()
        )
        return f"A resource is consumed at {uses}, with {at_phrase} {con.limit.source_text} available."
    if con.con_type == "ratio":
        return (
            f"{con.var} must make up {at_phrase} {con.limit.source_text} "
            f"of the total selection."
        )
    if con.con_type == "xby":
        return (
            f"There must be {at_phrase} {con.param.source_text} times as many "
            f"{con.x_var} as {con.y_var}."
        )
    return f"The number of {con.x_var} must be {at_phrase} the number of {con.y_var}."


def backtranslate(f: Formulation, svc: GenServiceConfig) -> GeneratedProblem:
    """Generate problem text for an IR via the configured service.

    The "stub:" endpoint renders deterministically with no network. The
    text carries no guarantee of semantic fidelity; validate_generated
    checks surface coverage only.
    """
    if svc.endpoint.startswith("stub:"):
        return GeneratedProblem(text=render_problem_text(f), formulation=f)

    prompt = svc.prompt_template.format(
        draft=render_problem_text(f), ir=json.dumps(formulation_to_dict(f))
    )
    last_error: Exception | None = None
    for _ in range(max(1, svc.max_attempts)):
        try:
            text = _http_generate(svc, prompt)
        except requests.RequestException as exc:
            last_error = exc
            continue
        if text and text.strip():
            return GeneratedProblem(text=text.strip(), formulation=f)
        last_error = None
    if last_error is not None:
        raise ServiceUnavailable(f"generation service kept failing: {last_error}")
    raise EmptyGeneration("generation service returned empty text")


def _http_generate(svc: GenServiceConfig, prompt: str) -> str:
    import os

    headers = {"Content-Type": "application/json"}
    if svc.auth_env:
        token = os.environ.get(svc.auth_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
    response = requests.post(
        svc.endpoint,
        json={"prompt": prompt},
        headers=headers,
        timeout=svc.timeout,
    )
    response.raise_for_status()
    payload = response.json()
    if isinstance(payload, dict):
        if isinstance(payload.get("text"), str):
            return payload["text"]
        choices = payload.get("choices")
        if isinstance(choices, list) and choices:
            first = choices[0]
            if isinstance(first, dict) and isinstance(first.get("text"), str):
                return first["text"]
    return ""


def validate_generated(text: str, f: Formulation) -> GenValidationReport:
    """Check the text witnesses every quantity, variable, and direction."""
    misses: list[str] = []
    lowered = text.lower()

    for label, value in _formulation_quantities(f):
        if not value_in_text(value, text):
            misses.append(f"quantity {label} not found in text")
    for var in f.vars:
        if var.lower() not in lowered:
            misses.append(f"variable {var!r} not found in text")
    for i, obj in enumerate(f.objectives):
        words = MAXIMIZE_WORDS if obj.direction == "maximize" else MINIMIZE_WORDS
        if not any(w in lowered for w in words):
            misses.append(f"objective {i} direction word missing")
    phrase_count = sum(lowered.count(p) for p in DIRECTION_PHRASES)
    if phrase_count < len(f.constraints):
        misses.append(
            f"only {phrase_count} direction phrases for {len(f.constraints)} constraints"
        )
    return GenValidationReport(misses=tuple(misses))


def _formulation_quantities(f: Formulation) -> list[tuple[str, Fraction]]:
    out = []
    for i, obj in enumerate(f.objectives):
        for var, q in (obj.terms or {}).items():
            out.append((f"objective[{i}].terms[{var!r}]", q.value))
    for i, con in enumerate(f.constraints):
        if con.limit is not None:
            out.append((f"constraint[{i}].limit", con.limit.value))
        for var, q in (con.terms or {}).items():
            out.append((f"constraint[{i}].terms[{var!r}]", q.value))
        if con.param is not None:
            out.append((f"constraint[{i}].param", con.param.value))
    return out


# ---------------------------------------------------------------------------
# corpus pipeline


def record_seed(base_seed: int, record_id: str, salt: str = "") -> int:
    digest = hashlib.sha256(f"{base_seed}:{salt}:{record_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _allocate(ratio: Fraction, count: int) -> list[int]:
    """Largest-remainder-style allocation: cumulative rounding, exact total."""
    out = []
    prev = 0
    for i in range(1, count + 1):
        cur = int(round(ratio * i))
        out.append(cur - prev)
        prev = cur
    return out


def augment_corpus(
    records: Sequence[ProblemRecord],
    mut_cfg: MutationConfig,
    gen_cfg: GenServiceConfig,
    singles_ratio: Fraction = DEFAULT_SINGLES_RATIO,
    multi_ratio: Fraction = DEFAULT_MULTI_RATIO,
) -> tuple[list[AugmentedRecord], dict[str, int]]:
    """Mutate and back-translate a corpus into a provenance-tagged set."""
    usable = [r for r in records if r.gold is not None]
    singles_plan = _allocate(singles_ratio, len(usable))

    eligible = [r for r in usable if eligible_for_multi_objective(r.gold)]
    multi_total = int(round(multi_ratio * len(usable)))
    multi_plan = _allocate(
        Fraction(multi_total, len(eligible)) if eligible else Fraction(0), len(eligible)
    )

    out: list[AugmentedRecord] = []
    counts = {
        "original": len(records),
        "single_objective": 0,
        "multi_objective": 0,
        "rejected": 0,
    }

    # originals travel along, explicitly tagged, never silently mixed
    for rec in usable:
        out.append(
            AugmentedRecord(
                text=rec.text,
                formulation=rec.gold,
                provenance={
                    "source_id": rec.id,
                    "seed": mut_cfg.seed,
                    "service": None,
                    "kind": "original",
                    "feasible": _feasibility_bit(rec.gold, rec),
                },
            )
        )

    for rec, n_singles in zip(usable, singles_plan):
        cfg = replace(
            mut_cfg,
            seed=record_seed(mut_cfg.seed, rec.id, "single"),
            mutations_per_record=n_singles,
        )
        for mutant in mutate_parameters(rec.gold, cfg):
            item = _finish(mutant, rec, mut_cfg.seed, gen_cfg, "mutation")
            if item is None:
                counts["rejected"] += 1
            else:
                out.append(item)
                counts["single_objective"] += 1

    for rec, n_multi in zip(eligible, multi_plan):
        rng = random.Random(record_seed(mut_cfg.seed, rec.id, "multi"))
        for j in range(n_multi):
            base_cfg = replace(
                mut_cfg,
                seed=record_seed(mut_cfg.seed, rec.id, f"multi-{j}"),
                mutations_per_record=1,
            )
            mutant = mutate_parameters(rec.gold, base_cfg)[0]
            choices = eligible_for_multi_objective(mutant)
            if not choices:
                counts["rejected"] += 1
                continue
            converted = constraint_to_objective(mutant, rng.choice(choices))
            item = _finish(converted, rec, mut_cfg.seed, gen_cfg, "multi_objective")
            if item is None:
                counts["rejected"] += 1
            else:
                out.append(item)
                counts["multi_objective"] += 1

    return out, counts


def _finish(
    mutant: Formulation,
    rec: ProblemRecord,
    seed: int,
    gen_cfg: GenServiceConfig,
    kind: str,
) -> AugmentedRecord | None:
    generated = backtranslate(mutant, gen_cfg)
    report = validate_generated(generated.text, mutant)
    if not report.accept:
        return None
    return AugmentedRecord(
        text=generated.text,
        formulation=mutant,
        provenance={
            "source_id": rec.id,
            "seed": seed,
            "service": gen_cfg.endpoint,
            "kind": kind,
            "feasible": _feasibility_bit(mutant, rec),
        },
    )


def _feasibility_bit(f: Formulation, rec: ProblemRecord) -> bool | None:
    """Constraint satisfiability via the LP relaxation of a single-objective
    view; None when the check itself cannot run. Mutants may carry renamed
    variables, so they canonicalize against their own variable list."""
    try:
        single = Formulation(
            objectives=(f.objectives[0],),
            constraints=f.constraints,
            vars=f.vars,
            extra={},
        )
        lp = canonicalize(single)
        return solve_lp(lp).status != INFEASIBLE
    except ToolkitError:
        return None
