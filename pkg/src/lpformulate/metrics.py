"""Declaration matching, canonical accuracy, execution match, and pass@k.

Declarations are compared after lowering to canonical rows and aligning
senses; two constraints match only under exact rational equality of
(coefficients, sense, rhs), two objectives under exact equality of
(coefficients, direction). Counts all stay exact rationals so aggregate
accuracies carry no float drift.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .canonical import canonical_objective, canonical_row, canonicalize, normalize_sense
from .errors import EmptyDataset, MissingGold, OrphanBeam, ToolkitError
from .ir import Formulation, ProblemRecord, VariableResolver
from .rules import BeamCandidate, RuleConfig, rank_beams, select_top_k
from .solver import OPTIMAL, solve_ilp

DEFAULT_EXEC_TOL = 1e-6


@dataclass(frozen=True)
class MatchResult:
    """Outcome of matching predicted declarations against gold ones."""

    fp: int
    fn: int
    d: int
    pairs: tuple[tuple[int, int], ...]

    @property
    def accuracy(self) -> Fraction:
        return 1 - Fraction(self.fp + self.fn, self.d)


def _declaration_keys(
    f: Formulation, rec: ProblemRecord
) -> tuple[list[object | None], list[object | None]]:
    """Matchable keys for objectives and constraints; None = unlowerable."""
    resolver = VariableResolver(rec.variable_order, rec.entity_mapping)
    obj_keys: list[object | None] = []
    for obj in f.objectives:
        try:
            row = canonical_objective(obj, rec.variable_order, resolver=resolver)
            obj_keys.append((row.coefficients, row.direction))
        except ToolkitError:
            obj_keys.append(None)
    con_keys: list[object | None] = []
    for con in f.constraints:
        try:
            row = normalize_sense(
                canonical_row(con, rec.variable_order, resolver=resolver)
            )
            con_keys.append((row.coefficients, row.sense, row.rhs))
        except ToolkitError:
            con_keys.append(None)
    return obj_keys, con_keys


def match_declarations(
    pred: Formulation | None, gold: Formulation, rec: ProblemRecord
) -> MatchResult:
    """Exact matching; a prediction that cannot lower counts wholly as FP."""
    gold_obj, gold_con = _declaration_keys(gold, rec)
    d = len(gold_obj) + len(gold_con)
    if pred is None:
        return MatchResult(fp=0, fn=d, d=d, pairs=())
    pred_obj, pred_con = _declaration_keys(pred, rec)

    pairs: list[tuple[int, int]] = []
    fp = 0

    def match_block(
        pred_keys: list[object | None],
        gold_keys: list[object | None],
        pred_base: int,
        gold_base: int,
    ) -> int:
        nonlocal fp
        available: dict[object, list[int]] = {}
        for j, key in enumerate(gold_keys):
            if key is not None:
                available.setdefault(key, []).append(j)
        matched = 0
        for i, key in enumerate(pred_keys):
            slots = available.get(key) if key is not None else None
            if slots:
                j = slots.pop(0)
                pairs.append((pred_base + i, gold_base + j))
                matched += 1
            else:
                fp += 1
        return matched

    matched_obj = match_block(pred_obj, gold_obj, 0, 0)
    matched_con = match_block(pred_con, gold_con, len(pred_obj), len(gold_obj))
    fn = d - matched_obj - matched_con
    return MatchResult(fp=fp, fn=fn, d=d, pairs=tuple(pairs))


def canonical_accuracy(results: Sequence[MatchResult]) -> tuple[Fraction, Fraction]:
    """(micro, mean): micro over summed counts, mean over per-problem values."""
    total_d = sum(r.d for r in results)
    if not results or total_d == 0:
        raise EmptyDataset("no gold declarations to score against")
    micro = 1 - Fraction(sum(r.fp + r.fn for r in results), total_d)
    mean = sum((r.accuracy for r in results), Fraction(0)) / len(results)
    return micro, mean


def execution_match(
    pred: Formulation | None,
    gold: Formulation,
    rec: ProblemRecord,
    tol: float = DEFAULT_EXEC_TOL,
) -> bool:
    """Solve both sides; a prediction that fails anywhere is a non-match."""
    try:
        gold_sol = solve_ilp(canonicalize(gold, rec))
    except ToolkitError:
        return False
    if pred is None:
        return False
    try:
        pred_sol = solve_ilp(canonicalize(pred, rec))
    except ToolkitError:
        return False
    if pred_sol.status != gold_sol.status:
        return False
    if gold_sol.status != OPTIMAL:
        return True
    gap = abs(pred_sol.objective_value - gold_sol.objective_value)
    return gap <= tol * max(1.0, abs(gold_sol.objective_value))


def pass_at_k(
    ranked: Sequence[BeamCandidate],
    gold: Formulation,
    rec: ProblemRecord,
    k: int,
    tol: float = DEFAULT_EXEC_TOL,
) -> tuple[Fraction, bool]:
    """Best canonical accuracy and any-execution-match over the top k."""
    best: Fraction | None = None
    exec_any = False
    for cand in select_top_k(ranked, k):
        result = match_declarations(cand.formulation, gold, rec)
        if best is None or result.accuracy > best:
            best = result.accuracy
        if not exec_any and execution_match(cand.formulation, gold, rec, tol):
            exec_any = True
    if best is None:
        raise EmptyDataset("no candidates to evaluate")
    return best, exec_any


@dataclass(frozen=True)
class ProblemOutcome:
    id: str
    match: MatchResult
    exec_match: bool
    chosen_beam: int
    pass_k: Mapping[int, tuple[Fraction, bool]]

    @property
    def canonical(self) -> Fraction:
        return self.match.accuracy


@dataclass(frozen=True)
class EvalReport:
    per_problem: tuple[ProblemOutcome, ...]
    k_list: tuple[int, ...]

    @property
    def micro(self) -> Fraction:
        micro, _ = canonical_accuracy([p.match for p in self.per_problem])
        return micro

    @property
    def mean(self) -> Fraction:
        _, mean = canonical_accuracy([p.match for p in self.per_problem])
        return mean

    @property
    def exec_rate(self) -> Fraction:
        n = len(self.per_problem)
        return Fraction(sum(1 for p in self.per_problem if p.exec_match), n)

    def pass_rates(self, k: int) -> tuple[Fraction, Fraction]:
        """(mean best accuracy, execution-any rate) over the top k."""
        n = len(self.per_problem)
        best = sum((p.pass_k[k][0] for p in self.per_problem), Fraction(0)) / n
        execs = Fraction(sum(1 for p in self.per_problem if p.pass_k[k][1]), n)
        return best, execs

    def to_dict(self) -> dict:
        total_fp = sum(p.match.fp for p in self.per_problem)
        total_fn = sum(p.match.fn for p in self.per_problem)
        total_d = sum(p.match.d for p in self.per_problem)
        aggregate = {
            "problems": len(self.per_problem),
            "total_fp": total_fp,
            "total_fn": total_fn,
            "total_declarations": total_d,
            "micro_canonical_accuracy": float(self.micro),
            "micro_canonical_accuracy_clamped": float(max(self.micro, Fraction(0))),
            "mean_canonical_accuracy": float(self.mean),
            "mean_canonical_accuracy_clamped": float(max(self.mean, Fraction(0))),
            "execution_match_rate": float(self.exec_rate),
            "pass_at_k": {
                str(k): {
                    "best_accuracy_mean": float(self.pass_rates(k)[0]),
                    "exec_any_rate": float(self.pass_rates(k)[1]),
                }
                for k in self.k_list
            },
        }
        rows = [
            {
                "id": p.id,
                "canonical_accuracy": float(p.canonical),
                "exec_match": p.exec_match,
                "chosen_beam": p.chosen_beam,
                "fp": p.match.fp,
                "fn": p.match.fn,
                "d": p.match.d,
            }
            for p in self.per_problem
        ]
        return {"aggregate": aggregate, "per_problem": rows}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["id", "canonical_accuracy", "exec_match", "chosen_beam", "fp", "fn", "d"]
        )
        for p in self.per_problem:
            writer.writerow(
                [
                    p.id,
                    float(p.canonical),
                    int(p.exec_match),
                    p.chosen_beam,
                    p.match.fp,
                    p.match.fn,
                    p.match.d,
                ]
            )
        return buf.getvalue()

    def render_table(self) -> str:
        lines = [
            f"{'id':<24} {'canon':>8} {'exec':>5} {'beam':>4}  (fp/fn/d)",
        ]
        for p in self.per_problem:
            lines.append(
                f"{p.id:<24} {float(p.canonical):>8.4f} "
                f"{'yes' if p.exec_match else 'no':>5} {p.chosen_beam:>4}  "
                f"({p.match.fp}/{p.match.fn}/{p.match.d})"
            )
        lines.append("-" * 56)
        lines.append(
            f"micro {float(self.micro):.4f}  mean {float(self.mean):.4f}  "
            f"exec {float(self.exec_rate):.4f}"
        )
        for k in self.k_list:
            best, execs = self.pass_rates(k)
            lines.append(
                f"pass@{k}: best-accuracy {float(best):.4f}  exec-any {float(execs):.4f}"
            )
        return "\n".join(lines) + "\n"


def evaluate_dataset(
    records: Iterable[ProblemRecord],
    beams: Mapping[str, Sequence[BeamCandidate]],
    cfg: RuleConfig | None = None,
    k_list: Sequence[int] = (1, 5),
    tol: float = DEFAULT_EXEC_TOL,
) -> EvalReport:
    """Correct, rank, and score every problem that has a beam entry."""
    cfg = cfg or RuleConfig()
    by_id: dict[str, ProblemRecord] = {}
    for rec in records:
        if rec.id in by_id:
            raise OrphanBeam(f"duplicate corpus record id {rec.id!r}")
        by_id[rec.id] = rec

    outcomes = []
    for beam_id, candidates in beams.items():
        rec = by_id.get(beam_id)
        if rec is None:
            raise OrphanBeam(f"beam id {beam_id!r} not present in the corpus")
        if rec.gold is None:
            raise MissingGold(f"record {beam_id!r} has no gold formulation")
        ranked = rank_beams(candidates, rec, cfg)
        top = ranked[0]
        match = match_declarations(top.formulation, rec.gold, rec)
        exec_ok = execution_match(top.formulation, rec.gold, rec, tol)
        pass_k = {k: pass_at_k(ranked, rec.gold, rec, k, tol) for k in k_list}
        outcomes.append(
            ProblemOutcome(
                id=beam_id,
                match=match,
                exec_match=exec_ok,
                chosen_beam=top.index,
                pass_k=pass_k,
            )
        )
    if not outcomes:
        raise EmptyDataset("no problems evaluated")
    return EvalReport(per_problem=tuple(outcomes), k_list=tuple(k_list))
