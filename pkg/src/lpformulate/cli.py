"""Command-line entry point.

    lpformulate validate --corpus corpus.jsonl
    lpformulate rank     --corpus corpus.jsonl --beams beams.jsonl --k 5 --out ranked.jsonl
    lpformulate solve    problem.json [--relax] [--strict] [--emit-lp out.lp]
    lpformulate eval     --corpus corpus.jsonl --beams beams.jsonl --k 1,5 --out report/
    lpformulate augment  --corpus corpus.jsonl --out augmented.jsonl --seed 7

Exit codes: 0 success, 1 data-level failure (violations, orphan beams,
strict non-optimal solves), 2 I/O or service failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

from . import augment as augment_mod
from . import ir
from .canonical import canonicalize
from .errors import ServiceUnavailable, ToolkitError
from .metrics import evaluate_dataset
from .rules import RuleConfig, load_beams, rank_beams, select_top_k, candidate_to_dict
from .solver import (
    OPTIMAL,
    emit_lp_file,
    parse_lp_file,
    solve_ilp,
    solve_lp,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lpformulate",
        description="Work with LP word-problem formulations: validate, rank, solve, evaluate, augment.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check a corpus for violations")
    p_validate.add_argument("--corpus", required=True)
    p_validate.add_argument("--jobs", type=int, default=1)

    p_rank = sub.add_parser("rank", help="correct and rerank beam candidates")
    p_rank.add_argument("--corpus", required=True)
    p_rank.add_argument("--beams", required=True)
    p_rank.add_argument("--rules", help="rule config JSON")
    p_rank.add_argument("--k", type=int, default=5)
    p_rank.add_argument("--out", required=True)
    p_rank.add_argument("--jobs", type=int, default=1)

    p_solve = sub.add_parser("solve", help="solve one formulation or LP file")
    p_solve.add_argument("input", help="IR JSON file, corpus record, or .lp file")
    p_solve.add_argument("--relax", action="store_true", help="drop integrality")
    p_solve.add_argument("--strict", action="store_true",
                         help="nonzero exit unless Optimal")
    p_solve.add_argument("--emit-lp", metavar="PATH",
                         help="write the LP file instead of solving")
    p_solve.add_argument("--tol", type=float, default=1e-6)

    p_eval = sub.add_parser("eval", help="evaluate beams against gold")
    p_eval.add_argument("--corpus", required=True)
    p_eval.add_argument("--beams", required=True)
    p_eval.add_argument("--rules", help="rule config JSON")
    p_eval.add_argument("--k", default="1,5", help="comma-separated pass@k list")
    p_eval.add_argument("--out", help="directory for report.json / per_problem.csv")
    p_eval.add_argument("--tol", type=float, default=1e-6)
    p_eval.add_argument("--jobs", type=int, default=1)

    p_aug = sub.add_parser("augment", help="mutate a corpus and back-translate")
    p_aug.add_argument("--corpus", required=True)
    p_aug.add_argument("--out", required=True)
    p_aug.add_argument("--seed", type=int, default=0)
    p_aug.add_argument("--jitter", type=float, default=0.5)
    p_aug.add_argument("--singles-ratio", default=None,
                       help="simulated single-objective records per original")
    p_aug.add_argument("--multi-ratio", default=None,
                       help="multi-objective conversions per original")
    p_aug.add_argument("--endpoint", default="stub:")
    p_aug.add_argument("--auth-env", default="")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return cmd_validate(args)
        if args.command == "rank":
            return cmd_rank(args)
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "eval":
            return cmd_eval(args)
        if args.command == "augment":
            return cmd_augment(args)
        raise AssertionError(args.command)
    except ServiceUnavailable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


def _load_rules(path: str | None) -> RuleConfig:
    if not path:
        return RuleConfig()
    with open(path, encoding="utf-8") as fh:
        return RuleConfig.from_json(fh.read())


def _ordered_map(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def cmd_validate(args) -> int:
    failures = 0
    with open(args.corpus, encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]

    def check(numbered: tuple[int, str]) -> list[str]:
        lineno, line = numbered
        problems = []
        try:
            rec = ir.parse_problem(line)
        except ToolkitError as exc:
            return [f"line {lineno}: {exc}"]
        if rec.gold is not None:
            report = ir.validate(rec.gold, rec.entity_mapping)
            problems.extend(
                f"{rec.id}: {violation}" for violation in report.violations
            )
        return problems

    for problems in _ordered_map(check, list(enumerate(lines, start=1)), args.jobs):
        for message in problems:
            print(message)
            failures += 1
    if failures:
        print(f"{failures} violation(s) found", file=sys.stderr)
        return 1
    print(f"{len(lines)} record(s) valid")
    return 0


def cmd_rank(args) -> int:
    cfg = _load_rules(args.rules)
    records = {rec.id: rec for rec in ir.load_corpus(args.corpus)}
    beams = load_beams(args.beams)
    for beam_id in beams:
        if beam_id not in records:
            raise ToolkitError(f"beam id {beam_id!r} not present in the corpus")

    def run(item):
        beam_id, candidates = item
        ranked = rank_beams(candidates, records[beam_id], cfg)
        top = select_top_k(ranked, args.k)
        return {"id": beam_id, "candidates": [candidate_to_dict(c) for c in top]}

    results = _ordered_map(run, list(beams.items()), args.jobs)
    with open(args.out, "w", encoding="utf-8") as fh:
        for row in results:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    print(f"wrote {len(results)} ranked beam line(s) to {args.out}")
    return 0


def _load_solve_input(path: str):
    with open(path, encoding="utf-8") as fh:
        content = fh.read()
    stripped = content.lstrip()
    if path.endswith(".lp") or not stripped.startswith("{"):
        return parse_lp_file(content)
    data = json.loads(content)
    if "gold" in data or "variable_order" in data:
        rec = ir.record_from_dict(data)
        if rec.gold is None:
            raise ToolkitError(f"record {rec.id!r} carries no formulation to solve")
        return canonicalize(rec.gold, rec)
    return canonicalize(ir.formulation_from_dict(data))


def cmd_solve(args) -> int:
    lp = _load_solve_input(args.input)
    if args.relax:
        lp = type(lp)(
            objectives=lp.objectives,
            rows=lp.rows,
            variable_order=lp.variable_order,
            nonneg=lp.nonneg,
            integral=(False,) * len(lp.variable_order),
        )
    if args.emit_lp:
        text = emit_lp_file(lp, name=os.path.splitext(os.path.basename(args.input))[0])
        if args.emit_lp == "-":
            sys.stdout.write(text)
        else:
            with open(args.emit_lp, "w", encoding="utf-8") as fh:
                fh.write(text)
        return 0

    if any(lp.integral):
        sol = solve_ilp(lp)
        payload = {
            "status": sol.status,
            "objective_value": sol.objective_value,
            "assignment": dict(sol.assignment),
            "node_count": sol.node_count,
        }
    else:
        sol = solve_lp(lp)
        payload = {
            "status": sol.status,
            "objective_value": sol.objective_value,
            "assignment": dict(sol.assignment),
        }
    print(json.dumps(payload, sort_keys=True))
    if args.strict and sol.status != OPTIMAL:
        return 1
    return 0


def cmd_eval(args) -> int:
    cfg = _load_rules(args.rules)
    records = ir.load_corpus(args.corpus)
    beams = load_beams(args.beams)
    k_list = tuple(int(k) for k in str(args.k).split(",") if k.strip())
    report = evaluate_dataset(records, beams, cfg, k_list=k_list, tol=args.tol)
    sys.stdout.write(report.render_table())
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "report.json"), "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
        with open(
            os.path.join(args.out, "per_problem.csv"), "w", encoding="utf-8"
        ) as fh:
            fh.write(report.to_csv())
        print(f"wrote report.json and per_problem.csv to {args.out}")
    return 0


def cmd_augment(args) -> int:
    records = ir.load_corpus(args.corpus)
    mut_cfg = augment_mod.MutationConfig(seed=args.seed, coefficient_jitter=args.jitter,
                                         limit_jitter=args.jitter)
    gen_cfg = augment_mod.GenServiceConfig(
        endpoint=args.endpoint, auth_env=args.auth_env
    )
    singles = (
        Fraction(args.singles_ratio)
        if args.singles_ratio is not None
        else augment_mod.DEFAULT_SINGLES_RATIO
    )
    multi = (
        Fraction(args.multi_ratio)
        if args.multi_ratio is not None
        else augment_mod.DEFAULT_MULTI_RATIO
    )
    augmented, counts = augment_mod.augment_corpus(
        records, mut_cfg, gen_cfg, singles_ratio=singles, multi_ratio=multi
    )
    with open(args.out, "w", encoding="utf-8") as fh:
        for item in augmented:
            fh.write(item.to_json() + "\n")
    print(
        f"original {counts['original']}  "
        f"simulated single-objective {counts['single_objective']}  "
        f"multi-objective {counts['multi_objective']}  "
        f"rejected {counts['rejected']}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
