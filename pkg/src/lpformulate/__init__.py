"""Toolkit for LP word-problem formulations.

Pipeline pieces: an exact-rational IR with JSON (de)serialization and
validation, canonical matrix lowering, rule-based candidate repair and
beam reranking, an embedded LP/ILP solver with LP-file interchange,
declaration/execution metrics with pass@k evaluation, and IR-level data
augmentation with pluggable text generation.
"""

from .canonical import (
    CanonicalLP,
    CanonicalRow,
    ObjectiveRow,
    canonical_objective,
    canonical_row,
    canonicalize,
    normalize_sense,
)
from .ir import (
    ConstraintDecl,
    EntitySpan,
    Formulation,
    ObjectiveDecl,
    ProblemRecord,
    ValidationReport,
    load_corpus,
    parse_formulation,
    parse_problem,
    serialize_ir,
    serialize_record,
    validate,
)
from .metrics import (
    EvalReport,
    MatchResult,
    canonical_accuracy,
    evaluate_dataset,
    execution_match,
    match_declarations,
    pass_at_k,
)
from .quantities import Quantity, parse_quantity
from .rules import (
    BeamCandidate,
    CorrectionLog,
    RuleConfig,
    apply_corrections,
    rank_beams,
    score_candidate,
    select_top_k,
)
from .solver import (
    IlpSolution,
    LpSolution,
    brute_force_ilp,
    emit_lp_file,
    parse_lp_file,
    solve_ilp,
    solve_lp,
)

__version__ = "0.1.0"
