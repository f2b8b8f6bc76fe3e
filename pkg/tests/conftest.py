"""Shared fixtures: the error-pattern record pairs used across the suite,
span builders, and seeded synthetic corpus/instance generators."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from lpformulate import ir
from lpformulate.augment import render_problem_text
from lpformulate.canonical import (
    SENSE_GE,
    SENSE_LE,
    CanonicalLP,
    CanonicalRow,
    ObjectiveRow,
)

# ---------------------------------------------------------------------------
# gold/prediction formulation dicts


WAREHOUSE_GOLD = {
    "obj_declaration": {
        "type": "objective",
        "direction": "maximize",
        "name": "profit",
        "terms": {"rafts": "45", "kayaks": "55"},
    },
    "const_declarations": [
        {
            "type": "linear",
            "direction": "at most",
            "limit": "400",
            "terms": {"rafts": "10", "kayaks": "12"},
            "operator": "LESS_OR_EQUAL",
        },
        {
            "type": "linear",
            "direction": "at most",
            "limit": "$10000",
            "terms": {"rafts": "200", "kayaks": "250"},
            "operator": "LESS_OR_EQUAL",
        },
        {
            "type": "ratio",
            "direction": "at least",
            "limit": "0.55",
            "var": "rafts",
            "operator": "GREATER_OR_EQUAL",
        },
    ],
    "vars": ["rafts", "kayaks"],
}

SEATS_GOLD = {
    "obj_declaration": {
        "type": "objective",
        "direction": "maximize",
        "name": "profit",
        "terms": {"AC seat": "50", "non-AC seat": "30"},
    },
    "const_declarations": [
        {
            "type": "lowerbound",
            "direction": "at least",
            "limit": "100",
            "var": "AC seats",
            "operator": "GREATER_OR_EQUAL",
        },
        {
            "type": "xby",
            "x_var": "non-AC seats",
            "direction": "minimum",
            "param": "2",
            "y_var": "AC seats",
            "operator": "GREATER_OR_EQUAL",
        },
    ],
    "vars": ["AC seats", "non-AC seats"],
}

# the prediction adds a sum cap the gold is missing; it also carries a stray key
SEATS_PRED = {
    "obj_declaration": {
        "type": "objective",
        "direction": "maximize",
        "name": "profit",
        "terms": {"AC seat": "50", "non-AC seat": "30"},
    },
    "const_declarations": [
        {
            "type": "sum",
            "direction": "at most",
            "limit": "500",
            "operator": "LESS_OR_EQUAL",
        },
        {
            "type": "lowerbound",
            "direction": "at least",
            "limit": "100",
            "var": "AC seats",
            "operator": "GREATER_OR_EQUAL",
        },
        {
            "type": "xby",
            "x_var": "non-AC seats",
            "direction": "minimum",
            "param": "2",
            "y_var": "AC seats",
            "operator": "GREATER_OR_EQUAL",
        },
    ],
    "vars": ["AC seats", "non-AC seats"],
    "id": "-996226930",
}

DENTAL_GOLD = {
    "obj_declaration": {
        "type": "objvar",
        "direction": "minimize",
        "name": "total number of shifts",
        "vars": ["dentists", "oral hygienists"],
    },
    "const_declarations": [
        {
            "type": "linear",
            "direction": "require",
            "limit": "1000",
            "terms": {"Dentists": "12", "oral hygienists": "5"},
            "operator": "GREATER_OR_EQUAL",
        },
        {
            "type": "sum",
            "direction": "at least",
            "limit": "20",
            "operator": "GREATER_OR_EQUAL",
        },
        {
            "type": "linear",
            "direction": "budget",
            "limit": "65000",
            "terms": {"dentists": "900", "oral hygienists": "250"},
            "operator": "LESS_OR_EQUAL",
        },
    ],
    "vars": ["dentists", "oral hygienists"],
}

# the two linear limits land on the wrong rows
DENTAL_PRED_SWAPPED = {
    "obj_declaration": {
        "type": "objvar",
        "direction": "minimize",
        "name": "total number of shifts",
        "vars": ["dentists", "oral hygienists"],
    },
    "const_declarations": [
        {
            "type": "linear",
            "direction": "budget",
            "limit": "65000",
            "terms": {"Dentists": "12", "oral hygienists": "5"},
            "operator": "LESS_OR_EQUAL",
        },
        {
            "type": "sum",
            "direction": "at least",
            "limit": "20",
            "operator": "GREATER_OR_EQUAL",
        },
        {
            "type": "linear",
            "direction": "require",
            "limit": "1000",
            "terms": {"Dentists": "900", "oral hygienists": "250"},
            "operator": "GREATER_OR_EQUAL",
        },
    ],
    "vars": ["dentists", "oral hygienists"],
}

STORES_GOLD = {
    "obj_declaration": {
        "type": "objvar",
        "direction": "minimize",
        "name": "total number of stores",
        "vars": ["film-based", "electrical-based stores"],
    },
    "const_declarations": [
        {
            "type": "xby",
            "x_var": "electrical-based stores",
            "direction": "at least",
            "param": "two",
            "y_var": "film-based stores",
            "operator": "GREATER_OR_EQUAL",
        },
        {
            "type": "lowerbound",
            "direction": "at least",
            "limit": "5",
            "var": "film-based stores",
            "operator": "GREATER_OR_EQUAL",
        },
        {
            "type": "linear",
            "direction": "at least",
            "limit": "170",
            "terms": {"Film-based stores": "2", "electrical-based store": "four"},
            "operator": "GREATER_OR_EQUAL",
        },
        {
            "type": "linear",
            "direction": "at most",
            "limit": "600",
            "terms": {"electric-based stores": "15", "Film-based stores": "10"},
            "operator": "LESS_OR_EQUAL",
        },
    ],
    "vars": ["film-based", "electrical-based stores"],
}

# drops the first (multiplier) constraint entirely
STORES_PRED_MISSING = {
    "obj_declaration": STORES_GOLD["obj_declaration"],
    "const_declarations": STORES_GOLD["const_declarations"][1:],
    "vars": ["film-based", "electrical-based stores"],
    "id": "-1194187124",
}

STORES_MAPPING = {
    "film-based stores": "film-based",
    "film-based store": "film-based",
    "Film-based stores": "film-based",
    "electrical-based store": "electrical-based stores",
    "electric-based stores": "electrical-based stores",
}

ADS_GOLD = {
    "obj_declaration": {
        "type": "objective",
        "direction": "maximize",
        "name": "viewers",
        "terms": {"magazine ad": "10000", "flyer": "5000", "billboard ad": "25000"},
    },
    "const_declarations": [
        {
            "type": "sum",
            "direction": "at most",
            "limit": "50",
            "operator": "LESS_OR_EQUAL",
        }
    ],
    "vars": ["magazine ad", "flyer", "billboard ad"],
}

# one objective term dropped
ADS_PRED_MISSING_TERM = {
    "obj_declaration": {
        "type": "objective",
        "direction": "maximize",
        "name": "viewers",
        "terms": {"flyer": "5000", "billboard ad": "25000"},
    },
    "const_declarations": ADS_GOLD["const_declarations"],
    "vars": ["magazine ad", "flyer", "billboard ad"],
}


# ---------------------------------------------------------------------------
# record builders


def spans_for(text: str, items: list[tuple[str, str]]) -> list[dict]:
    """Locate each (surface, label) in the text, advancing per surface."""
    spans = []
    cursor: dict[str, int] = {}
    for surface, label in items:
        start = text.find(surface, cursor.get(surface, 0))
        if start < 0:
            start = text.find(surface)
        assert start >= 0, f"{surface!r} not found in fixture text"
        cursor[surface] = start + 1
        spans.append(
            {"start": start, "end": start + len(surface), "label": label,
             "surface": surface}
        )
    return spans


def tagged_items_for_gold(f: ir.Formulation) -> list[tuple[str, str]]:
    """Span inventory mirroring a gold formulation's own quantities."""
    items: list[tuple[str, str]] = []
    for con in f.constraints:
        phrase = "at most" if con.operator == "LESS_OR_EQUAL" else "at least"
        items.append((phrase, "CONST_DIR"))
        if con.limit is not None:
            items.append((con.limit.source_text, "LIMIT"))
        for q in (con.terms or {}).values():
            items.append((q.source_text, "PARAM"))
        if con.param is not None:
            items.append((con.param.source_text, "PARAM"))
    for obj in f.objectives:
        for q in (obj.terms or {}).values():
            items.append((q.source_text, "PARAM"))
    return items


def make_record(rec_id: str, gold_dict: dict, mapping: dict | None = None) -> ir.ProblemRecord:
    """Record whose text and spans are derived from its own gold IR."""
    gold = ir.formulation_from_dict(gold_dict)
    text = render_problem_text(gold)
    spans = spans_for(text, tagged_items_for_gold(gold))
    return ir.record_from_dict(
        {
            "id": rec_id,
            "text": text,
            "spans": spans,
            "variable_order": list(gold.vars),
            "entity_mapping": mapping or {},
            "gold": gold_dict,
        }
    )


@pytest.fixture(scope="session")
def warehouse_record() -> ir.ProblemRecord:
    return make_record("warehouse", WAREHOUSE_GOLD)


@pytest.fixture(scope="session")
def seats_record() -> ir.ProblemRecord:
    return make_record("seats", SEATS_GOLD)


@pytest.fixture(scope="session")
def dental_record() -> ir.ProblemRecord:
    return make_record("dental", DENTAL_GOLD)


@pytest.fixture(scope="session")
def stores_record() -> ir.ProblemRecord:
    return make_record("stores", STORES_GOLD, STORES_MAPPING)


@pytest.fixture(scope="session")
def ads_record() -> ir.ProblemRecord:
    return make_record("ads", ADS_GOLD)


def all_fixture_records() -> list[ir.ProblemRecord]:
    return [
        make_record("warehouse", WAREHOUSE_GOLD),
        make_record("seats", SEATS_GOLD),
        make_record("dental", DENTAL_GOLD),
        make_record("stores", STORES_GOLD, STORES_MAPPING),
        make_record("ads", ADS_GOLD),
    ]


# ---------------------------------------------------------------------------
# synthetic data


_VAR_POOL = [
    "standard crates",
    "premium crates",
    "bulk pallets",
    "light trucks",
    "heavy trucks",
    "day shifts",
    "night shifts",
]


def synth_gold(rng: random.Random, rich: bool = False) -> dict:
    """A random valid single-objective gold IR. With rich=True the problem
    carries more than three linear constraints (multi-objective eligible).

    Clean by construction: no duplicate rows, no all-equal objective
    coefficients, type-consistent operators, so the repair pass is a no-op.
    """
    n = rng.randint(2, 3)
    names = rng.sample(_VAR_POOL, n)
    constraints: list[dict] = []

    n_linear = rng.randint(4, 5) if rich else rng.randint(1, 2)
    limits = rng.sample(range(50, 500), n_linear)
    for limit in limits:
        terms = {v: str(rng.randint(2, 20)) for v in names}
        constraints.append(
            {
                "type": "linear",
                "direction": "at most",
                "limit": str(limit),
                "terms": terms,
                "operator": "LESS_OR_EQUAL",
            }
        )
    if rng.random() < 0.6:
        constraints.append(
            {
                "type": "sum",
                "direction": "at most",
                "limit": str(rng.randint(20, 120)),
                "operator": "LESS_OR_EQUAL",
            }
        )
    if rng.random() < 0.5:
        constraints.append(
            {
                "type": "lowerbound",
                "direction": "at least",
                "limit": str(rng.randint(1, 5)),
                "var": rng.choice(names),
                "operator": "GREATER_OR_EQUAL",
            }
        )
    if rng.random() < 0.4:
        x, y = rng.sample(names, 2)
        constraints.append(
            {
                "type": "xby",
                "direction": "at least",
                "param": str(rng.randint(1, 3)),
                "x_var": x,
                "y_var": y,
                "operator": "GREATER_OR_EQUAL",
            }
        )
    if rng.random() < 0.3:
        constraints.append(
            {
                "type": "ratio",
                "direction": "at most",
                "limit": f"0.{rng.randint(2, 8)}",
                "var": rng.choice(names),
                "operator": "LESS_OR_EQUAL",
            }
        )
    rng.shuffle(constraints)

    if rng.random() < 0.25:
        objective = {
            "type": "objvar",
            "direction": "minimize",
            "name": "total count",
            "vars": names,
        }
    else:
        coeffs = rng.sample(range(2, 31), n)
        objective = {
            "type": "objective",
            "direction": "maximize",
            "name": "payoff",
            "terms": {v: str(c) for v, c in zip(names, coeffs)},
        }
    return {
        "obj_declaration": objective,
        "const_declarations": constraints,
        "vars": names,
    }


def synth_corpus(count: int, seed: int, rich_fraction: float = 0.0) -> list[ir.ProblemRecord]:
    rng = random.Random(seed)
    records = []
    for i in range(count):
        rich = rng.random() < rich_fraction
        records.append(make_record(f"synth-{i:04d}", synth_gold(rng, rich)))
    return records


def random_instance(rng: random.Random) -> CanonicalLP:
    """Random small integer instance whose feasible region sits inside the
    [0, 50] box: 2-5 free-form rows plus the box rows themselves."""
    n = rng.randint(2, 3)
    names = tuple(f"v{i}" for i in range(n))
    rows = []
    for _ in range(rng.randint(2, 5)):
        coeffs = tuple(Fraction(rng.randint(-20, 20)) for _ in range(n))
        sense = rng.choice((SENSE_LE, SENSE_GE))
        rhs = Fraction(rng.randint(-20, 20))
        rows.append(CanonicalRow(coeffs, sense, rhs))
    for i in range(n):
        unit = tuple(Fraction(1 if j == i else 0) for j in range(n))
        rows.append(CanonicalRow(unit, SENSE_LE, Fraction(50)))
    objective = ObjectiveRow(
        tuple(Fraction(rng.randint(-20, 20)) for _ in range(n)),
        rng.choice(("maximize", "minimize")),
    )
    return CanonicalLP(
        objectives=(objective,),
        rows=tuple(rows),
        variable_order=names,
        nonneg=(True,) * n,
        integral=(True,) * n,
    )
