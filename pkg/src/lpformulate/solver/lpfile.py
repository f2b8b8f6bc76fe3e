"""Deterministic LP-format emission and parsing (CPLEX LP subset).

The emitted grammar:

    \\ Problem: <name>
    \\ Name <ident> := <original variable name>     (when mangled)
    \\ Exact <row> <ident> := <num>/<den>           (when the decimal is inexact)
    \\ Exact <row> rhs := <num>/<den>
    Maximize | Minimize
     obj: <terms>
    Subject To
     C1: <terms> (<=|>=) <number>   [\\ <note>]
    Bounds
     <ident> >= 0 | <ident> free
    General
     <ident>
    End

Identifiers are the variable names sanitized to LP-safe tokens; the Name
comments let the parser restore the originals, and the Exact comments
restore rationals whose decimal expansion does not terminate, so a
round-trip reproduces the input bit for bit.
"""

from __future__ import annotations

import re
from decimal import Decimal, InvalidOperation
from fractions import Fraction

from ..canonical import (
    SENSE_GE,
    SENSE_LE,
    CanonicalLP,
    CanonicalRow,
    ObjectiveRow,
)
from ..errors import LpSyntaxError, MultiObjectiveUnsupported
from ..quantities import decimal_text

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*")
_NUMBER_RE = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_SENSES = {"<=": SENSE_LE, "=<": SENSE_LE, "<": SENSE_LE,
           ">=": SENSE_GE, "=>": SENSE_GE, ">": SENSE_GE}


def emit_lp_file(lp: CanonicalLP, name: str = "problem") -> str:
    """Render a single-objective CanonicalLP as LP-format text."""
    if len(lp.objectives) != 1:
        raise MultiObjectiveUnsupported(
            f"LP files hold one objective, got {len(lp.objectives)}"
        )
    obj = lp.objectives[0]
    idents = _identifiers(lp.variable_order)
    exacts: list[str] = []

    obj_terms = _render_terms(obj.coefficients, idents, "obj", exacts)
    row_lines = []
    for i, row in enumerate(lp.rows):
        row_name = f"C{i + 1}"
        terms = _render_terms(row.coefficients, idents, row_name, exacts)
        rhs = _render_number(row.rhs, row_name, "rhs", exacts)
        note = " ".join(str(row.note).replace("\\", "/").split())
        comment = f"  \\ {note}" if note else ""
        row_lines.append(f" {row_name}: {terms} {row.sense} {rhs}{comment}")

    lines = [f"\\ Problem: {name}"]
    for original, ident in zip(lp.variable_order, idents):
        if original != ident:
            lines.append(f"\\ Name {ident} := {original}")
    lines.extend(exacts)
    lines.append("Maximize" if obj.direction == "maximize" else "Minimize")
    lines.append(f" obj: {obj_terms}")
    if row_lines:
        lines.append("Subject To")
        lines.extend(row_lines)
    lines.append("Bounds")
    for ident, nonneg in zip(idents, lp.nonneg):
        lines.append(f" {ident} >= 0" if nonneg else f" {ident} free")
    integral = [ident for ident, flag in zip(idents, lp.integral) if flag]
    if integral:
        lines.append("General")
        lines.extend(f" {ident}" for ident in integral)
    lines.append("End")
    return "\n".join(lines) + "\n"


def _identifiers(names: tuple[str, ...]) -> list[str]:
    idents = []
    seen = set()
    for name in names:
        ident = re.sub(r"[^A-Za-z0-9_.]+", "_", name).strip("_") or "x"
        if not re.match(r"[A-Za-z_]", ident):
            ident = "x_" + ident
        base = ident
        k = 2
        while ident in seen:
            ident = f"{base}_{k}"
            k += 1
        seen.add(ident)
        idents.append(ident)
    return idents


def _render_terms(
    coeffs: tuple[Fraction, ...],
    idents: list[str],
    row_name: str,
    exacts: list[str],
) -> str:
    parts: list[str] = []
    for coef, ident in zip(coeffs, idents):
        if coef == 0:
            continue
        text = _render_number(abs(coef), row_name, ident, exacts)
        if not parts:
            sign = "-" if coef < 0 else ""
            parts.append(f"{sign}{text} {ident}")
        else:
            parts.append(f"{'-' if coef < 0 else '+'} {text} {ident}")
    if not parts:
        # all-zero (degenerate) row: keep it visible and parseable
        return f"0 {idents[0]}"
    return " ".join(parts)


def _render_number(
    value: Fraction, row_name: str, slot: str, exacts: list[str]
) -> str:
    text = decimal_text(value)
    if text is not None:
        return text
    exacts.append(
        f"\\ Exact {row_name} {slot} := {value.numerator}/{value.denominator}"
    )
    return repr(float(value))


def parse_lp_file(text: str) -> CanonicalLP:
    """Parse the LP subset emitted above back into a CanonicalLP."""
    name_map: dict[str, str] = {}
    exact: dict[tuple[str, str], Fraction] = {}
    direction: str | None = None
    obj_tokens: list[str] = []
    rows: list[tuple[str, list[tuple[str, Fraction]], str, Fraction, str, int]] = []
    bounds_order: list[str] = []
    free_vars: set[str] = set()
    general: set[str] = set()
    section = None
    pending: list[str] = []  # buffered tokens of an unfinished row
    pending_line = 0
    pending_note: list[str] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        body, comment = _split_comment(raw)
        if comment is not None:
            _machine_comment(comment, name_map, exact)
        line = body.strip()
        if not line:
            if comment is not None and pending:
                pending_note.append(comment)
            continue

        keyword = line.lower()
        if keyword in ("maximize", "maximise", "max"):
            direction, section = "maximize", "objective"
            continue
        if keyword in ("minimize", "minimise", "min"):
            direction, section = "minimize", "objective"
            continue
        if keyword in ("subject to", "such that", "st", "s.t."):
            section = "rows"
            continue
        if keyword == "bounds":
            _flush_row(pending, pending_line, pending_note, rows)
            section = "bounds"
            continue
        if keyword in ("general", "generals", "integer", "integers"):
            _flush_row(pending, pending_line, pending_note, rows)
            section = "general"
            continue
        if keyword in ("binary", "binaries", "semi-continuous", "sos"):
            raise LpSyntaxError(lineno, f"unsupported section {line!r}")
        if keyword == "end":
            _flush_row(pending, pending_line, pending_note, rows)
            section = "done"
            continue

        if section == "objective":
            obj_tokens.extend(_tokenize(line, lineno))
        elif section == "rows":
            if not pending:
                pending_line = lineno
            pending.extend(_tokenize(line, lineno))
            if comment:
                pending_note.append(comment)
            if any(tok in _SENSES or tok == "=" for tok in pending):
                _flush_row(pending, pending_line, pending_note, rows)
        elif section == "bounds":
            _parse_bound(line, lineno, bounds_order, free_vars)
        elif section == "general":
            for tok in line.split():
                if not _IDENT_RE.fullmatch(tok):
                    raise LpSyntaxError(lineno, f"bad variable name {tok!r}")
                general.add(tok)
        elif section == "done":
            raise LpSyntaxError(lineno, "content after End")
        else:
            raise LpSyntaxError(lineno, f"unexpected line outside any section: {line!r}")

    if direction is None:
        raise LpSyntaxError(0, "missing Maximize/Minimize section")
    _flush_row(pending, pending_line, pending_note, rows)

    obj_name, obj_terms = _parse_terms_tokens(obj_tokens, 0, allow_name=True)
    parsed_rows = []
    for row_name, terms, sense, rhs, note, lineno in rows:
        parsed_rows.append((row_name, terms, sense, rhs, note, lineno))

    # variable order: the Bounds section when it covers everything referenced,
    # else first appearance
    referenced: list[str] = []
    for ident, _ in obj_terms:
        if ident not in referenced:
            referenced.append(ident)
    for _, terms, _, _, _, _ in parsed_rows:
        for ident, _ in terms:
            if ident not in referenced:
                referenced.append(ident)
    if bounds_order and all(v in bounds_order for v in referenced):
        order_idents = list(bounds_order)
    else:
        order_idents = referenced
        for v in bounds_order:
            if v not in order_idents:
                order_idents.append(v)
    if not order_idents:
        raise LpSyntaxError(0, "no variables found")
    index = {ident: i for i, ident in enumerate(order_idents)}
    n = len(order_idents)

    def build_coeffs(terms: list[tuple[str, Fraction]], row_name: str, lineno: int):
        coeffs = [Fraction(0)] * n
        for ident, coef in terms:
            if ident not in index:
                raise LpSyntaxError(lineno, f"unknown variable {ident!r}")
            override = exact.get((row_name, ident))
            coeffs[index[ident]] += override if override is not None else coef
        return tuple(coeffs)

    objective = ObjectiveRow(
        coefficients=build_coeffs(obj_terms, obj_name or "obj", 0),
        direction=direction,
    )
    canon_rows = []
    for row_name, terms, sense, rhs, note, lineno in parsed_rows:
        rhs_exact = exact.get((row_name, "rhs"))
        canon_rows.append(
            CanonicalRow(
                coefficients=build_coeffs(terms, row_name, lineno),
                sense=sense,
                rhs=rhs_exact if rhs_exact is not None else rhs,
                note=note,
            )
        )

    variable_order = tuple(name_map.get(ident, ident) for ident in order_idents)
    return CanonicalLP(
        objectives=(objective,),
        rows=tuple(canon_rows),
        variable_order=variable_order,
        nonneg=tuple(ident not in free_vars for ident in order_idents),
        integral=tuple(ident in general for ident in order_idents),
    )


def _parse_bound(
    line: str, lineno: int, bounds_order: list[str], free_vars: set[str]
) -> None:
    tokens = line.split()
    if len(tokens) == 2 and tokens[1].lower() == "free":
        ident = tokens[0]
        free_vars.add(ident)
    elif len(tokens) == 3 and tokens[1] in (">=", "=>") and tokens[2] == "0":
        ident = tokens[0]
    else:
        raise LpSyntaxError(lineno, f"unsupported bound {line!r}")
    if not _IDENT_RE.fullmatch(ident):
        raise LpSyntaxError(lineno, f"bad variable name {ident!r}")
    if ident not in bounds_order:
        bounds_order.append(ident)


def _number_to_fraction(token: str, lineno: int) -> Fraction:
    try:
        return Fraction(Decimal(token))
    except InvalidOperation as exc:
        raise LpSyntaxError(lineno, f"bad number {token!r}") from exc


def _split_comment(raw: str) -> tuple[str, str | None]:
    if "\\" in raw:
        body, comment = raw.split("\\", 1)
        return body, comment.strip()
    return raw, None


def _machine_comment(
    comment: str,
    name_map: dict[str, str],
    exact: dict[tuple[str, str], Fraction],
) -> None:
    if comment.startswith("Name ") and ":=" in comment:
        head, original = comment[5:].split(":=", 1)
        name_map[head.strip()] = original.strip()
    elif comment.startswith("Exact ") and ":=" in comment:
        head, frac = comment[6:].split(":=", 1)
        parts = head.split()
        if len(parts) == 2:
            num, den = frac.strip().split("/")
            exact[(parts[0], parts[1])] = Fraction(int(num), int(den))


def _tokenize(line: str, lineno: int) -> list[str]:
    tokens = []
    pos = 0
    while pos < len(line):
        ch = line[pos]
        if ch.isspace():
            pos += 1
            continue
        two = line[pos : pos + 2]
        if two in ("<=", ">=", "=<", "=>"):
            tokens.append(two)
            pos += 2
            continue
        if ch in "<>=+-:":
            tokens.append(ch)
            pos += 1
            continue
        m = _NUMBER_RE.match(line, pos)
        if m:
            tokens.append(m.group(0))
            pos = m.end()
            continue
        m = _IDENT_RE.match(line, pos)
        if m:
            tokens.append(m.group(0))
            pos = m.end()
            continue
        raise LpSyntaxError(lineno, f"unexpected character {ch!r}")
    return tokens


def _flush_row(
    pending: list[str],
    lineno: int,
    pending_note: list[str],
    rows: list,
) -> None:
    if not pending:
        return
    tokens = list(pending)
    pending.clear()
    note = " ".join(pending_note).strip()
    pending_note.clear()

    sense_pos = None
    for i, tok in enumerate(tokens):
        if tok in _SENSES:
            sense_pos = i
            break
        if tok == "=":
            raise LpSyntaxError(lineno, "equality rows are outside the subset")
    if sense_pos is None:
        raise LpSyntaxError(lineno, "constraint row has no sense token")
    sense = _SENSES[tokens[sense_pos]]
    rhs_tokens = tokens[sense_pos + 1 :]
    rhs = _parse_signed_number(rhs_tokens, lineno)
    row_name, terms = _parse_terms_tokens(tokens[:sense_pos], lineno, allow_name=True)
    rows.append((row_name or f"R{len(rows) + 1}", terms, sense, rhs, note, lineno))


def _parse_signed_number(tokens: list[str], lineno: int) -> Fraction:
    sign = 1
    pos = 0
    while pos < len(tokens) and tokens[pos] in "+-":
        if tokens[pos] == "-":
            sign = -sign
        pos += 1
    if pos >= len(tokens) or not _NUMBER_RE.fullmatch(tokens[pos]):
        raise LpSyntaxError(lineno, "expected a number after the sense token")
    if pos + 1 != len(tokens):
        raise LpSyntaxError(lineno, "trailing tokens after the right-hand side")
    return sign * _number_to_fraction(tokens[pos], lineno)


def _parse_terms_tokens(
    tokens: list[str], lineno: int, allow_name: bool
) -> tuple[str | None, list[tuple[str, Fraction]]]:
    name = None
    pos = 0
    if (
        allow_name
        and len(tokens) >= 2
        and tokens[1] == ":"
        and _IDENT_RE.fullmatch(tokens[0])
    ):
        name = tokens[0]
        pos = 2
    terms: list[tuple[str, Fraction]] = []
    while pos < len(tokens):
        sign = 1
        saw_sign = False
        while pos < len(tokens) and tokens[pos] in "+-":
            if tokens[pos] == "-":
                sign = -sign
            saw_sign = True
            pos += 1
        if pos >= len(tokens):
            if saw_sign:
                raise LpSyntaxError(lineno, "dangling sign at end of expression")
            break
        coef = Fraction(1)
        if _NUMBER_RE.fullmatch(tokens[pos]):
            coef = _number_to_fraction(tokens[pos], lineno)
            pos += 1
        if pos >= len(tokens) or not _IDENT_RE.fullmatch(tokens[pos]):
            raise LpSyntaxError(lineno, "expected a variable name in expression")
        terms.append((tokens[pos], sign * coef))
        pos += 1
    return name, terms
