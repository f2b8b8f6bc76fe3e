"""Exact parsing and rendering of the quantity strings found in word-problem IRs.

Gold records mix bare numerals ("400"), decimals ("0.55"), percentages
("55%"), currency ("$10000"), and number words ("two"). Everything is held
as an exact Fraction so downstream matching never suffers float drift.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import UnparseableQuantity

_CURRENCY_CHARS = "$€£¥₹"

_UNITS = {
    "zero": 0,
    "one": 1,
    "two": 2,
    "three": 3,
    "four": 4,
    "five": 5,
    "six": 6,
    "seven": 7,
    "eight": 8,
    "nine": 9,
}
_TEENS = {
    "ten": 10,
    "eleven": 11,
    "twelve": 12,
    "thirteen": 13,
    "fourteen": 14,
    "fifteen": 15,
    "sixteen": 16,
    "seventeen": 17,
    "eighteen": 18,
    "nineteen": 19,
}
_TENS = {
    "twenty": 20,
    "thirty": 30,
    "forty": 40,
    "fifty": 50,
    "sixty": 60,
    "seventy": 70,
    "eighty": 80,
    "ninety": 90,
}

_WORD_VALUES: dict[str, int] = {}
_WORD_VALUES.update(_UNITS)
_WORD_VALUES.update(_TEENS)
_WORD_VALUES.update(_TENS)
for _tens_word, _tens_value in _TENS.items():
    for _unit_word, _unit_value in _UNITS.items():
        if _unit_value == 0:
            continue
        _WORD_VALUES[f"{_tens_word} {_unit_word}"] = _tens_value + _unit_value
_WORD_VALUES["hundred"] = 100
_WORD_VALUES["a hundred"] = 100
_WORD_VALUES["one hundred"] = 100


@dataclass(frozen=True)
class Quantity:
    """An exact rational value together with the text it was read from."""

    value: Fraction
    source_text: str

    def __str__(self) -> str:
        return self.source_text


def words_to_int(text: str) -> int | None:
    """Interpret an English number word (zero through one hundred).

    Returns None when the text is not a recognized number word.
    """
    key = " ".join(text.lower().replace("-", " ").split())
    return _WORD_VALUES.get(key)


def parse_quantity(text: str) -> Quantity:
    """Parse a quantity string into an exact rational.

    Accepts integer and decimal numerals (with optional commas, sign,
    currency symbol, and exponent), plain fractions like "11/20", a
    trailing "%" (divides by 100), and number words up to one hundred.
    """
    if not isinstance(text, str) or not text.strip():
        raise UnparseableQuantity(f"empty quantity: {text!r}")
    cleaned = text.strip()
    percent = cleaned.endswith("%")
    if percent:
        cleaned = cleaned[:-1].strip()
    cleaned = cleaned.strip("".join(_CURRENCY_CHARS))
    cleaned = cleaned.replace(",", "").strip()
    if not cleaned:
        raise UnparseableQuantity(f"no digits in quantity: {text!r}")

    value: Fraction | None = None
    try:
        value = Fraction(cleaned)
    except (ValueError, ZeroDivisionError):
        word = words_to_int(cleaned)
        if word is not None:
            value = Fraction(word)
    if value is None:
        raise UnparseableQuantity(f"cannot parse quantity: {text!r}")
    if percent:
        value /= 100
    return Quantity(value=value, source_text=text)


def coerce_quantity(raw: object) -> Quantity:
    """Build a Quantity from a JSON scalar (string, int, or float)."""
    if isinstance(raw, Quantity):
        return raw
    if isinstance(raw, bool):
        raise UnparseableQuantity(f"boolean is not a quantity: {raw!r}")
    if isinstance(raw, int):
        return Quantity(Fraction(raw), str(raw))
    if isinstance(raw, float):
        # repr round-trips the float; Fraction(str) keeps decimal semantics
        return parse_quantity(repr(raw))
    if isinstance(raw, str):
        return parse_quantity(raw)
    raise UnparseableQuantity(f"cannot parse quantity: {raw!r}")


def render_value(value: Fraction) -> str:
    """Canonical text for a rational: integer, terminating decimal, or a/b."""
    if value.denominator == 1:
        return str(value.numerator)
    decimal = decimal_text(value)
    if decimal is not None:
        return decimal
    return f"{value.numerator}/{value.denominator}"


def make_quantity(value: Fraction | int) -> Quantity:
    """Quantity for a programmatically produced value."""
    frac = Fraction(value)
    return Quantity(frac, render_value(frac))


def decimal_text(value: Fraction) -> str | None:
    """Exact decimal rendering, or None when the expansion does not terminate."""
    den = value.denominator
    twos = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    fives = 0
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return None
    digits = max(twos, fives)
    if digits == 0:
        return str(value.numerator)
    scaled = value.numerator * 10**digits // value.denominator
    sign = "-" if scaled < 0 else ""
    body = str(abs(scaled)).rjust(digits + 1, "0")
    whole, frac = body[:-digits], body[-digits:]
    frac = frac.rstrip("0")
    return f"{sign}{whole}.{frac}" if frac else f"{sign}{whole}"


def quantity_candidates(q: Quantity) -> frozenset[Fraction]:
    """Values a tagged quantity may legitimately take inside an IR.

    Percent surface forms are matched both ways: "55%" may be stored as
    11/20 or as 55.
    """
    values = {q.value}
    if "%" in q.source_text:
        values.add(q.value * 100)
    return frozenset(values)


def text_witnesses(value: Fraction) -> list[str]:
    """Textual forms under which a rational can appear in generated prose."""
    forms = [render_value(value)]
    hundred = value * 100
    if hundred.denominator == 1:
        forms.append(f"{hundred.numerator}%")
    elif decimal_text(hundred) is not None:
        forms.append(f"{decimal_text(hundred)}%")
    if value.denominator == 1 and 0 <= value.numerator <= 100:
        for word, number in _WORD_VALUES.items():
            if number == value.numerator:
                forms.append(word)
    return forms


def value_in_text(value: Fraction, text: str) -> bool:
    """True when some textual form of the value occurs in the text.

    Boundaries block digits, letters, and decimal continuations ("100.5",
    "3100") but allow punctuation, so sentence-final numbers still match.
    """
    lowered = text.lower()
    for form in text_witnesses(value):
        pattern = re.escape(form.lower())
        if re.search(rf"(?<![\w.]){pattern}(?!\.?\d)(?![a-z_])", lowered):
            return True
    return False
