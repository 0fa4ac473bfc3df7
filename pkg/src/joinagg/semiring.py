"""Commutative semirings used to annotate tuples.

Engine code only ever copies annotations or combines them with ``plus`` and
``times``.  Nothing in the engine compares two annotations.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Any, Callable, Iterable

Element = Any


@dataclass(frozen=True)
class Semiring:
    name: str
    zero: Element
    one: Element
    plus: Callable[[Element, Element], Element]
    times: Callable[[Element, Element], Element]
    parse: Callable[[str], Element] = field(repr=False, default=str)
    format: Callable[[Element], str] = field(repr=False, default=str)


def fold_plus(elements: Iterable[Element], sr: Semiring) -> Element:
    return reduce(sr.plus, elements, sr.zero)


def fold_times(elements: Iterable[Element], sr: Semiring) -> Element:
    return reduce(sr.times, elements, sr.one)


def _parse_count(text: str) -> int:
    value = int(text)
    if value < 0:
        raise ValueError(f"counting annotation must be non-negative: {text!r}")
    return value


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1"):
        return True
    if lowered in ("false", "0"):
        return False
    raise ValueError(f"boolean annotation must be true/false: {text!r}")


def _format_bool(value: bool) -> str:
    return "true" if value else "false"


def _parse_rational(text: str) -> Fraction:
    return Fraction(text.strip())


def _parse_nonneg_rational(text: str) -> Fraction:
    value = Fraction(text.strip())
    if value < 0:
        raise ValueError(f"max-product annotation must be non-negative: {text!r}")
    return value


def _format_rational(value: Fraction) -> str:
    # finite decimals print as decimals, everything else as p/q
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{value.numerator}/{value.denominator}"
    digits = max(twos, fives)
    scaled = value * 10**digits
    sign = "-" if scaled < 0 else ""
    whole, frac = divmod(abs(scaled.numerator), 10**digits)
    return f"{sign}{whole}.{frac:0{digits}d}"


def _max(a: Element, b: Element) -> Element:
    return a if a >= b else b


COUNTING = Semiring("counting", 0, 1, operator.add, operator.mul, _parse_count, str)
BOOLEAN = Semiring(
    "boolean", False, True, operator.or_, operator.and_, _parse_bool, _format_bool
)
MAX_PRODUCT = Semiring(
    "maxprod",
    Fraction(0),
    Fraction(1),
    _max,
    operator.mul,
    _parse_nonneg_rational,
    _format_rational,
)
SUM_PRODUCT = Semiring(
    "sumprod",
    Fraction(0),
    Fraction(1),
    operator.add,
    operator.mul,
    _parse_rational,
    _format_rational,
)

SEMIRINGS: dict[str, Semiring] = {
    sr.name: sr for sr in (COUNTING, BOOLEAN, MAX_PRODUCT, SUM_PRODUCT)
}
# accepted aliases on the command line
SEMIRINGS["tropical"] = MAX_PRODUCT
SEMIRINGS["rational"] = SUM_PRODUCT


def get_semiring(name: str) -> Semiring:
    try:
        return SEMIRINGS[name]
    except KeyError:
        known = ", ".join(sorted(SEMIRINGS))
        raise ValueError(f"unknown semiring {name!r} (known: {known})") from None


class OpCounter:
    """Mutable tally of plus/times invocations."""

    def __init__(self) -> None:
        self.plus = 0
        self.times = 0

    @property
    def total(self) -> int:
        return self.plus + self.times


def instrumented(sr: Semiring) -> tuple[Semiring, OpCounter]:
    """Wrap ``sr`` so every plus/times call is counted."""
    counter = OpCounter()
    base_plus, base_times = sr.plus, sr.times

    def plus(a: Element, b: Element) -> Element:
        counter.plus += 1
        return base_plus(a, b)

    def times(a: Element, b: Element) -> Element:
        counter.times += 1
        return base_times(a, b)

    wrapped = Semiring(
        f"instrumented-{sr.name}", sr.zero, sr.one, plus, times, sr.parse, sr.format
    )
    return wrapped, counter
