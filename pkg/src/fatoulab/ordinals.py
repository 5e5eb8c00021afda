"""Ordinal notations below epsilon_0 in Cantor normal form.

An ordinal is a finite sum ``w^e1*c1 + ... + w^ek*ck`` with exponents
``e1 > e2 > ... > ek`` (themselves ordinals) and positive integer
coefficients; the empty sum is 0.  Normal forms are unique, so structural
equality decides ordinal equality and comparison is lexicographic.

Values are immutable and hashable; all operations are pure.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from functools import total_ordering


class Comparison(Enum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


class OrdinalKind(Enum):
    ZERO = "zero"
    SUCCESSOR = "successor"
    LIMIT = "limit"


class NotationError(ValueError):
    """Malformed ordinal notation (bad normal form or unparsable string)."""


@total_ordering
@dataclass(frozen=True)
class Ordinal:
    """Cantor normal form: tuple of (exponent, coefficient) terms."""

    terms: tuple[tuple["Ordinal", int], ...] = ()

    def __post_init__(self) -> None:
        prev = None
        for exp, coeff in self.terms:
            if not isinstance(exp, Ordinal) or not isinstance(coeff, int):
                raise NotationError(f"bad term ({exp!r}, {coeff!r})")
            if coeff < 1:
                raise NotationError(f"coefficient {coeff} must be >= 1")
            if prev is not None and compare(exp, prev) is not Comparison.LESS:
                raise NotationError("exponents must be strictly decreasing")
            prev = exp

    # -- constructors ------------------------------------------------------

    @staticmethod
    def from_int(n: int) -> "Ordinal":
        if n < 0:
            raise NotationError("ordinals are nonnegative")
        if n == 0:
            return ZERO
        return Ordinal(((ZERO, n),))

    # -- structure ---------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_finite(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and self.terms[0][0].is_zero)

    def to_int(self) -> int:
        if self.is_zero:
            return 0
        if not self.is_finite:
            raise NotationError(f"{self} is infinite")
        return self.terms[0][1]

    def kind(self) -> OrdinalKind:
        if not self.terms:
            return OrdinalKind.ZERO
        if self.terms[-1][0].is_zero:
            return OrdinalKind.SUCCESSOR
        return OrdinalKind.LIMIT

    def predecessor(self) -> "Ordinal":
        if self.kind() is not OrdinalKind.SUCCESSOR:
            raise NotationError(f"{self} is not a successor")
        exp, coeff = self.terms[-1]
        if coeff > 1:
            return Ordinal(self.terms[:-1] + ((exp, coeff - 1),))
        return Ordinal(self.terms[:-1])

    # -- comparisons -------------------------------------------------------

    def __lt__(self, other: "Ordinal") -> bool:
        return compare(self, other) is Comparison.LESS

    # -- rendering ---------------------------------------------------------

    def __str__(self) -> str:
        return format_short(self)

    def __repr__(self) -> str:
        return f"Ordinal[{format_short(self)}]"


ZERO = Ordinal()
ONE = Ordinal(((ZERO, 1),))
OMEGA = Ordinal(((ONE, 1),))


def compare(a: Ordinal, b: Ordinal) -> Comparison:
    """Total order on CNF notations, lexicographic in (exponent, coefficient)."""
    for (ea, ca), (eb, cb) in zip(a.terms, b.terms):
        ce = compare(ea, eb)
        if ce is not Comparison.EQUAL:
            return ce
        if ca != cb:
            return Comparison.LESS if ca < cb else Comparison.GREATER
    if len(a.terms) == len(b.terms):
        return Comparison.EQUAL
    # the longer notation adds strictly smaller summands, hence is larger
    return Comparison.LESS if len(a.terms) < len(b.terms) else Comparison.GREATER


def successor(a: Ordinal) -> Ordinal:
    """a + 1 in normal form."""
    if a.terms and a.terms[-1][0].is_zero:
        exp, coeff = a.terms[-1]
        return Ordinal(a.terms[:-1] + ((exp, coeff + 1),))
    return Ordinal(a.terms + ((ZERO, 1),))


def classify(a: Ordinal) -> tuple[OrdinalKind, Ordinal | None]:
    """(kind, predecessor), predecessor present only for successors."""
    k = a.kind()
    return k, (a.predecessor() if k is OrdinalKind.SUCCESSOR else None)


def fundamental_sequence(a: Ordinal, n: int) -> Ordinal:
    """n-th entry of the canonical increasing sequence with supremum ``a``.

    For ``g + w^(b+1)`` the entry is ``g + w^b * n``; for ``g + w^l`` with
    ``l`` a limit it is ``g + w^fs(l, n)``.  Deterministic by construction,
    strictly increasing in ``n``, always below ``a``.
    """
    if n < 1:
        raise NotationError("index must be >= 1")
    if a.kind() is not OrdinalKind.LIMIT:
        raise NotationError(f"{a} is not a limit ordinal")
    exp, coeff = a.terms[-1]
    head = a.terms[:-1] if coeff == 1 else a.terms[:-1] + ((exp, coeff - 1),)
    ek, _ = classify(exp)
    if ek is OrdinalKind.SUCCESSOR:
        return Ordinal(head + ((exp.predecessor(), n),))
    return Ordinal(head + ((fundamental_sequence(exp, n), 1),))


# -- shorthand strings -----------------------------------------------------

_TOKEN = re.compile(r"\s*(w|\d+|\^|\*|\+|\(|\))")


def parse_short(text: str) -> Ordinal:
    """Parse shorthand such as ``w^2*3+w+5`` or ``w^(w+1)*2``."""
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise NotationError(f"cannot parse ordinal at ...{text[pos:]!r}")
            break
        tokens.append(m.group(1))
        pos = m.end()
    if not tokens:
        raise NotationError("empty ordinal string")
    result, rest = _parse_sum(tokens)
    if rest:
        raise NotationError(f"trailing tokens {rest!r}")
    return result


def _parse_sum(tokens: list[str]) -> tuple[Ordinal, list[str]]:
    terms: list[tuple[Ordinal, int]] = []
    while True:
        exp, coeff, tokens = _parse_term(tokens)
        if coeff:
            if terms and compare(exp, terms[-1][0]) is not Comparison.LESS:
                raise NotationError("terms must appear with strictly decreasing exponents")
            terms.append((exp, coeff))
        if tokens and tokens[0] == "+":
            tokens = tokens[1:]
            continue
        return Ordinal(tuple(terms)), tokens


def _parse_term(tokens: list[str]) -> tuple[Ordinal, int, list[str]]:
    if not tokens:
        raise NotationError("expected a term")
    tok, tokens = tokens[0], tokens[1:]
    if tok.isdigit():
        return ZERO, int(tok), tokens
    if tok != "w":
        raise NotationError(f"unexpected token {tok!r}")
    exp = ONE
    if tokens and tokens[0] == "^":
        tokens = tokens[1:]
        if not tokens:
            raise NotationError("dangling '^'")
        if tokens[0] == "(":
            depth, idx = 1, 1
            while idx < len(tokens) and depth:
                if tokens[idx] == "(":
                    depth += 1
                elif tokens[idx] == ")":
                    depth -= 1
                idx += 1
            if depth:
                raise NotationError("unbalanced parentheses")
            exp, rest = _parse_sum(tokens[1 : idx - 1])
            if rest:
                raise NotationError("trailing tokens inside parentheses")
            tokens = tokens[idx:]
        elif tokens[0].isdigit():
            exp = Ordinal.from_int(int(tokens[0]))
            tokens = tokens[1:]
        elif tokens[0] == "w":
            exp = OMEGA
            tokens = tokens[1:]
            if tokens and tokens[0] == "^":
                raise NotationError("nested exponents need parentheses, e.g. w^(w^2)")
        else:
            raise NotationError(f"bad exponent token {tokens[0]!r}")
    coeff = 1
    if tokens and tokens[0] == "*":
        if len(tokens) < 2 or not tokens[1].isdigit():
            raise NotationError("'*' must be followed by an integer")
        coeff = int(tokens[1])
        tokens = tokens[2:]
    return exp, coeff, tokens


def format_short(a: Ordinal) -> str:
    if a.is_zero:
        return "0"
    parts = []
    for exp, coeff in a.terms:
        if exp.is_zero:
            parts.append(str(coeff))
            continue
        if exp == ONE:
            piece = "w"
        elif exp.is_finite:
            piece = f"w^{exp.to_int()}"
        elif exp == OMEGA:
            piece = "w^w"
        else:
            piece = f"w^({format_short(exp)})"
        if coeff != 1:
            piece += f"*{coeff}"
        parts.append(piece)
    return "+".join(parts)


# -- JSON ------------------------------------------------------------------


def to_json(a: Ordinal) -> list:
    """Nested-array encoding: [[exponent, coefficient], ...], 0 is []."""
    return [[to_json(exp), coeff] for exp, coeff in a.terms]


def from_json(data) -> Ordinal:
    if not isinstance(data, list):
        raise NotationError(f"ordinal JSON must be a list, got {type(data).__name__}")
    terms = []
    for item in data:
        if not (isinstance(item, list) and len(item) == 2):
            raise NotationError(f"bad ordinal term {item!r}")
        exp, coeff = item
        terms.append((from_json(exp), coeff))
    return Ordinal(tuple(terms))
