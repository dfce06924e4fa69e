"""Exact real arithmetic for grades and formulas.

Numbers are Python ``int``/``Fraction`` whenever possible.  Anything that
touches ``exp`` becomes an :class:`ExpNum`, a finite sum
``sum(c * exp(r) * X1 * ... * Xk)`` with rational ``c`` and ``r`` and optional
symbolic positive atoms ``Xi`` (used by the constraint solver to abstract
``exp`` of unenumerated variables).  Equal atoms cancel exactly; the sign of a
concrete sum is decided by outward-rounded interval evaluation, which always
terminates for nonzero sums because exponentials of distinct rationals are
linearly independent.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Tuple, Union

from mpmath import iv

Key = Tuple[Fraction, Tuple[str, ...]]


class Undecided(Exception):
    """Raised when a comparison cannot be settled exactly."""


@dataclass(frozen=True)
class ExpNum:
    terms: Tuple[Tuple[Key, Fraction], ...]

    def __repr__(self) -> str:
        parts = []
        for (r, syms), c in self.terms:
            atom = [] if r == 0 else [f"exp({r})"]
            atom += list(syms)
            coef = [] if c == 1 and atom else [fmt(c)]
            parts.append("*".join(coef + atom))
        return " + ".join(parts) if parts else "0"


Real = Union[int, Fraction, ExpNum]


def _sort_key(k: Key):
    return (k[1], k[0])


def _make(d: Dict[Key, Fraction]) -> Real:
    items = sorted(((k, c) for k, c in d.items() if c != 0), key=lambda kc: _sort_key(kc[0]))
    if not items:
        return 0
    if len(items) == 1 and items[0][0] == (Fraction(0), ()):
        c = items[0][1]
        return int(c) if c.denominator == 1 else c
    return ExpNum(tuple(items))


def _terms(x: Real) -> Dict[Key, Fraction]:
    if isinstance(x, ExpNum):
        return dict(x.terms)
    if x == 0:
        return {}
    return {(Fraction(0), ()): Fraction(x)}


def is_real(x) -> bool:
    return isinstance(x, (int, Fraction, ExpNum)) and not isinstance(x, bool)


def add(a: Real, b: Real) -> Real:
    if type(a) is not ExpNum and type(b) is not ExpNum:
        return a + b
    d = _terms(a)
    for k, c in _terms(b).items():
        d[k] = d.get(k, 0) + c
    return _make(d)


def neg(a: Real) -> Real:
    if type(a) is not ExpNum:
        return -a
    return ExpNum(tuple((k, -c) for k, c in a.terms))


def sub(a: Real, b: Real) -> Real:
    return add(a, neg(b))


def mul(a: Real, b: Real) -> Real:
    if type(a) is not ExpNum and type(b) is not ExpNum:
        return a * b
    d: Dict[Key, Fraction] = {}
    for (r1, s1), c1 in _terms(a).items():
        for (r2, s2), c2 in _terms(b).items():
            k = (r1 + r2, tuple(sorted(s1 + s2)))
            d[k] = d.get(k, 0) + c1 * c2
    return _make(d)


def div(a: Real, b: Real) -> Real:
    """Division; dividing by zero yields 0 so that ground terms stay total."""
    if type(b) is not ExpNum:
        if b == 0:
            return 0
        if type(a) is not ExpNum:
            q = Fraction(a) / Fraction(b)
            return int(q) if q.denominator == 1 else q
        return mul(a, Fraction(1) / Fraction(b))
    if len(b.terms) == 1 and not b.terms[0][0][1]:
        (r, _), c = b.terms[0]
        return mul(a, _make({(-r, ()): 1 / c}))
    raise Undecided("division by a sum of exponentials")


def exp(a: Real) -> Real:
    if type(a) is ExpNum:
        raise Undecided("exp of an exponential")
    return _make({(Fraction(a), ()): Fraction(1)})


def symbolic_atom(name: str) -> ExpNum:
    """A positive unknown standing for an abstracted ``exp`` subterm."""
    return ExpNum((((Fraction(0), (name,)), Fraction(1)),))


def _interval(x: Real, prec: int):
    iv.prec = prec
    if type(x) is not ExpNum:
        f = Fraction(x)
        return iv.mpf(f.numerator) / f.denominator
    total = iv.mpf(0)
    for (r, syms), c in x.terms:
        if syms:
            raise Undecided("symbolic atom in a concrete comparison")
        e = iv.exp(iv.mpf(r.numerator) / r.denominator)
        total += e * (iv.mpf(c.numerator) / c.denominator)
    return total


def sign(x: Real) -> int:
    """Exact sign of a concrete number."""
    if type(x) is not ExpNum:
        return (x > 0) - (x < 0)
    prec = 64
    while prec <= 8192:
        box = _interval(x, prec)
        if box.a > 0:
            return 1
        if box.b < 0:
            return -1
        prec *= 4
    raise Undecided(f"could not separate {x!r} from zero")


def _groups(x: ExpNum) -> Dict[Tuple[str, ...], Real]:
    out: Dict[Tuple[str, ...], Dict[Key, Fraction]] = {}
    for (r, syms), c in x.terms:
        out.setdefault(syms, {})[(r, ())] = c
    return {s: _make(d) for s, d in out.items()}


def nonneg_for_all(x: Real) -> bool:
    """True iff ``x >= 0`` for every positive value of its symbolic atoms.

    Atoms are treated as independent, so the check is sufficient but not
    necessary; a negative group raises :class:`Undecided`.
    """
    if type(x) is not ExpNum:
        return x >= 0
    groups = _groups(x)
    if list(groups) == [()]:
        return sign(x) >= 0
    if all(sign(c) >= 0 for c in groups.values()):
        return True
    raise Undecided("symbolic comparison depends on the abstracted atoms")


def lt(a: Real, b: Real) -> bool:
    if type(a) is not ExpNum and type(b) is not ExpNum:
        return a < b
    return sign(sub(b, a)) > 0


def le(a: Real, b: Real) -> bool:
    if type(a) is not ExpNum and type(b) is not ExpNum:
        return a <= b
    return sign(sub(b, a)) >= 0


def eq(a: Real, b: Real) -> bool:
    if type(a) is not ExpNum and type(b) is not ExpNum:
        return a == b
    return sub(a, b) == 0


def rmin(a: Real, b: Real) -> Real:
    return a if le(a, b) else b


def rmax(a: Real, b: Real) -> Real:
    return b if le(a, b) else a


def rabs(a: Real) -> Real:
    return a if sign(a) >= 0 else neg(a)


def to_float(x: Real) -> float:
    if type(x) is not ExpNum:
        return float(x)
    return float(_interval(x, 64).mid)


def parse_number(text: str) -> Real:
    f = Fraction(text)
    return int(f) if f.denominator == 1 else f


def fmt(x) -> str:
    """Stable textual rendering used in reports and the pretty-printer."""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return repr(x)
