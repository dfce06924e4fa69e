"""Runtime values and the built-in operator table.

Operators are total: ``head []`` is 0, ``tail []`` is ``[]`` and division by
zero yields 0.  Every operator is typed on erased (simple) types with the
numeric tower ``nat <: int <: real``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Optional

from . import numeric as nm
from .syntax import NUMERIC, SBOOL, SArrow, SBase, SProd, SSum, SType


@dataclass(frozen=True)
class VUnit:
    def __repr__(self) -> str:
        return "()"


UNIT = VUnit()


@dataclass(frozen=True)
class VPair:
    fst: object
    snd: object


@dataclass(frozen=True)
class VInl:
    value: object


@dataclass(frozen=True)
class VInr:
    value: object


TRUE = VInl(UNIT)
FALSE = VInr(UNIT)


class EvalError(Exception):
    """A ground term could not be evaluated (unbound name, bad argument...)."""


class OpTypeError(Exception):
    pass


def vbool(b: bool):
    return TRUE if b else FALSE


def truthy(v) -> bool:
    if type(v) is VInl:
        return True
    if type(v) is VInr:
        return False
    raise EvalError(f"expected a boolean, got {v!r}")


# ---------------------------------------------------------------------------
# Implementations


def _pair(v):
    if type(v) is not VPair:
        raise EvalError(f"expected a pair, got {v!r}")
    return v.fst, v.snd


def _num(v):
    if not nm.is_real(v):
        raise EvalError(f"expected a number, got {v!r}")
    return v


def _list(v):
    if type(v) is not tuple:
        raise EvalError(f"expected a list, got {v!r}")
    return v


def _bin(f):
    def go(v):
        a, b = _pair(v)
        return f(_num(a), _num(b))
    return go


def _cdf(theta, l):
    return sum(1 for x in l if nm.le(x, theta))


def _maxdev(v):
    ncdf, rest = _pair(v)
    bkts, db = _pair(rest)
    worst = 0
    for i, (n, th) in enumerate(zip(_list(ncdf), _list(bkts))):
        worst = nm.rmax(worst, nm.rabs(nm.sub(n, _cdf(th, _list(db)))))
    return worst


def _eq(v):
    a, b = _pair(v)
    return vbool(values_equal(a, b))


def values_equal(a, b) -> bool:
    if nm.is_real(a) and nm.is_real(b):
        return nm.eq(a, b)
    if type(a) is not type(b):
        return False
    if type(a) is VPair:
        return values_equal(a.fst, b.fst) and values_equal(a.snd, b.snd)
    if type(a) in (VInl, VInr):
        return values_equal(a.value, b.value)
    if type(a) is tuple:
        return len(a) == len(b) and all(values_equal(x, y) for x, y in zip(a, b))
    return a == b


def _head(v):
    l = _list(v)
    return l[0] if l else 0


def _lhead(v):
    l = _list(v)
    return l[0] if l else ()


def _cons(v):
    x, l = _pair(v)
    return (x,) + _list(l)


def _and(v):
    a, b = _pair(v)
    return vbool(truthy(a) and truthy(b))


def _or(v):
    a, b = _pair(v)
    return vbool(truthy(a) or truthy(b))


IMPLS: Dict[str, Callable] = {
    "+": _bin(nm.add),
    "-": _bin(nm.sub),
    "*": _bin(nm.mul),
    "/": _bin(nm.div),
    "min": _bin(nm.rmin),
    "max": _bin(nm.rmax),
    "neg": lambda v: nm.neg(_num(v)),
    "abs": lambda v: nm.rabs(_num(v)),
    "exp": lambda v: nm.exp(_num(v)),
    "=": _eq,
    "<=": lambda v: vbool(nm.le(*map(_num, _pair(v)))),
    "<": lambda v: vbool(nm.lt(*map(_num, _pair(v)))),
    "not": lambda v: vbool(not truthy(v)),
    "and": _and,
    "or": _or,
    "iv": lambda v: 1 if truthy(v) else 0,
    "len": lambda v: len(_list(v)),
    "head": _head,
    "lhead": _lhead,
    "tail": lambda v: _list(v)[1:],
    "cons": _cons,
    "nil": lambda v: (),
    "lnil": lambda v: (),
    "cdf": lambda v: _cdf(*_pair(v)),
    "filter_le": lambda v: (lambda th, l: tuple(x for x in _list(l) if nm.le(x, th)))(*_pair(v)),
    "maxdev": _maxdev,
}

# ops whose result is a boolean described by an atomic formula
BOOL_OPS = ("=", "<=", "<", "not", "and", "or")

# ---------------------------------------------------------------------------
# Simple typing


def is_num(s: SType) -> bool:
    return isinstance(s, SBase) and s.name in NUMERIC


def num_join(a: SType, b: SType) -> SType:
    rank = {"nat": 0, "int": 1, "real": 2}
    return a if rank[a.name] >= rank[b.name] else b


def compatible(a: SType, b: SType) -> bool:
    """Equality of simple types up to the numeric tower."""
    if is_num(a) and is_num(b):
        return True
    if type(a) is not type(b):
        return False
    if isinstance(a, SBase):
        return a.name == b.name
    if isinstance(a, (SProd, SSum)):
        return compatible(a.left, b.left) and compatible(a.right, b.right)
    if isinstance(a, SArrow):
        return compatible(a.dom, b.dom) and compatible(a.cod.result, b.cod.result)
    return a == b


def subsumes(sub: SType, sup: SType) -> bool:
    """Whether a value of simple type ``sub`` may be used at ``sup``.

    real never converts to int or nat; int converts to nat only through a
    refinement obligation, so it is allowed here.
    """
    if is_num(sub) and is_num(sup):
        return not (sub.name == "real" and sup.name != "real")
    if type(sub) is not type(sup):
        return False
    if isinstance(sub, SBase):
        return sub.name == sup.name
    if isinstance(sub, (SProd, SSum)):
        return subsumes(sub.left, sup.left) and subsumes(sub.right, sup.right)
    if isinstance(sub, SArrow):
        return subsumes(sup.dom, sub.dom) and subsumes(sub.cod.result, sup.cod.result)
    return sub == sup


NAT, INT, REAL = SBase("nat"), SBase("int"), SBase("real")
LIST, LLIST, UNIT_T = SBase("list"), SBase("list_list"), SBase("unit")


def _need(cond: bool, op: str, arg: SType):
    if not cond:
        from .syntax import pretty
        raise OpTypeError(f"operator {op!r} does not accept an argument of type {pretty(arg)}")


def op_result(op: str, arg: SType) -> SType:
    """Simple result type of ``op`` applied to an argument of type ``arg``."""
    if op not in IMPLS:
        raise OpTypeError(f"unknown operator {op!r}")
    if op in ("+", "*", "min", "max", "-", "/", "<=", "<"):
        _need(isinstance(arg, SProd) and is_num(arg.left) and is_num(arg.right), op, arg)
        if op in ("<=", "<"):
            return SBOOL
        j = num_join(arg.left, arg.right)
        if op == "-" and j.name == "nat":
            return INT
        return REAL if op == "/" else j
    if op in ("neg", "abs", "exp"):
        _need(is_num(arg), op, arg)
        if op == "exp":
            return REAL
        if op == "abs":
            return NAT if arg.name != "real" else REAL
        return INT if arg.name != "real" else REAL
    if op == "=":
        _need(isinstance(arg, SProd) and compatible(arg.left, arg.right)
              and not _has_arrow(arg), op, arg)
        return SBOOL
    if op == "not":
        _need(compatible(arg, SBOOL), op, arg)
        return SBOOL
    if op in ("and", "or"):
        _need(isinstance(arg, SProd) and compatible(arg.left, SBOOL)
              and compatible(arg.right, SBOOL), op, arg)
        return SBOOL
    if op == "iv":
        _need(compatible(arg, SBOOL), op, arg)
        return NAT
    if op == "len":
        _need(arg in (LIST, LLIST), op, arg)
        return NAT
    if op == "head":
        _need(arg == LIST, op, arg)
        return REAL
    if op == "lhead":
        _need(arg == LLIST, op, arg)
        return LIST
    if op == "tail":
        _need(arg in (LIST, LLIST), op, arg)
        return arg
    if op == "cons":
        _need(isinstance(arg, SProd) and ((is_num(arg.left) and arg.right == LIST)
                                          or (arg.left == LIST and arg.right == LLIST)), op, arg)
        return arg.right
    if op in ("nil", "lnil"):
        _need(arg == UNIT_T, op, arg)
        return LIST if op == "nil" else LLIST
    if op in ("cdf", "filter_le"):
        _need(isinstance(arg, SProd) and is_num(arg.left) and arg.right == LIST, op, arg)
        return NAT if op == "cdf" else LIST
    if op == "maxdev":
        _need(isinstance(arg, SProd) and arg.left == LIST and isinstance(arg.right, SProd)
              and arg.right.left == LIST and arg.right.right == LIST, op, arg)
        return REAL
    raise OpTypeError(f"unknown operator {op!r}")


def _has_arrow(s: SType) -> bool:
    if isinstance(s, SArrow):
        return True
    if isinstance(s, (SProd, SSum)):
        return _has_arrow(s.left) or _has_arrow(s.right)
    return False


PREDICATES = ("=", "<=", "<")


def pred_check(pred: str, arg: SType) -> None:
    """Simple-type check of a formula atom."""
    if pred == "=":
        op_result("=", arg)
    elif pred in ("<=", "<"):
        op_result(pred, arg)
    else:
        raise OpTypeError(f"unknown predicate {pred!r}")


def base_member(value, base: str) -> bool:
    """Whether a runtime value inhabits a base type."""
    if base == "unit":
        return value is UNIT
    if base == "real":
        return nm.is_real(value)
    if base in ("int", "nat"):
        integral = (isinstance(value, int) and not isinstance(value, bool)) or \
            (isinstance(value, Fraction) and value.denominator == 1)
        return integral and (base == "int" or value >= 0)
    if base == "event":
        return isinstance(value, str)
    if base == "list":
        return type(value) is tuple and all(nm.is_real(x) for x in value)
    if base == "list_list":
        return type(value) is tuple and all(type(x) is tuple for x in value)
    return False


def literal_base(value) -> str:
    if isinstance(value, str):
        return "event"
    if isinstance(value, int):
        return "nat" if value >= 0 else "int"
    return "real"


def coerce(value, base: str):
    """Normalize a number for storage at a base type (Fractions with unit denominator become ints)."""
    if isinstance(value, Fraction) and value.denominator == 1:
        return int(value)
    return value
