"""Evaluation of ground terms, formulas and type predicates.

Formulas take values in one of two truth-value algebras:

* ``bool`` for the Boolean instances (cost, temporal, ubound);
* ``[0, inf]`` ordered by reverse ``<=`` for the expectation instance, where
  conjunction is ``max``, disjunction is ``min``, ``true`` is 0 and ``false`` is
  infinity.  Atoms and embedded Boolean formulas evaluate to 0 or infinity.
"""
from __future__ import annotations

from typing import Dict

from . import numeric as nm
from .prelude import IMPLS, UNIT, EvalError, VInl, VInr, VPair, truthy, values_equal
from .syntax import (And, Atom, DFun, DPair, EBasic, EMul, EOne, Embed, FFalse, FTrue, Fst,
                     Implies, Inl, Inr, Lit, OpApp, Or, Pair, RealF, RefBase, RSum, Snd, UnitV,
                     Var)


class _Inf:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "inf"

    def __reduce__(self):
        return (_Inf, ())


INF = _Inf()
_MISSING = object()


def ext_le(a, b) -> bool:
    if b is INF:
        return True
    if a is INF:
        return False
    return nm.le(a, b)


def ext_max(a, b):
    if a is INF or b is INF:
        return INF
    return nm.rmax(a, b)


def ext_min(a, b):
    if a is INF:
        return b
    if b is INF:
        return a
    return nm.rmin(a, b)


def ext_add(a, b):
    if a is INF or b is INF:
        return INF
    return nm.add(a, b)


def ext_fmt(a) -> str:
    return "inf" if a is INF else nm.fmt(a)


# ---------------------------------------------------------------------------
# Ground terms


def eval_term(t, env: Dict[str, object]):
    ty = type(t)
    if ty is Var:
        try:
            return env[t.name]
        except KeyError:
            raise EvalError(f"unbound variable {t.name!r}") from None
    if ty is Lit:
        return t.value
    if ty is OpApp:
        try:
            return IMPLS[t.op](eval_term(t.arg, env))
        except KeyError:
            raise EvalError(f"unknown operator {t.op!r}") from None
    if ty is Pair:
        return VPair(eval_term(t.fst, env), eval_term(t.snd, env))
    if ty is UnitV:
        return UNIT
    if ty is Inl:
        return VInl(eval_term(t.value, env))
    if ty is Inr:
        return VInr(eval_term(t.value, env))
    if ty is Fst or ty is Snd:
        v = eval_term(t.value, env)
        if type(v) is not VPair:
            raise EvalError("projection of a non-pair")
        return v.fst if ty is Fst else v.snd
    raise EvalError(f"not a ground term: {t!r}")


def simplify(t):
    """Reduce projections of literal pairs, recursively through any AST node."""
    from dataclasses import fields, replace
    ty = type(t)
    if ty in (Fst, Snd):
        inner = simplify(t.value)
        if type(inner) is Pair:
            return inner.fst if ty is Fst else inner.snd
        return ty(inner)
    if not hasattr(t, "__dataclass_fields__") or ty in (Var, Lit, UnitV):
        return t
    changes = {}
    for f in fields(t):
        v = getattr(t, f.name)
        if isinstance(v, tuple):
            changes[f.name] = tuple(simplify(i) for i in v)
        elif hasattr(v, "__dataclass_fields__"):
            changes[f.name] = simplify(v)
    return replace(t, **changes) if changes else t


# ---------------------------------------------------------------------------
# Formulas


def _atom_holds(pred: str, arg, env) -> bool:
    v = eval_term(arg, env)
    if type(v) is not VPair:
        raise EvalError("atoms take a pair of arguments")
    if pred == "=":
        return values_equal(v.fst, v.snd)
    if pred == "<=":
        return nm.le(v.fst, v.snd)
    if pred == "<":
        return nm.lt(v.fst, v.snd)
    raise EvalError(f"unknown predicate {pred!r}")


def eval_bool(f, env) -> bool:
    ty = type(f)
    if ty is Atom:
        return _atom_holds(f.pred, f.arg, env)
    if ty is And:
        return eval_bool(f.left, env) and eval_bool(f.right, env)
    if ty is Or:
        return eval_bool(f.left, env) or eval_bool(f.right, env)
    if ty is Implies:
        return (not eval_bool(f.left, env)) or eval_bool(f.right, env)
    if ty is FTrue:
        return True
    if ty is FFalse:
        return False
    if ty is Embed:
        return eval_bool(f.body, env)
    raise EvalError("real-valued formula in a Boolean instance")


def eval_ext(f, env):
    """Value of a formula in ``[0, inf]`` (smaller is more true)."""
    ty = type(f)
    if ty is Atom:
        return 0 if _atom_holds(f.pred, f.arg, env) else INF
    if ty is And:
        a = eval_ext(f.left, env)
        return INF if a is INF else ext_max(a, eval_ext(f.right, env))
    if ty is Or:
        return ext_min(eval_ext(f.left, env), eval_ext(f.right, env))
    if ty is Implies:
        a = eval_ext(f.left, env)
        b = eval_ext(f.right, env)
        return 0 if ext_le(b, a) else b
    if ty is FTrue:
        return 0
    if ty is FFalse:
        return INF
    if ty is Embed:
        return 0 if eval_bool(f.body, env) else INF
    if ty is RealF:
        v = eval_term(f.term, env)
        if not nm.is_real(v):
            raise EvalError("real-valued formula evaluated to a non-number")
        return v if nm.sign(v) > 0 else 0
    raise EvalError(f"not a formula: {f!r}")


def eval_formula(f, env, expect: bool):
    return eval_ext(f, env) if expect else eval_bool(f, env)


# ---------------------------------------------------------------------------
# Type predicates on runtime values


def type_value(ty, v, env, expect: bool):
    """Truth value of ``v`` inhabiting refinement type ``ty`` under ``env``.

    Returns a bool, or an element of ``[0, inf]`` in the expectation instance.
    Function types carry no checkable predicate here.
    """
    t = type(ty)
    if t is RefBase:
        old = env.get(ty.x, _MISSING)
        env[ty.x] = v
        try:
            return eval_formula(ty.phi, env, expect)
        finally:
            if old is _MISSING:
                del env[ty.x]
            else:
                env[ty.x] = old
    if t is DPair:
        if type(v) is not VPair:
            return INF if expect else False
        a = type_value(ty.left, v.fst, env, expect)
        e = dict(env)
        e[ty.x] = v.fst
        b = type_value(ty.right, v.snd, e, expect) if (expect or a) else False
        return ext_max(a, b) if expect else (a and b)
    if t is RSum:
        if type(v) is VInl:
            return type_value(ty.left, v.value, env, expect)
        if type(v) is VInr:
            return type_value(ty.right, v.value, env, expect)
        return INF if expect else False
    if t is DFun:
        return 0 if expect else True
    raise EvalError(f"not a value type: {ty!r}")


def is_bottom(omega, expect: bool) -> bool:
    return omega is INF if expect else not omega


__all__ = ["INF", "ext_le", "ext_max", "ext_min", "ext_add", "ext_fmt", "eval_term", "simplify",
           "eval_bool", "eval_ext", "eval_formula", "type_value", "is_bottom", "truthy",
           "EBasic", "EMul", "EOne"]
