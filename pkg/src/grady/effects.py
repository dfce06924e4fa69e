"""Effect instances: grade monoids, basic effects and generic-effect signatures.

Four instances are provided:

``cost``      grades in N u {inf}, combined by addition;
``temporal``  grades are languages of push/pop words, combined by concatenation;
``ubound``    grades in [0, inf) bounding failure probability, combined by addition;
``expect``    grades in [0, inf] bounding expectation slack, combined by addition.

Every monoid here is residuated: ``a * b <= c`` can be checked by carrying the
prefix ``a`` down a let-chain, which is what the checker does.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, Optional, Tuple

from . import numeric as nm
from .ground import INF, eval_term, ext_add, ext_le
from .prelude import UNIT, EvalError, VPair
from .syntax import (EBasic, EMul, EOne, Effect, Graded, RType, SBase, SProd, SType, Var,
                     fresh, parse_effect, parse_type, pretty, subst)

# ---------------------------------------------------------------------------
# Grade values


@dataclass(frozen=True)
class NatInf:
    """A natural number or infinity (``value is INF``)."""
    value: object


@dataclass(frozen=True)
class RealNN:
    value: object


@dataclass(frozen=True)
class ExtReal:
    value: object


@dataclass(frozen=True)
class StackAtom:
    """Words with net depth ``d`` whose prefix depths never exceed ``m``."""
    d: int
    m: int


@dataclass(frozen=True)
class Lang:
    """A concatenation of word-language atoms.

    Atoms are event names (a single one-letter word) or :class:`StackAtom`.
    Push/pop counting ignores events other than ``push`` and ``pop``.
    """
    atoms: Tuple[object, ...] = ()

    @property
    def empty(self) -> bool:
        return any(isinstance(a, StackAtom) and a.m < max(0, a.d) for a in self.atoms)

    def profile(self) -> Tuple[int, int]:
        """(net depth, maximal prefix depth) over all words of the language."""
        net, peak = 0, 0
        for a in self.atoms:
            if isinstance(a, StackAtom):
                peak = max(peak, net + a.m)
                net += a.d
            else:
                net += _delta(a)
                peak = max(peak, net)
        return net, peak

    def is_stack_closed(self) -> bool:
        return len(self.atoms) == 1 and isinstance(self.atoms[0], StackAtom)

    def is_word(self) -> bool:
        return all(not isinstance(a, StackAtom) for a in self.atoms)

    def contains(self, word: Tuple[str, ...]) -> bool:
        return _contains(self.atoms, tuple(word))


def _delta(ev: str) -> int:
    return 1 if ev == "push" else -1 if ev == "pop" else 0


def word_profile(word) -> Tuple[int, int]:
    net, peak = 0, 0
    for ev in word:
        net += _delta(ev)
        peak = max(peak, net)
    return net, peak


@lru_cache(maxsize=100_000)
def _contains(atoms: Tuple[object, ...], word: Tuple[str, ...]) -> bool:
    if not atoms:
        return not word
    a, rest = atoms[0], atoms[1:]
    if not isinstance(a, StackAtom):
        return bool(word) and word[0] == a and _contains(rest, word[1:])
    for cut in range(len(word) + 1):
        net, peak = word_profile(word[:cut])
        if net == a.d and peak <= a.m and _contains(rest, word[cut:]):
            return True
    return False


def grade_fmt(g) -> str:
    if isinstance(g, (NatInf, RealNN, ExtReal)):
        return "inf" if g.value is INF else nm.fmt(g.value)
    if isinstance(g, Lang):
        parts = [f"stack({a.d},{a.m})" if isinstance(a, StackAtom) else a for a in g.atoms]
        return ".".join(parts) or "1"
    return repr(g)


# ---------------------------------------------------------------------------
# Generic effect signatures


@dataclass(frozen=True)
class GenEffSig:
    """``name : (param : arg) ->^{effect} result`` with ghost parameters."""
    name: str
    param: str
    arg: RType
    effect: Effect
    result: RType
    ghosts: Tuple[Tuple[str, RType], ...] = ()

    def instantiate(self, arg, ghosts):
        """Substitute ghost values and the argument; returns (arg type, graded result)."""
        if len(ghosts) != len(self.ghosts):
            raise ValueError(f"{self.name} expects {len(self.ghosts)} ghost argument(s), "
                             f"got {len(ghosts)}")
        # rename the signature's own names first so the substitution is simultaneous
        names = [self.param] + [g for g, _ in self.ghosts]
        fresh_names = {n: fresh(n) for n in names}
        arg_ty, eff, res = self.arg, self.effect, self.result
        for n, f in fresh_names.items():
            arg_ty, eff, res = (subst(arg_ty, n, Var(f)), subst(eff, n, Var(f)),
                                subst(res, n, Var(f)))
        for (g, _), gv in zip(self.ghosts, ghosts):
            f = fresh_names[g]
            arg_ty, eff, res = subst(arg_ty, f, gv), subst(eff, f, gv), subst(res, f, gv)
        p = fresh_names[self.param]
        return arg_ty, Graded(subst(eff, p, arg), subst(res, p, arg))

    def ghost_types(self, ghosts):
        """Types of the ghost arguments, each instantiated with the earlier ghosts."""
        out, done = [], {}
        for (g, gty), gv in zip(self.ghosts, ghosts):
            for n, v in done.items():
                gty = subst(gty, n, v)
            out.append(gty)
            done[g] = gv
        return out


def _sig(name, param, arg, effect, result, ghosts=()):
    return GenEffSig(name, param, parse_type(arg), parse_effect(effect), parse_type(result),
                     tuple((g, parse_type(t)) for g, t in ghosts))


# ---------------------------------------------------------------------------
# Instances


@dataclass
class Instance:
    name: str
    expect_omega: bool
    munit: object
    mmul: Callable[[object, object], object]
    mleq: Callable[[object, object], bool]
    basic: Dict[str, Tuple[SType, Callable]]
    geneffs: Dict[str, GenEffSig] = field(default_factory=dict)
    unit_is_bottom: bool = True

    def eval_effect(self, e: Effect, env) -> object:
        t = type(e)
        if t is EOne:
            return self.munit
        if t is EMul:
            return self.mmul(self.eval_effect(e.left, env), self.eval_effect(e.right, env))
        if t is EBasic:
            try:
                _, fn = self.basic[e.name]
            except KeyError:
                raise EvalError(f"basic effect {e.name!r} is not part of instance {self.name}") from None
            return fn(eval_term(e.arg, env))
        raise EvalError(f"not an effect term: {e!r}")


def _nat_grade(v):
    if not nm.is_real(v) or nm.sign(v) < 0 or (type(v) is not int and getattr(v, "denominator", 0) != 1):
        raise EvalError(f"nat2eff expects a natural number, got {v!r}")
    return NatInf(int(v))


def _real_grade(cls):
    def go(v):
        if not nm.is_real(v) or not nm.nonneg_for_all(v):
            raise EvalError(f"r2eff expects a non-negative real, got {v!r}")
        return cls(v)
    return go


def _add(cls):
    def go(a, b):
        return cls(ext_add(a.value, b.value))
    return go


def _le(a, b) -> bool:
    if b.value is INF:
        return True
    if a.value is INF:
        return False
    return nm.nonneg_for_all(nm.sub(b.value, a.value))


def _stack(v):
    if type(v) is not VPair or not all(isinstance(x, int) for x in (v.fst, v.snd)):
        raise EvalError(f"stack expects a pair of integers, got {v!r}")
    return Lang((StackAtom(v.fst, v.snd),))


def _event(v):
    if not isinstance(v, str):
        raise EvalError(f"event expects an event name, got {v!r}")
    return Lang((v,))


def lang_le(a: Lang, b: Lang) -> bool:
    """Language inclusion for the shapes that arise in checking."""
    if a.empty or a == b:
        return True
    if b.empty:
        return False
    if b.is_stack_closed():
        s = b.atoms[0]
        net, peak = a.profile()
        return net == s.d and peak <= s.m
    if b.is_word():
        return a.is_word() and a.atoms == b.atoms
    raise nm.Undecided("language inclusion against a composite grade")


_INT2 = SProd(SBase("int"), SBase("int"))

COST = Instance(
    "cost", False, NatInf(0), _add(NatInf), _le,
    {"nat2eff": (SBase("nat"), _nat_grade)},
    {"Tick": _sig("Tick", "k", "{k:nat | true}", "nat2eff(k)", "unit")},
)

TEMPORAL = Instance(
    "temporal", False, Lang(), lambda a, b: Lang(a.atoms + b.atoms), lang_le,
    {"push": (SBase("unit"), lambda v: Lang(("push",))),
     "pop": (SBase("unit"), lambda v: Lang(("pop",))),
     "stack": (_INT2, _stack),
     "event": (SBase("event"), _event)},
    {"Emit": _sig("Emit", "e", "{e:event | true}", "event(e)", "unit")},
    unit_is_bottom=False,
)

UBOUND = Instance(
    "ubound", False, RealNN(0), _add(RealNN), _le,
    {"r2eff": (SBase("real"), _real_grade(RealNN))},
    {
        "Lap": _sig("Lap", "x", "(eps : {eps:real | 0 < eps}) * {m:real | true}",
                    "r2eff(exp(-((fst x) * t)))", "{y:real | abs(y - snd x) <= t}",
                    [("t", "{t:real | 0 < t}")]),
        "Bern": _sig("Bern", "p", "{p:real | 0 <= p /\\ p <= 1}", "r2eff(0)", "bool"),
        "BernFail": _sig("BernFail", "p", "{p:real | 0 <= p /\\ p <= 1}", "r2eff(p)",
                         "{u:unit | false} + {u:unit | true}"),
    },
)

EXPECT = Instance(
    "expect", True, ExtReal(0), _add(ExtReal), _le,
    {"r2eff": (SBase("real"), _real_grade(ExtReal))},
    {
        "Bern": _sig("Bern", "p",
                     "{p:real | <0 <= p /\\ p <= 1> /\\ (p * ga + (1 - p) * gb - ge)}",
                     "r2eff(ge)", "{u:unit | ga} + {u:unit | gb}",
                     [("ga", "{a:real | <0 <= a>}"), ("gb", "{b:real | <0 <= b>}"),
                      ("ge", "{e:real | <0 <= e>}")]),
    },
)

INSTANCES: Dict[str, Instance] = {i.name: i for i in (COST, TEMPORAL, UBOUND, EXPECT)}


def get_instance(name: str) -> Instance:
    try:
        return INSTANCES[name]
    except KeyError:
        raise ValueError(f"unknown instance {name!r}") from None


def munit(inst: Instance):
    return inst.munit


def mmul(inst: Instance, a, b):
    return inst.mmul(a, b)


def mleq(inst: Instance, a, b) -> bool:
    return inst.mleq(a, b)


def eval_effect(inst: Instance, e: Effect, env) -> object:
    return inst.eval_effect(e, env)
