"""Bidirectional graded refinement type checking.

The checker walks each declaration once and emits proof obligations instead
of deciding them.  Two obligation payloads exist:

* :class:`Implication`  ``ctx, z:b |= antecedent(z) => consequent(z)``
* :class:`Subeffect`    ``ctx |= lhs <= rhs`` in the instance's grade order.

Let-chains are checked with a running *prefix* grade: the grade of everything
sequenced before the current point.  A leaf computation with grade ``E`` then
emits ``prefix * E <= target``.  For the monoids used here (all residuated)
this is equivalent to splitting the target grade between the let-bound head
and the body, without guessing the split.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .effects import Instance, get_instance
from .ground import simplify
from .prelude import (BOOL_OPS, OpTypeError, compatible, is_num, literal_base, op_result,
                      pred_check, subsumes)
from .syntax import (SBOOL, And, App, Atom, Case, Comp, Decl, DFun, DPair, EBasic, EMul, EOne,
                     Effect, Embed, FFalse, FTrue, Fst, GenEff, Graded, Implies, Inl, Inr, Lam,
                     Let, Lit, MatchPair, OpApp, Or, Pair, Program, RealF, RecFun, RefBase,
                     Return, RSum, RType, SArrow, SBase, SComp, Snd, SProd, SSum, SType, UnitV,
                     Value, Var, erase, fresh, fv, is_ground, pretty, rename_binder, subst)

Context = Tuple[Tuple[str, RType], ...]


class CheckError(Exception):
    """A static error: ill-formed type, simple-type mismatch or unsupported form."""

    def __init__(self, msg: str, span=None):
        loc = f"{span[0]}:{span[1]}: " if span else ""
        super().__init__(loc + msg)
        self.span = span


class SimpleTypeError(CheckError):
    pass


@dataclass(frozen=True)
class Implication:
    binder: str
    base: str
    antecedent: object
    consequent: object


@dataclass(frozen=True)
class Subeffect:
    lhs: Effect
    rhs: Effect


@dataclass(frozen=True)
class Obligation:
    id: int
    rule: str
    context: Context
    payload: Union[Implication, Subeffect]
    span: Optional[Tuple[int, int]] = None
    decl: str = ""

    @property
    def kind(self) -> str:
        return "implication" if isinstance(self.payload, Implication) else "subeffect"

    def to_json(self) -> dict:
        p = self.payload
        if isinstance(p, Implication):
            payload = {"binder": p.binder, "base": p.base,
                       "antecedent": pretty(p.antecedent), "consequent": pretty(p.consequent)}
        else:
            payload = {"lhs": pretty(p.lhs), "rhs": pretty(p.rhs)}
        return {"id": self.id, "rule": self.rule, "decl": self.decl,
                "span": list(self.span) if self.span else None,
                "context": [[n, pretty(t)] for n, t in self.context],
                "kind": self.kind, "payload": payload}


@dataclass
class TypedProgram:
    program: Program
    instance: Instance
    obligations: List[Obligation]
    context: List[Tuple[str, RType]]
    types: Dict[str, object] = field(default_factory=dict)
    name: str = ""


def emul(a: Effect, b: Effect) -> Effect:
    if isinstance(a, EOne):
        return b
    if isinstance(b, EOne):
        return a
    return EMul(a, b)


def _lookup(ctx: Sequence[Tuple[str, object]], name: str, span=None):
    for n, t in reversed(ctx):
        if n == name:
            return t
    raise CheckError(f"unbound variable {name!r}", span)


def _is_bool_sum(t) -> bool:
    return (isinstance(t, RSum) and isinstance(t.left, RefBase) and t.left.base == "unit"
            and isinstance(t.right, RefBase) and t.right.base == "unit")


def _not(f):
    return Implies(f, FFalse())


_TRUE_V = Inl(UnitV())

# ---------------------------------------------------------------------------
# Simple typing


class SimpleChecker:
    """Plain (erased) typing; refinement checking assumes it has succeeded."""

    def __init__(self, inst: Instance):
        self.inst = inst

    def synth_value(self, ctx, v, span=None) -> SType:
        t = type(v)
        if t is Var:
            return _lookup(ctx, v.name, span)
        if t is UnitV:
            return SBase("unit")
        if t is Lit:
            return SBase(literal_base(v.value))
        if t is Pair:
            return SProd(self.synth_value(ctx, v.fst, span), self.synth_value(ctx, v.snd, span))
        if t in (Inl, Inr):
            inner = self.synth_value(ctx, v.value, span)
            other = SBase("unit")
            return SSum(inner, other) if t is Inl else SSum(other, inner)
        if t in (Fst, Snd):
            s = self.synth_value(ctx, v.value, span)
            if not isinstance(s, SProd):
                raise SimpleTypeError(f"projection of a non-pair of type {pretty(s)}", span)
            return s.left if t is Fst else s.right
        if t is OpApp:
            arg = self.synth_value(ctx, v.arg, span)
            try:
                return op_result(v.op, arg)
            except OpTypeError as e:
                raise SimpleTypeError(str(e), span) from None
        raise SimpleTypeError("cannot infer the type of a function without an annotation", span)

    def check_value(self, ctx, v, s: SType, span=None) -> None:
        t = type(v)
        if t is Lam:
            if not isinstance(s, SArrow):
                raise SimpleTypeError(f"function where {pretty(s)} was expected", span)
            self.check_comp(ctx + [(v.x, s.dom)], v.body, s.cod)
            return
        if t is RecFun:
            if not isinstance(s, SArrow):
                raise SimpleTypeError(f"function where {pretty(s)} was expected", span)
            self.check_comp(ctx + [(v.f, s), (v.x, s.dom)], v.body, s.cod)
            return
        if t is Pair and isinstance(s, SProd):
            self.check_value(ctx, v.fst, s.left, span)
            self.check_value(ctx, v.snd, s.right, span)
            return
        if t in (Inl, Inr) and isinstance(s, SSum):
            self.check_value(ctx, v.value, s.left if t is Inl else s.right, span)
            return
        got = self.synth_value(ctx, v, span)
        if not subsumes(got, s):
            raise SimpleTypeError(f"type mismatch: {pretty(got)} is not {pretty(s)}", span)

    def synth_comp(self, ctx, m) -> SComp:
        t = type(m)
        sp = getattr(m, "span", None)
        if t is Return:
            return SComp(self.synth_value(ctx, m.value, sp))
        if t is Let:
            a = self.synth_comp(ctx, m.head)
            return self.synth_comp(ctx + [(m.x, a.result)], m.body)
        if t is App:
            f = self.synth_value(ctx, m.fn, sp)
            if not isinstance(f, SArrow):
                raise SimpleTypeError(f"application of a non-function of type {pretty(f)}", sp)
            self.check_value(ctx, m.arg, f.dom, sp)
            return f.cod
        if t is GenEff:
            sig = self.inst.geneffs.get(m.name)
            if sig is None:
                raise SimpleTypeError(f"generic effect {m.name!r} is not available in instance "
                                      f"{self.inst.name}", sp)
            if len(m.ghosts) != len(sig.ghosts):
                raise SimpleTypeError(f"{m.name} expects {len(sig.ghosts)} ghost argument(s)", sp)
            for g, (_, gty) in zip(m.ghosts, sig.ghosts):
                self.check_value(ctx, g, erase(gty), sp)
            self.check_value(ctx, m.arg, erase(sig.arg), sp)
            return SComp(erase(sig.result))
        if t is MatchPair:
            s = self.synth_value(ctx, m.value, sp)
            if not isinstance(s, SProd):
                raise SimpleTypeError(f"match on a non-pair of type {pretty(s)}", sp)
            return self.synth_comp(ctx + [(m.x, s.left), (m.y, s.right)], m.body)
        if t is Case:
            s = self.synth_value(ctx, m.value, sp)
            if not isinstance(s, SSum):
                raise SimpleTypeError(f"case on a non-sum of type {pretty(s)}", sp)
            a = self.synth_comp(ctx + [(m.x, s.left)], m.left)
            b = self.synth_comp(ctx + [(m.y, s.right)], m.right)
            if not compatible(a.result, b.result):
                raise SimpleTypeError(f"branches disagree: {pretty(a.result)} vs {pretty(b.result)}", sp)
            return a
        raise SimpleTypeError(f"not a computation: {m!r}", sp)

    def check_comp(self, ctx, m, s: SComp) -> None:
        t = type(m)
        sp = getattr(m, "span", None)
        if t is Return:
            self.check_value(ctx, m.value, s.result, sp)
        elif t is Let:
            a = self.synth_comp(ctx, m.head)
            self.check_comp(ctx + [(m.x, a.result)], m.body, s)
        elif t is MatchPair:
            p = self.synth_value(ctx, m.value, sp)
            if not isinstance(p, SProd):
                raise SimpleTypeError(f"match on a non-pair of type {pretty(p)}", sp)
            self.check_comp(ctx + [(m.x, p.left), (m.y, p.right)], m.body, s)
        elif t is Case:
            p = self.synth_value(ctx, m.value, sp)
            if not isinstance(p, SSum):
                raise SimpleTypeError(f"case on a non-sum of type {pretty(p)}", sp)
            self.check_comp(ctx + [(m.x, p.left)], m.left, s)
            self.check_comp(ctx + [(m.y, p.right)], m.right, s)
        else:
            got = self.synth_comp(ctx, m)
            if not subsumes(got.result, s.result):
                raise SimpleTypeError(f"type mismatch: {pretty(got.result)} is not "
                                      f"{pretty(s.result)}", sp)


def check_simple(sctx, term, expected=None, instance: str = "cost"):
    """Simple-type ``term`` in the erased context ``sctx``.

    With ``expected`` given the term is checked against it; otherwise its type
    is synthesized (functions then need an expected type).
    """
    sc = SimpleChecker(get_instance(instance))
    ctx = list(sctx)
    is_comp = isinstance(term, (Return, Let, MatchPair, App, GenEff, Case))
    if expected is None:
        return sc.synth_comp(ctx, term) if is_comp else sc.synth_value(ctx, term)
    if is_comp:
        sc.check_comp(ctx, term, expected)
    else:
        sc.check_value(ctx, term, expected)
    return expected


# ---------------------------------------------------------------------------
# Refinement checking


class Checker:
    def __init__(self, inst: Instance, decl: str = ""):
        self.inst = inst
        self.simple = SimpleChecker(inst)
        self.obligations: List[Obligation] = []
        self.decl = decl

    # obligations ------------------------------------------------------
    def emit(self, ctx, payload, rule: str, span) -> None:
        self.obligations.append(Obligation(len(self.obligations), rule, tuple(ctx), payload,
                                           span, self.decl))

    def subeffect(self, ctx, lhs: Effect, rhs: Effect, rule: str, span) -> None:
        self.emit(ctx, Subeffect(lhs, rhs), rule, span)

    # well-formedness ------------------------------------------------------
    def sctx(self, ctx) -> List[Tuple[str, SType]]:
        return [(n, erase(t)) for n, t in ctx]

    def wf_type(self, ctx, ty, span=None) -> None:
        """Check that formulas and effect terms inside ``ty`` are well typed."""
        sctx = self.sctx(ctx)
        self._wf(sctx, ty, span)

    def _wf(self, sctx, ty, span) -> None:
        t = type(ty)
        if t is RefBase:
            self._wf_formula(sctx + [(ty.x, SBase(ty.base))], ty.phi, span)
        elif t is DPair:
            self._wf(sctx, ty.left, span)
            self._wf(sctx + [(ty.x, erase(ty.left))], ty.right, span)
        elif t is RSum:
            self._wf(sctx, ty.left, span)
            self._wf(sctx, ty.right, span)
        elif t is DFun:
            self._wf(sctx, ty.dom, span)
            self._wf(sctx + [(ty.x, erase(ty.dom))], ty.cod, span)
        elif t is Graded:
            self._wf_effect(sctx, ty.effect, span)
            self._wf(sctx, ty.result, span)
        else:
            raise CheckError(f"not a type: {ty!r}", span)

    def _ground_type(self, sctx, term, span) -> SType:
        if not is_ground(term):
            raise CheckError(f"formulas may only mention ground terms: {pretty(term)}", span)
        return self.simple.synth_value(sctx, term, span)

    def _wf_formula(self, sctx, f, span) -> None:
        t = type(f)
        if t is Atom:
            s = self._ground_type(sctx, f.arg, span)
            try:
                pred_check(f.pred, s)
            except OpTypeError as e:
                raise SimpleTypeError(str(e), span) from None
        elif t in (And, Or, Implies):
            self._wf_formula(sctx, f.left, span)
            self._wf_formula(sctx, f.right, span)
        elif t is Embed:
            self._wf_formula(sctx, f.body, span)
        elif t is RealF:
            if not self.inst.expect_omega:
                raise CheckError(f"real-valued formula {pretty(f)} in the Boolean instance "
                                 f"{self.inst.name}", span)
            s = self._ground_type(sctx, f.term, span)
            if not is_num(s):
                raise SimpleTypeError(f"real-valued formula has type {pretty(s)}", span)
        elif t not in (FTrue, FFalse):
            raise CheckError(f"not a formula: {f!r}", span)

    def _wf_effect(self, sctx, e, span) -> None:
        t = type(e)
        if t is EMul:
            self._wf_effect(sctx, e.left, span)
            self._wf_effect(sctx, e.right, span)
        elif t is EBasic:
            if e.name not in self.inst.basic:
                raise CheckError(f"basic effect {e.name!r} is not part of instance "
                                 f"{self.inst.name}", span)
            want, _ = self.inst.basic[e.name]
            got = self._ground_type(sctx, e.arg, span)
            if not subsumes(got, want) and not (is_num(got) and is_num(want)):
                raise SimpleTypeError(f"{e.name} expects {pretty(want)}, got {pretty(got)}", span)
        elif t is not EOne:
            raise CheckError(f"not an effect: {e!r}", span)

    # values -----------------------------------------------------------
    def self_type(self, ctx, name: str, span) -> RType:
        ty = _lookup(ctx, name, span)
        if isinstance(ty, RefBase):
            z = fresh(ty.x)
            return RefBase(z, ty.base, Atom("=", Pair(Var(z), Var(name))))
        if _is_bool_sum(ty):
            u1, u2 = fresh("u"), fresh("u")
            return RSum(RefBase(u1, "unit", Atom("=", Pair(Var(name), Inl(UnitV())))),
                        RefBase(u2, "unit", Atom("=", Pair(Var(name), Inr(UnitV())))))
        return ty

    def synth_value(self, ctx, v, span=None) -> RType:
        t = type(v)
        if t is Var:
            return self.self_type(ctx, v.name, span)
        if t is UnitV:
            return RefBase(fresh("u"), "unit", FTrue())
        if t is Lit:
            z = fresh("z")
            return RefBase(z, literal_base(v.value), Atom("=", Pair(Var(z), v)))
        if t is Pair:
            return DPair(fresh("p"), self.synth_value(ctx, v.fst, span),
                         self.synth_value(ctx, v.snd, span))
        if t in (Inl, Inr):
            inner = self.synth_value(ctx, v.value, span)
            other = RefBase(fresh("u"), "unit", FFalse())
            return RSum(inner, other) if t is Inl else RSum(other, inner)
        if t in (Fst, Snd):
            p = self.synth_value(ctx, v.value, span)
            if not isinstance(p, DPair):
                raise SimpleTypeError("projection of a non-pair", span)
            if t is Fst:
                part = p.left
            else:
                if not is_ground(v.value):
                    raise CheckError("projection of a non-ground pair", span)
                part = subst(p.right, p.x, Fst(v.value))
            if isinstance(part, RefBase):
                z = fresh(part.x)
                return RefBase(z, part.base, And(subst(part.phi, part.x, Var(z)),
                                                 Atom("=", Pair(Var(z), v))))
            return part
        if t is OpApp:
            arg_ty = self.synth_value(ctx, v.arg, span)
            s = erase(arg_ty)
            try:
                res = op_result(v.op, s)
            except OpTypeError as e:
                raise SimpleTypeError(str(e), span) from None
            if not is_ground(v.arg):
                raise CheckError(f"operator {v.op!r} applied to a non-ground value", span)
            if v.op == "not" and isinstance(arg_ty, RSum):
                return RSum(arg_ty.right, arg_ty.left)
            if v.op in BOOL_OPS:
                phi = self._bool_formula(v)
                return RSum(RefBase(fresh("u"), "unit", phi), RefBase(fresh("u"), "unit", _not(phi)))
            if not isinstance(res, SBase):
                raise CheckError(f"operator {v.op!r} has a non-base result", span)
            z = fresh("z")
            return RefBase(z, res.name, Atom("=", Pair(Var(z), v)))
        raise CheckError("cannot synthesize a type for a function; give it a declared type", span)

    def _bool_formula(self, v: OpApp):
        if v.op in ("=", "<=", "<"):
            return Atom(v.op, v.arg)
        if v.op == "not":
            return Atom("=", Pair(v.arg, Inr(UnitV())))
        a, b = (Fst(v.arg), Snd(v.arg)) if type(v.arg) is not Pair else (v.arg.fst, v.arg.snd)
        fa, fb = Atom("=", Pair(a, _TRUE_V)), Atom("=", Pair(b, _TRUE_V))
        return And(fa, fb) if v.op == "and" else Or(fa, fb)

    def check_value(self, ctx, v, ty: RType, span=None, rule: str = "VT-Sub") -> None:
        t = type(v)
        if t is Lam:
            if not isinstance(ty, DFun):
                raise SimpleTypeError(f"function where {pretty(erase(ty))} was expected", span)
            f = rename_binder(ty, v.x)
            self.check_comp(list(ctx) + [(v.x, f.dom)], v.body, f.cod, EOne())
            return
        if t is RecFun:
            if not isinstance(ty, DFun):
                raise SimpleTypeError(f"function where {pretty(erase(ty))} was expected", span)
            f = rename_binder(ty, v.x)
            self.check_comp(list(ctx) + [(v.f, ty), (v.x, f.dom)], v.body, f.cod, EOne())
            return
        if t is Pair and isinstance(ty, DPair):
            self.check_value(ctx, v.fst, ty.left, span, rule)
            right = ty.right
            if ty.x in fv(right):
                if not is_ground(v.fst):
                    raise CheckError("dependent pair component must be a ground value", span)
                right = subst(right, ty.x, v.fst)
            self.check_value(ctx, v.snd, right, span, rule)
            return
        if t in (Inl, Inr) and isinstance(ty, RSum):
            self.check_value(ctx, v.value, ty.left if t is Inl else ty.right, span, rule)
            return
        self.subtype(ctx, self.synth_value(ctx, v, span), ty, rule, span)

    # subtyping --------------------------------------------------------
    def subtype(self, ctx, a, b, rule: str, span) -> None:
        ta, tb = type(a), type(b)
        if ta is RefBase and tb is RefBase:
            if not subsumes(SBase(a.base), SBase(b.base)):
                raise SimpleTypeError(f"type mismatch: {a.base} is not {b.base}", span)
            z = fresh(a.x)
            ante = subst(a.phi, a.x, Var(z))
            cons = subst(b.phi, b.x, Var(z))
            if b.base == "nat" and a.base != "nat":
                cons = And(cons, Atom("<=", Pair(Lit(0), Var(z))))
            self.emit(ctx, Implication(z, a.base, ante, cons), rule, span)
            return
        if ta is DPair and tb is DPair:
            self.subtype(ctx, a.left, b.left, rule, span)
            x = a.x
            self.subtype(list(ctx) + [(x, a.left)], a.right, subst(b.right, b.x, Var(x)), rule, span)
            return
        if ta is RSum and tb is RSum:
            self.subtype(ctx, a.left, b.left, rule, span)
            self.subtype(ctx, a.right, b.right, rule, span)
            return
        if ta is DFun and tb is DFun:
            self.subtype(ctx, b.dom, a.dom, rule, span)
            y = b.x
            inner = list(ctx) + [(y, b.dom)]
            ca = subst(a.cod, a.x, Var(y))
            self.subeffect(inner, ca.effect, b.cod.effect, rule, span)
            self.subtype(inner, ca.result, b.cod.result, rule, span)
            return
        if ta is Graded and tb is Graded:
            self.subeffect(ctx, a.effect, b.effect, rule, span)
            self.subtype(ctx, a.result, b.result, rule, span)
            return
        raise SimpleTypeError(f"type mismatch: {pretty(erase(a))} is not {pretty(erase(b))}", span)

    # computations -----------------------------------------------------
    def synth_comp(self, ctx, m) -> Graded:
        t = type(m)
        sp = getattr(m, "span", None)
        if t is Return:
            return Graded(EOne(), self.synth_value(ctx, m.value, sp))
        if t is App:
            if not isinstance(m.fn, Var):
                raise CheckError("only named functions can be applied; bind the function first", sp)
            fty = _lookup(ctx, m.fn.name, sp)
            if not isinstance(fty, DFun):
                raise SimpleTypeError(f"application of a non-function {m.fn.name!r}", sp)
            self.check_value(ctx, m.arg, fty.dom, sp, "CT-App")
            if fty.x in fv(fty.cod):
                if not is_ground(m.arg):
                    raise CheckError("dependent application needs a ground argument", sp)
                return subst(fty.cod, fty.x, m.arg)
            return fty.cod
        if t is GenEff:
            sig = self.inst.geneffs.get(m.name)
            if sig is None:
                raise CheckError(f"generic effect {m.name!r} is not available in instance "
                                 f"{self.inst.name}", sp)
            if len(m.ghosts) != len(sig.ghosts):
                raise CheckError(f"{m.name} expects {len(sig.ghosts)} ghost argument(s), "
                                 f"got {len(m.ghosts)}", sp)
            for g, gty in zip(m.ghosts, sig.ghost_types(m.ghosts)):
                if not is_ground(g):
                    raise CheckError("ghost arguments must be ground", sp)
                self.check_value(ctx, g, gty, sp, "CT-GenEff")
            if not is_ground(m.arg):
                raise CheckError("generic effect argument must be ground", sp)
            arg_ty, graded = sig.instantiate(m.arg, m.ghosts)
            self.check_value(ctx, m.arg, arg_ty, sp, "CT-GenEff")
            return graded
        if t is Let:
            head = self.synth_comp(ctx, m.head)
            inner = list(ctx) + [(m.x, head.result)]
            body = self.synth_comp(inner, m.body)
            eff = body.effect
            if m.grade is not None:
                if m.x in fv(m.grade):
                    raise CheckError(f"let-annotation grade mentions the bound variable {m.x!r}", sp)
                self.subeffect(inner, body.effect, m.grade, "CT-Let", sp)
                eff = m.grade
            if m.x in fv(eff) or m.x in fv(body.result):
                raise CheckError(f"type of the let-body depends on {m.x!r}; declare the "
                                 f"enclosing definition's type", sp)
            return Graded(emul(head.effect, eff), body.result)
        raise CheckError("cannot synthesize a type for a branching computation here; "
                         "move it into a definition with a declared type", sp)

    def check_comp(self, ctx, m, target: Graded, prefix: Effect) -> None:
        t = type(m)
        sp = getattr(m, "span", None)
        ctx = list(ctx)
        if t is Return:
            self.check_value(ctx, m.value, target.result, sp, "CT-Return")
            self.subeffect(ctx, prefix, target.effect, "CT-Return", sp)
            return
        if t is Let:
            head = self.synth_comp(ctx, m.head)
            inner = ctx + [(m.x, head.result)]
            if m.grade is not None:
                if m.x in fv(m.grade):
                    raise CheckError(f"let-annotation grade mentions the bound variable {m.x!r}", sp)
                self.check_comp(inner, m.body, Graded(m.grade, target.result), EOne())
                self.subeffect(ctx, emul(prefix, emul(head.effect, m.grade)), target.effect,
                               "CT-Let", sp)
            else:
                self.check_comp(inner, m.body, target, emul(prefix, head.effect))
            return
        if t is MatchPair:
            self._check_match(ctx, m, target, prefix, sp)
            return
        if t is Case:
            self._check_case(ctx, m, target, prefix, sp)
            return
        got = self.synth_comp(ctx, m)
        rule = "CT-App" if t is App else "CT-GenEff"
        self.subeffect(ctx, emul(prefix, got.effect), target.effect, rule, sp)
        self.subtype(ctx, got.result, target.result, rule, sp)

    def _scrutinee(self, ctx, v, sp):
        if isinstance(v, Var):
            return _lookup(ctx, v.name, sp)
        return self.synth_value(ctx, v, sp)

    def _refine(self, ctx, name, entries, val, target, prefix, body):
        """Replace the context entry ``name`` by ``entries`` and substitute ``val`` for it."""
        idx = max(i for i, (n, _) in enumerate(ctx) if n == name)
        new = ctx[:idx] + entries + [(n, subst(ty, name, val)) for n, ty in ctx[idx + 1:]]
        return new, subst(target, name, val), subst(prefix, name, val), subst(body, name, val)

    def _check_match(self, ctx, m, target, prefix, sp):
        ty = self._scrutinee(ctx, m.value, sp)
        if not isinstance(ty, DPair):
            raise SimpleTypeError("match on a non-pair", sp)
        entries = [(m.x, ty.left), (m.y, subst(ty.right, ty.x, Var(m.x)))]
        if isinstance(m.value, Var):
            c2, tgt, pre, body = self._refine(ctx, m.value.name, entries,
                                              Pair(Var(m.x), Var(m.y)), target, prefix, m.body)
            self.check_comp(c2, body, tgt, pre)
        else:
            self.check_comp(ctx + entries, m.body, target, prefix)

    def _check_case(self, ctx, m, target, prefix, sp):
        ty = self._scrutinee(ctx, m.value, sp)
        if not isinstance(ty, RSum):
            raise SimpleTypeError("case on a non-sum", sp)
        for x, part, branch, inj in ((m.x, ty.left, m.left, Inl), (m.y, ty.right, m.right, Inr)):
            if isinstance(m.value, Var):
                c2, tgt, pre, body = self._refine(ctx, m.value.name, [(x, part)], inj(Var(x)),
                                                  target, prefix, branch)
                self.check_comp(c2, body, tgt, pre)
            else:
                self.check_comp(ctx + [(x, part)], branch, target, prefix)


# ---------------------------------------------------------------------------
# Programs


def check_program(program: Program, name: str = "") -> TypedProgram:
    """Check every declaration and collect the obligations, in order."""
    inst = get_instance(program.instance)
    chk = Checker(inst)
    ctx: List[Tuple[str, RType]] = []
    types: Dict[str, object] = {}
    for d in program.decls:
        chk.decl = d.name
        sp = d.span
        if d.type is not None:
            chk.wf_type(ctx, d.type, sp)
        if d.term is None:
            if isinstance(d.type, Graded):
                raise CheckError(f"context parameter {d.name!r} must have a value type", sp)
            ctx.append((d.name, d.type))
            types[d.name] = d.type
            continue
        is_comp = isinstance(d.term, (Return, Let, MatchPair, App, GenEff, Case))
        sctx = chk.sctx(ctx)
        if d.type is None:
            if is_comp:
                chk.simple.synth_comp(sctx, d.term)
                types[d.name] = chk.synth_comp(ctx, d.term)
            else:
                chk.simple.synth_value(sctx, d.term, sp)
                ty = chk.synth_value(ctx, d.term, sp)
                types[d.name] = ty
                ctx.append((d.name, ty))
            continue
        if isinstance(d.type, Graded):
            if not is_comp:
                raise CheckError(f"{d.name!r} has a computation type but a value body", sp)
            chk.simple.check_comp(sctx, d.term, erase(d.type))
            chk.check_comp(ctx, d.term, d.type, EOne())
            types[d.name] = d.type
            continue
        if is_comp:
            raise CheckError(f"{d.name!r} has a value type but a computation body", sp)
        term = d.term
        if isinstance(term, RecFun) and term.f != d.name:
            raise CheckError(f"recursive definition name {term.f!r} differs from {d.name!r}", sp)
        chk.simple.check_value(sctx, term, erase(d.type), sp)
        chk.check_value(ctx, term, d.type, sp, "VT-Sub")
        ctx.append((d.name, d.type))
        types[d.name] = d.type
    return TypedProgram(program, inst, chk.obligations, ctx, types, name)


def check_value(ctx, v, ty, instance: str = "cost") -> List[Obligation]:
    """Check one value against a type; returns the emitted obligations."""
    chk = Checker(get_instance(instance))
    chk.check_value(list(ctx), v, ty)
    return chk.obligations


def subtype(ctx, a, b, instance: str = "cost") -> List[Obligation]:
    chk = Checker(get_instance(instance))
    chk.subtype(list(ctx), a, b, "Sub", None)
    return chk.obligations


def check_comp(ctx, m, target: Graded, instance: str = "cost") -> List[Obligation]:
    chk = Checker(get_instance(instance))
    chk.check_comp(list(ctx), m, target, EOne())
    return chk.obligations
