"""SMT-LIB2 export of obligations, plus a small evaluator for the emitted scripts.

A script declares one constant per ground context variable, asserts the
context predicates, asserts the *negation* of the payload and ends with
``(check-sat)``; ``unsat`` from a solver therefore certifies validity.

Encoding choices:

* every number is a ``Real``; ``int``/``nat`` constants get ``is_int`` (and
  ``>= 0``) side conditions, so the numeric tower needs no conversions;
* pairs, sums, unit and both list types are algebraic datatypes, booleans are
  ``(Sum Unit Unit)`` as in the source language;
* ``exp`` is an uninterpreted function; each application gets a positivity
  assertion;
* list operators are ``define-fun-rec`` definitions mirroring the runtime ones
  (totality included: ``head`` of the empty list is 0, division by zero is 0).

:func:`eval_assertions` evaluates the assertions of an emitted script under a
concrete environment, which lets tests check that a grid counterexample
satisfies the negated obligation without an external solver.
"""
from __future__ import annotations

import re
from fractions import Fraction
from typing import Dict, List, Optional, Union

from . import numeric as nm
from .constraints import Unknown, _filter_boolean, _ground_entries
from .effects import Instance, get_instance
from .ground import simplify
from .prelude import UNIT, EvalError, OpTypeError, VInl, VInr, VPair, op_result, values_equal
from .syntax import (SBOOL, And, Atom, DPair, EBasic, EMul, EOne, Embed, FFalse, FTrue, Fst,
                     Implies, Inl, Inr, Lit, OpApp, Or, Pair, RealF, RefBase, RSum, SBase, Snd,
                     SProd, SSum, UnitV, Var, erase)
from .typecheck import Implication, Obligation, Subeffect

PRELUDE = """\
(set-logic ALL)
(declare-datatypes ((Unit 0) (Pair 2) (Sum 2) (RList 0) (LList 0))
  (((unit))
   (par (A B) ((mk-pair (fst A) (snd B))))
   (par (A B) ((inl (left A)) (inr (right B))))
   ((rnil) (rcons (rhd Real) (rtl RList)))
   ((lnil) (lcons (lhd RList) (ltl LList)))))
(declare-fun g.exp (Real) Real)
(define-fun g.div ((a Real) (b Real)) Real (ite (= b 0.0) 0.0 (/ a b)))
(define-fun g.min ((a Real) (b Real)) Real (ite (<= a b) a b))
(define-fun g.max ((a Real) (b Real)) Real (ite (<= a b) b a))
(define-fun g.abs ((a Real)) Real (ite (<= 0.0 a) a (- a)))
(define-fun-rec g.len ((l RList)) Real (ite ((_ is rnil) l) 0.0 (+ 1.0 (g.len (rtl l)))))
(define-fun-rec g.llen ((l LList)) Real (ite ((_ is lnil) l) 0.0 (+ 1.0 (g.llen (ltl l)))))
(define-fun g.head ((l RList)) Real (ite ((_ is rnil) l) 0.0 (rhd l)))
(define-fun g.lhead ((l LList)) RList (ite ((_ is lnil) l) rnil (lhd l)))
(define-fun g.tail ((l RList)) RList (ite ((_ is rnil) l) rnil (rtl l)))
(define-fun g.ltail ((l LList)) LList (ite ((_ is lnil) l) lnil (ltl l)))
(define-fun-rec g.cdf ((th Real) (l RList)) Real
  (ite ((_ is rnil) l) 0.0 (+ (ite (<= (rhd l) th) 1.0 0.0) (g.cdf th (rtl l)))))
(define-fun-rec g.filter_le ((th Real) (l RList)) RList
  (ite ((_ is rnil) l) rnil
    (ite (<= (rhd l) th) (rcons (rhd l) (g.filter_le th (rtl l))) (g.filter_le th (rtl l)))))
(define-fun-rec g.maxdev ((n RList) (b RList) (db RList)) Real
  (ite (or ((_ is rnil) n) ((_ is rnil) b)) 0.0
    (g.max (g.abs (- (rhd n) (g.cdf (rhd b) db))) (g.maxdev (rtl n) (rtl b) db))))
"""

_BOOL_SORT = "(Sum Unit Unit)"
_TRUE = f"((as inl {_BOOL_SORT}) unit)"
_FALSE = f"((as inr {_BOOL_SORT}) unit)"


class Untranslatable(Exception):
    pass


def _sym(name: str) -> str:
    s = "v." + name
    return s if re.fullmatch(r"[A-Za-z0-9_.]+", s) else f"|{s}|"


def _real(v) -> str:
    if isinstance(v, str):
        return '"' + v.replace('"', '""') + '"'
    if not nm.is_real(v) or type(v) is nm.ExpNum:
        raise Untranslatable(f"literal {v!r}")
    f = Fraction(v)
    num = f"{abs(f.numerator)}.0" if f.denominator == 1 else \
        f"(/ {abs(f.numerator)}.0 {f.denominator}.0)"
    return f"(- {num})" if f < 0 else num


def sort_of(s) -> str:
    """SMT sort of a simple type."""
    if isinstance(s, SBase):
        table = {"real": "Real", "int": "Real", "nat": "Real", "unit": "Unit",
                 "event": "String", "list": "RList", "list_list": "LList"}
        if s.name not in table:
            raise Untranslatable(f"base type {s.name}")
        return table[s.name]
    if isinstance(s, SProd):
        return f"(Pair {sort_of(s.left)} {sort_of(s.right)})"
    if isinstance(s, SSum):
        return f"(Sum {sort_of(s.left)} {sort_of(s.right)})"
    raise Untranslatable("function-typed value")


class _Emitter:
    def __init__(self, senv: Dict[str, object]):
        self.senv = dict(senv)
        self.exps: List[str] = []

    # simple types of terms ------------------------------------------------
    def stype(self, t):
        ty = type(t)
        if ty is Var:
            return self.senv[t.name]
        if ty is Lit:
            return SBase("event") if isinstance(t.value, str) else SBase("real")
        if ty is UnitV:
            return SBase("unit")
        if ty is Pair:
            a, b = self.stype(t.fst), self.stype(t.snd)
            return None if a is None or b is None else SProd(a, b)
        if ty in (Fst, Snd):
            s = self.stype(t.value)
            if not isinstance(s, SProd):
                return None
            return s.left if ty is Fst else s.right
        if ty is OpApp:
            if t.op in ("nil", "lnil"):
                return SBase("list" if t.op == "nil" else "list_list")
            if t.op in ("=", "<=", "<", "not", "and", "or"):
                return SBOOL
            a = self.stype(t.arg)
            if a is None:
                return None
            try:
                return op_result(t.op, a)
            except OpTypeError as e:
                raise Untranslatable(str(e)) from None
        return None  # injections need an expected type

    # terms -------------------------------------------------------------
    def term(self, t, want=None) -> str:
        ty = type(t)
        if ty is Var:
            return _sym(t.name)
        if ty is Lit:
            return _real(t.value)
        if ty is UnitV:
            return "unit"
        if ty is Pair:
            l = want.left if isinstance(want, SProd) else None
            r = want.right if isinstance(want, SProd) else None
            return f"(mk-pair {self.term(t.fst, l)} {self.term(t.snd, r)})"
        if ty is Fst:
            return f"(fst {self.term(t.value)})"
        if ty is Snd:
            return f"(snd {self.term(t.value)})"
        if ty in (Inl, Inr):
            if not isinstance(want, SSum):
                raise Untranslatable("injection without a known sum type")
            ctor = "inl" if ty is Inl else "inr"
            inner = want.left if ty is Inl else want.right
            return f"((as {ctor} {sort_of(want)}) {self.term(t.value, inner)})"
        if ty is OpApp:
            return self.op(t)
        raise Untranslatable(f"term {t!r}")

    def _args(self, t):
        if type(t.arg) is not Pair:
            a = self.term(t.arg)
            return f"(fst {a})", f"(snd {a})"
        return self.term(t.arg.fst), self.term(t.arg.snd)

    def op(self, t) -> str:
        op = t.op
        arith = {"+": "+", "-": "-", "*": "*", "/": "g.div", "min": "g.min", "max": "g.max"}
        if op in arith:
            a, b = self._args(t)
            return f"({arith[op]} {a} {b})"
        if op == "neg":
            return f"(- {self.term(t.arg)})"
        if op == "abs":
            return f"(g.abs {self.term(t.arg)})"
        if op == "exp":
            e = f"(g.exp {self.term(t.arg)})"
            if e not in self.exps:
                self.exps.append(e)
            return e
        if op in ("=", "<=", "<", "not", "and", "or"):
            return f"(ite {self.test(t)} {_TRUE} {_FALSE})"
        if op == "iv":
            return f"(ite ((_ is inl) {self.term(t.arg, SBOOL)}) 1.0 0.0)"
        if op == "nil":
            return "rnil"
        if op == "lnil":
            return "lnil"
        if op in ("len", "tail"):
            s = self.stype(t.arg)
            name = ("g." + op) if s == SBase("list") else ("g.llen" if op == "len" else "g.ltail")
            return f"({name} {self.term(t.arg)})"
        if op in ("head", "lhead"):
            return f"(g.{op} {self.term(t.arg)})"
        if op == "cons":
            s = self.stype(t.arg)
            ctor = "lcons" if isinstance(s, SProd) and s.right == SBase("list_list") else "rcons"
            a, b = self._args(t)
            return f"({ctor} {a} {b})"
        if op in ("cdf", "filter_le"):
            a, b = self._args(t)
            return f"(g.{op} {a} {b})"
        if op == "maxdev":
            if type(t.arg) is Pair and type(t.arg.snd) is Pair:
                parts = [self.term(t.arg.fst), self.term(t.arg.snd.fst), self.term(t.arg.snd.snd)]
            else:
                a = self.term(t.arg)
                parts = [f"(fst {a})", f"(fst (snd {a}))", f"(snd (snd {a}))"]
            return f"(g.maxdev {' '.join(parts)})"
        raise Untranslatable(f"operator {op}")

    def test(self, t) -> str:
        """A Boolean-valued term as an SMT formula."""
        if type(t) is OpApp:
            if t.op in ("=", "<=", "<"):
                return self.atom(t.op, t.arg)
            if t.op == "not":
                return f"(not {self.test(t.arg)})"
            if t.op in ("and", "or"):
                a = self.test(t.arg.fst) if type(t.arg) is Pair else None
                b = self.test(t.arg.snd) if type(t.arg) is Pair else None
                if a is None:
                    raise Untranslatable("boolean connective on a non-pair")
                return f"({t.op} {a} {b})"
        return f"((_ is inl) {self.term(t, SBOOL)})"

    def atom(self, pred: str, arg) -> str:
        if type(arg) is Pair:
            a, b = arg.fst, arg.snd
        else:
            a, b = Fst(arg), Snd(arg)
        if pred == "=":
            s = self.stype(a) or self.stype(b)
            return f"(= {self.term(a, s)} {self.term(b, s)})"
        return f"({pred} {self.term(a)} {self.term(b)})"

    # formulas ----------------------------------------------------------
    def formula(self, f) -> str:
        ty = type(f)
        if ty is FTrue:
            return "true"
        if ty is FFalse:
            return "false"
        if ty is Atom:
            return self.atom(f.pred, f.arg)
        if ty in (And, Or, Implies):
            name = {And: "and", Or: "or", Implies: "=>"}[ty]
            return f"({name} {self.formula(f.left)} {self.formula(f.right)})"
        if ty is Embed:
            return self.formula(f.body)
        if ty is RealF:
            raise Untranslatable("real-valued formula")
        raise Untranslatable(f"formula {f!r}")

    def member(self, ty, v: str) -> str:
        """The predicate of refinement type ``ty`` applied to the SMT term ``v``."""
        t = type(ty)
        if t is RefBase:
            parts = []
            if ty.base in ("int", "nat"):
                parts.append(f"(is_int {v})")
            if ty.base == "nat":
                parts.append(f"(<= 0.0 {v})")
            saved = self.senv.get(ty.x)
            self.senv[ty.x] = SBase(ty.base)
            try:
                body = self.formula(ty.phi)
            finally:
                if saved is None:
                    self.senv.pop(ty.x, None)
                else:
                    self.senv[ty.x] = saved
            body = _bind(body, ty.x, v)
            if body != "true":
                parts.append(body)
            return _conj(parts)
        if t is DPair:
            left = self.member(ty.left, f"(fst {v})")
            saved = self.senv.get(ty.x)
            self.senv[ty.x] = erase(ty.left)
            try:
                right = _bind(self.member(ty.right, f"(snd {v})"), ty.x, f"(fst {v})")
            finally:
                if saved is None:
                    self.senv.pop(ty.x, None)
                else:
                    self.senv[ty.x] = saved
            return _conj([left, right])
        if t is RSum:
            l = self.member(ty.left, f"(left {v})")
            r = self.member(ty.right, f"(right {v})")
            return f"(ite ((_ is inl) {v}) {l} {r})"
        raise Untranslatable("function-typed entry")


def _bind(text: str, x: str, v: str) -> str:
    """Replace the symbol for ``x`` by the term ``v`` in emitted text."""
    sym = re.escape(_sym(x))
    return re.sub(rf"(?<![A-Za-z0-9_.|]){sym}(?![A-Za-z0-9_.|])", lambda _: v, text)


def _conj(parts: List[str]) -> str:
    parts = [p for p in parts if p != "true"]
    if not parts:
        return "true"
    return parts[0] if len(parts) == 1 else f"(and {' '.join(parts)})"


def _grade_terms(inst: Instance, e, em: _Emitter):
    """Numeric grade of an effect term (cost, ubound, expect)."""
    t = type(e)
    if t is EOne:
        return "0.0"
    if t is EMul:
        return f"(+ {_grade_terms(inst, e.left, em)} {_grade_terms(inst, e.right, em)})"
    if t is EBasic:
        return em.term(e.arg)
    raise Untranslatable(f"effect {e!r}")


def _profile(e, em: _Emitter, net: str = "0.0", peak: str = "0.0", ok=None):
    """Symbolic (net depth, peak depth, nonempty) of a temporal effect term."""
    ok = [] if ok is None else ok
    for a in _flatten(e):
        if a.name in ("push", "pop"):
            net = f"(+ {net} {'1.0' if a.name == 'push' else '(- 1.0)'})"
            peak = f"(g.max {peak} {net})"
        elif a.name == "event":
            ev = em.term(a.arg)
            net = f'(+ {net} (ite (= {ev} "push") 1.0 (ite (= {ev} "pop") (- 1.0) 0.0)))'
            peak = f"(g.max {peak} {net})"
        elif a.name == "stack":
            d, m = f"(fst {em.term(a.arg)})", f"(snd {em.term(a.arg)})"
            if type(a.arg) is Pair:
                d, m = em.term(a.arg.fst), em.term(a.arg.snd)
            ok.append(f"(<= (g.max 0.0 {d}) {m})")
            peak = f"(g.max {peak} (+ {net} {m}))"
            net = f"(+ {net} {d})"
        else:
            raise Untranslatable(f"basic effect {a.name}")
    return net, peak, ok


def _flatten(e):
    if type(e) is EOne:
        return []
    if type(e) is EMul:
        return _flatten(e.left) + _flatten(e.right)
    return [e]


def emit_smtlib(ob: Obligation, instance: Union[str, Instance] = "cost") -> Union[str, Unknown]:
    """SMT-LIB2 script whose unsatisfiability certifies ``ob``."""
    inst = get_instance(instance) if isinstance(instance, str) else instance
    try:
        return _emit(ob, inst)
    except (Untranslatable, KeyError) as e:
        return Unknown(f"untranslatable: {e}")


def _emit(ob: Obligation, inst: Instance) -> str:
    p = ob.payload
    if inst.expect_omega and isinstance(p, Implication):
        raise Untranslatable("expectation-valued implications have no first-order encoding")
    entries = [(n, simplify(t)) for n, t in _ground_entries(ob.context)]
    if isinstance(p, Implication):
        entries.append((p.binder, RefBase(p.binder, p.base, simplify(p.antecedent))))
    senv = {n: erase(t) for n, t in entries}
    em = _Emitter(senv)
    lines = [PRELUDE.rstrip("\n")]
    for n, t in entries:
        lines.append(f"(declare-const {_sym(n)} {sort_of(senv[n])})")
    asserts = []
    for n, t in entries:
        if inst.expect_omega:
            t = _filter_boolean(t)
        asserts.append(em.member(t, _sym(n)))
    if isinstance(p, Implication):
        goal = em.formula(simplify(p.consequent))
    elif inst.name == "temporal":
        lhs, rhs = simplify(p.lhs), simplify(p.rhs)
        rflat = _flatten(rhs)
        if len(rflat) != 1 or rflat[0].name != "stack":
            raise Untranslatable("temporal grade that is not a single stack atom")
        net, peak, ok = _profile(lhs, em)
        rnet, rpeak, rok = _profile(rhs, em)
        d = em.term(rflat[0].arg.fst) if type(rflat[0].arg) is Pair else f"(fst {em.term(rflat[0].arg)})"
        m = em.term(rflat[0].arg.snd) if type(rflat[0].arg) is Pair else f"(snd {em.term(rflat[0].arg)})"
        asserts.extend(ok)  # an empty left-hand language is included in anything
        goal = f"(and (= {net} {d}) (<= {peak} {m}))"
    else:
        goal = f"(<= {_grade_terms(inst, simplify(p.lhs), em)} {_grade_terms(inst, simplify(p.rhs), em)})"
    asserts.append(f"(not {goal})")
    for e in em.exps:
        asserts.append(f"(< 0.0 {e})")
    for a in asserts:
        if a != "true":
            lines.append(f"(assert {a})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def smt_filename(program: str, ob: Obligation) -> str:
    return f"{program}.{ob.id}.smt2"


# ---------------------------------------------------------------------------
# Evaluating emitted scripts


def parse_sexprs(text: str) -> list:
    """S-expressions of a script; atoms stay strings, string literals become ('str', s)."""
    toks = re.findall(r'\(|\)|"(?:[^"]|"")*"|\|[^|]*\||[^\s()]+', text)
    stack: list = [[]]
    for tok in toks:
        if tok == "(":
            stack.append([])
        elif tok == ")":
            done = stack.pop()
            stack[-1].append(done)
        elif tok.startswith('"'):
            stack[-1].append(("str", tok[1:-1].replace('""', '"')))
        else:
            stack[-1].append(tok)
    return stack[0]


class _SmtEval:
    def __init__(self, funs, env):
        self.funs = funs
        self.env = env

    def ev(self, e, local):
        if isinstance(e, tuple):
            return e[1]
        if isinstance(e, str):
            if e in local:
                return local[e]
            if e in self.env:
                return self.env[e]
            if e in ("true", "false"):
                return e == "true"
            if e == "unit":
                return UNIT
            if e in ("rnil", "lnil"):
                return ()
            if re.fullmatch(r"\d+(\.\d+)?", e):
                f = Fraction(e)
                return int(f) if f.denominator == 1 else f
            raise EvalError(f"unknown symbol {e}")
        head = e[0]
        if isinstance(head, list):
            if head[0] == "_" and head[1] == "is":
                return _is(head[2], self.ev(e[1], local))
            if head[0] == "as":
                return self._ctor(head[1], [self.ev(a, local) for a in e[1:]])
            raise EvalError(f"cannot apply {head}")
        if head == "ite":
            return self.ev(e[2], local) if self.ev(e[1], local) else self.ev(e[3], local)
        if head == "and":
            return all(self.ev(a, local) for a in e[1:])
        if head == "or":
            return any(self.ev(a, local) for a in e[1:])
        args = [self.ev(a, local) for a in e[1:]]
        if head == "not":
            return not args[0]
        if head == "=>":
            return (not args[0]) or args[1]
        if head == "=":
            return values_equal(args[0], args[1])
        if head in ("<=", "<"):
            return nm.le(args[0], args[1]) if head == "<=" else nm.lt(args[0], args[1])
        if head == "+":
            out = args[0]
            for a in args[1:]:
                out = nm.add(out, a)
            return out
        if head == "-":
            return nm.neg(args[0]) if len(args) == 1 else nm.sub(args[0], args[1])
        if head == "*":
            return nm.mul(args[0], args[1])
        if head == "/":
            return nm.div(args[0], args[1])
        if head == "is_int":
            return nm.is_real(args[0]) and type(args[0]) is not nm.ExpNum and \
                Fraction(args[0]).denominator == 1
        if head == "g.exp":
            return nm.exp(args[0])
        if head in ("mk-pair", "inl", "inr", "rcons", "lcons"):
            return self._ctor(head, args)
        sel = {"fst": lambda v: v.fst, "snd": lambda v: v.snd, "left": lambda v: v.value,
               "right": lambda v: v.value, "rhd": lambda v: v[0], "rtl": lambda v: v[1:],
               "lhd": lambda v: v[0], "ltl": lambda v: v[1:]}
        if head in sel:
            return sel[head](args[0])
        if head in self.funs:
            params, body = self.funs[head]
            return self.ev(body, dict(zip(params, args)))
        raise EvalError(f"unknown function {head}")

    @staticmethod
    def _ctor(name, args):
        if name == "mk-pair":
            return VPair(args[0], args[1])
        if name == "inl":
            return VInl(args[0])
        if name == "inr":
            return VInr(args[0])
        return (args[0],) + tuple(args[1])


def _is(ctor: str, v) -> bool:
    return {"inl": type(v) is VInl, "inr": type(v) is VInr,
            "rnil": v == (), "lnil": v == (), "rcons": v != (), "lcons": v != (),
            "unit": v is UNIT, "mk-pair": type(v) is VPair}[ctor]


def eval_assertions(script: str, env: Dict[str, object]) -> List[bool]:
    """Truth value of every ``assert`` in ``script`` with constants taken from ``env``.

    ``env`` maps source-level names to runtime values.  Assertions about
    ``g.exp`` hold by construction and are evaluated like the others.
    """
    funs: Dict[str, tuple] = {}
    values = {_sym(n): v for n, v in env.items()}
    ev = _SmtEval(funs, values)
    out = []
    for cmd in parse_sexprs(script):
        if cmd[0] in ("define-fun", "define-fun-rec"):
            funs[cmd[1]] = ([p[0] for p in cmd[2]], cmd[4])
        elif cmd[0] == "assert":
            out.append(bool(ev.ev(cmd[1], {})))
    return out


__all__ = ["emit_smtlib", "eval_assertions", "parse_sexprs", "smt_filename", "sort_of", "PRELUDE"]
