"""Abstract syntax, surface parser, pretty-printer, substitution and erasure.

The language is fine-grain call-by-value: value terms and computation terms
live in separate classes.  Ground value terms (no lambdas, no recursion, but
with projections and literals) are shared with formulas and effect terms.
All AST nodes are frozen dataclasses, so structural equality is plain ``==``.
"""
from __future__ import annotations

import re
from contextlib import contextmanager
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

from .numeric import parse_number

# ---------------------------------------------------------------------------
# Value terms (including the ground fragment)


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class UnitV:
    pass


@dataclass(frozen=True)
class Lit:
    """A literal constant: a number (int or Fraction) or an event name."""
    value: object


@dataclass(frozen=True)
class Pair:
    fst: "Value"
    snd: "Value"


@dataclass(frozen=True)
class Inl:
    value: "Value"


@dataclass(frozen=True)
class Inr:
    value: "Value"


@dataclass(frozen=True)
class Fst:
    value: "Value"


@dataclass(frozen=True)
class Snd:
    value: "Value"


@dataclass(frozen=True)
class OpApp:
    op: str
    arg: "Value"


@dataclass(frozen=True)
class Lam:
    x: str
    body: "Comp"


@dataclass(frozen=True)
class RecFun:
    f: str
    x: str
    body: "Comp"


Value = Union[Var, UnitV, Lit, Pair, Inl, Inr, Fst, Snd, OpApp, Lam, RecFun]

# ---------------------------------------------------------------------------
# Computation terms

Span = Optional[Tuple[int, int]]


@dataclass(frozen=True)
class Return:
    value: Value
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Let:
    x: str
    head: "Comp"
    body: "Comp"
    grade: Optional["Effect"] = None
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class MatchPair:
    value: Value
    x: str
    y: str
    body: "Comp"
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class App:
    fn: Value
    arg: Value
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class GenEff:
    name: str
    arg: Value
    ghosts: Tuple[Value, ...] = ()
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Case:
    value: Value
    x: str
    left: "Comp"
    y: str
    right: "Comp"
    span: Span = field(default=None, compare=False, repr=False)


Comp = Union[Return, Let, MatchPair, App, GenEff, Case]

# ---------------------------------------------------------------------------
# Effect terms and formulas


@dataclass(frozen=True)
class EOne:
    pass


@dataclass(frozen=True)
class EMul:
    left: "Effect"
    right: "Effect"


@dataclass(frozen=True)
class EBasic:
    name: str
    arg: Value


Effect = Union[EOne, EMul, EBasic]


@dataclass(frozen=True)
class FTrue:
    pass


@dataclass(frozen=True)
class FFalse:
    pass


@dataclass(frozen=True)
class Atom:
    pred: str
    arg: Value


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Embed:
    """Boolean formula embedded as 0 (holds) or infinity (fails)."""
    body: "Formula"


@dataclass(frozen=True)
class RealF:
    """An extended-real valued formula given by an arithmetic term."""
    term: Value


Formula = Union[FTrue, FFalse, Atom, And, Or, Implies, Embed, RealF]

# ---------------------------------------------------------------------------
# Types

BASES = ("int", "nat", "real", "unit", "list", "list_list", "event")
NUMERIC = ("nat", "int", "real")


@dataclass(frozen=True)
class SBase:
    name: str


@dataclass(frozen=True)
class SProd:
    left: "SType"
    right: "SType"


@dataclass(frozen=True)
class SSum:
    left: "SType"
    right: "SType"


@dataclass(frozen=True)
class SComp:
    result: "SType"


@dataclass(frozen=True)
class SArrow:
    dom: "SType"
    cod: SComp


SType = Union[SBase, SProd, SSum, SArrow]
SBOOL = SSum(SBase("unit"), SBase("unit"))


@dataclass(frozen=True)
class RefBase:
    x: str
    base: str
    phi: Formula


@dataclass(frozen=True)
class DPair:
    x: str
    left: "RType"
    right: "RType"


@dataclass(frozen=True)
class Graded:
    effect: Effect
    result: "RType"


@dataclass(frozen=True)
class DFun:
    x: str
    dom: "RType"
    cod: Graded


@dataclass(frozen=True)
class RSum:
    left: "RType"
    right: "RType"


RType = Union[RefBase, DPair, DFun, RSum]

# ---------------------------------------------------------------------------
# Programs


@dataclass(frozen=True)
class Decl:
    """A top-level declaration.

    ``type`` is a value type or a graded computation type; ``term`` is a
    value, a computation, or ``None`` for an assumed context parameter.
    """
    name: str
    type: Optional[Union[RType, Graded]]
    term: Optional[Union[Value, "Comp"]]
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Program:
    instance: str
    decls: Tuple[Decl, ...]

    def decl(self, name: str) -> Decl:
        for d in self.decls:
            if d.name == name:
                return d
        raise KeyError(name)


class ParseError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}")
        self.line, self.col = line, col


INSTANCES = ("cost", "temporal", "ubound", "expect")

# Operator names known to the parser.  Semantics live in ``prelude``.
INFIX = {"+": "+", "-": "-", "*": "*", "/": "/", "::": "cons", "&&": "and", "||": "or"}
RELOPS = ("=", "<=", "<", ">=", ">", "<>")
PREFIX_OPS = ("neg", "min", "max", "abs", "exp", "not", "iv", "len", "head", "lhead", "tail",
              "cons", "cdf", "filter_le", "maxdev", "and", "or")
NULLARY_OPS = ("nil", "lnil")
GENEFFS = ("Tick", "Emit", "Bern", "BernFail", "Lap")
BASIC_EFFECTS = ("nat2eff", "push", "pop", "stack", "event", "r2eff")
NULLARY_EFFECTS = ("push", "pop")
KEYWORDS = {"let", "rec", "in", "val", "fun", "return", "match", "with", "case", "of",
            "inl", "inr", "if", "then", "else", "true", "false", "fst", "snd", "not", "T"}

# ---------------------------------------------------------------------------
# Fresh names

_supply = {"next": 1, "high": 1}


def fresh(base: str = "v", avoid: Iterable[str] = ()) -> str:
    stem = re.sub(r"_\d+$", "", base) or "v"
    avoid = set(avoid)
    while True:
        n = _supply["next"]
        _supply["next"] = n + 1
        _supply["high"] = max(_supply["high"], n + 1)
        name = f"{stem}_{n}"
        if name not in avoid:
            return name


@contextmanager
def fresh_scope():
    """Number fresh names from 1 inside the block.

    Output produced inside the block is then independent of earlier work in
    the process.  Terms created inside must not be mixed with terms created
    before the block; on exit numbering resumes above every name handed out.
    """
    saved = _supply["next"]
    _supply["next"] = 1
    try:
        yield
    finally:
        _supply["next"] = max(saved, _supply["high"])


# ---------------------------------------------------------------------------
# Free variables


def fv(node) -> FrozenSet[str]:
    """Free variables of any AST node (values, computations, types, ...)."""
    return frozenset(_fv(node))


def _fv(n) -> set:
    t = type(n)
    if t is Var:
        return {n.name}
    if t in (UnitV, Lit, FTrue, FFalse, EOne):
        return set()
    if t is Lam:
        return _fv(n.body) - {n.x}
    if t is RecFun:
        return _fv(n.body) - {n.f, n.x}
    if t is Let:
        s = _fv(n.head) | (_fv(n.body) - {n.x})
        return s | (_fv(n.grade) if n.grade is not None else set())
    if t is MatchPair:
        return _fv(n.value) | (_fv(n.body) - {n.x, n.y})
    if t is Case:
        return _fv(n.value) | (_fv(n.left) - {n.x}) | (_fv(n.right) - {n.y})
    if t is GenEff:
        s = _fv(n.arg)
        for g in n.ghosts:
            s |= _fv(g)
        return s
    if t is RefBase:
        return _fv(n.phi) - {n.x}
    if t in (DPair, DFun):
        a = n.left if t is DPair else n.dom
        b = n.right if t is DPair else n.cod
        return _fv(a) | (_fv(b) - {n.x})
    out = set()
    for f in fields(n):
        if f.name == "span":
            continue
        v = getattr(n, f.name)
        if isinstance(v, tuple):
            for item in v:
                out |= _fv(item)
        elif hasattr(v, "__dataclass_fields__"):
            out |= _fv(v)
    return out


def is_ground(v) -> bool:
    """Ground value terms contain no lambdas or recursive functions."""
    t = type(v)
    if t in (Lam, RecFun):
        return False
    if t in (Var, UnitV, Lit):
        return True
    if t is Pair:
        return is_ground(v.fst) and is_ground(v.snd)
    if t in (Inl, Inr, Fst, Snd):
        return is_ground(v.value)
    if t is OpApp:
        return is_ground(v.arg)
    return False


# ---------------------------------------------------------------------------
# Capture-avoiding substitution


def subst(node, x: str, v: Value):
    """Replace free occurrences of ``x`` in ``node`` by the value ``v``."""
    if type(v) is Var and v.name == x:
        return node
    return _subst(node, x, v, fv(v))


def subst_many(node, mapping: Dict[str, Value]):
    for k, val in mapping.items():
        node = subst(node, k, val)
    return node


def _binder(n, attr: str, body_attrs: Sequence[str], x, v, fvv):
    """Handle one binder: stop at shadowing, rename on capture."""
    b = getattr(n, attr)
    if b == x:
        return n, True
    if b in fvv:
        nb = fresh(b, fvv | _fv(n))
        changes = {a: subst(getattr(n, a), b, Var(nb)) for a in body_attrs}
        changes[attr] = nb
        n = replace(n, **changes)
    return n, False


def _subst(n, x, v, fvv):
    t = type(n)
    if t is Var:
        return v if n.name == x else n
    if t in (UnitV, Lit, FTrue, FFalse, EOne):
        return n
    if t is Lam:
        n, stop = _binder(n, "x", ["body"], x, v, fvv)
        return n if stop else replace(n, body=_subst(n.body, x, v, fvv))
    if t is RecFun:
        if x in (n.f, n.x):
            return n
        n, _ = _binder(n, "f", ["body"], x, v, fvv)
        n, _ = _binder(n, "x", ["body"], x, v, fvv)
        return replace(n, body=_subst(n.body, x, v, fvv))
    if t is Let:
        head = _subst(n.head, x, v, fvv)
        grade = _subst(n.grade, x, v, fvv) if n.grade is not None else None
        n2, stop = _binder(n, "x", ["body"], x, v, fvv)
        body = n2.body if stop else _subst(n2.body, x, v, fvv)
        return replace(n2, head=head, body=body, grade=grade)
    if t is MatchPair:
        val = _subst(n.value, x, v, fvv)
        if x in (n.x, n.y):
            return replace(n, value=val)
        n, _ = _binder(n, "x", ["body"], x, v, fvv)
        n, _ = _binder(n, "y", ["body"], x, v, fvv)
        return replace(n, value=val, body=_subst(n.body, x, v, fvv))
    if t is Case:
        val = _subst(n.value, x, v, fvv)
        n1, stop1 = _binder(n, "x", ["left"], x, v, fvv)
        left = n1.left if stop1 else _subst(n1.left, x, v, fvv)
        n2, stop2 = _binder(n1, "y", ["right"], x, v, fvv)
        right = n2.right if stop2 else _subst(n2.right, x, v, fvv)
        return replace(n2, value=val, left=left, right=right)
    if t is RefBase:
        n, stop = _binder(n, "x", ["phi"], x, v, fvv)
        return n if stop else replace(n, phi=_subst(n.phi, x, v, fvv))
    if t is DPair:
        left = _subst(n.left, x, v, fvv)
        n, stop = _binder(n, "x", ["right"], x, v, fvv)
        return replace(n, left=left, right=n.right if stop else _subst(n.right, x, v, fvv))
    if t is DFun:
        dom = _subst(n.dom, x, v, fvv)
        n, stop = _binder(n, "x", ["cod"], x, v, fvv)
        return replace(n, dom=dom, cod=n.cod if stop else _subst(n.cod, x, v, fvv))
    changes = {}
    for f in fields(n):
        if f.name == "span":
            continue
        val = getattr(n, f.name)
        if isinstance(val, tuple):
            changes[f.name] = tuple(_subst(i, x, v, fvv) for i in val)
        elif hasattr(val, "__dataclass_fields__"):
            changes[f.name] = _subst(val, x, v, fvv)
    return replace(n, **changes) if changes else n


def rename_binder(ty, new: str):
    """Rename the outermost binder of a dependent type to ``new``."""
    if isinstance(ty, (RefBase, DPair, DFun)) and ty.x != new:
        if isinstance(ty, RefBase):
            return RefBase(new, ty.base, subst(ty.phi, ty.x, Var(new)))
        if isinstance(ty, DPair):
            return DPair(new, ty.left, subst(ty.right, ty.x, Var(new)))
        return DFun(new, ty.dom, subst(ty.cod, ty.x, Var(new)))
    return ty


# ---------------------------------------------------------------------------
# Erasure


def erase(t):
    """Forget formulas and effect terms; contexts erase pointwise."""
    if isinstance(t, list):
        return [(n, erase(a)) for n, a in t]
    if isinstance(t, tuple) and t and isinstance(t[0], tuple):
        return tuple((n, erase(a)) for n, a in t)
    ty = type(t)
    if ty is RefBase:
        return SBase(t.base)
    if ty is DPair:
        return SProd(erase(t.left), erase(t.right))
    if ty is RSum:
        return SSum(erase(t.left), erase(t.right))
    if ty is DFun:
        return SArrow(erase(t.dom), erase(t.cod))
    if ty is Graded:
        return SComp(erase(t.result))
    raise TypeError(f"cannot erase {t!r}")


def is_ground_stype(s) -> bool:
    if isinstance(s, SBase):
        return True
    if isinstance(s, (SProd, SSum)):
        return is_ground_stype(s.left) and is_ground_stype(s.right)
    return False


# ---------------------------------------------------------------------------
# Lexer

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<pragma>\#instance)
  | (?P<num>\d+(?:\.\d+|/\d+)?)
  | (?P<str>"[^"]*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>/\\|\\/|=>|->|<=|>=|<>|::|&&|\|\||[()\[\]{}|:,*+\-/=<>.;@·])
""", re.VERBOSE)


@dataclass(frozen=True)
class Tok:
    kind: str
    text: str
    line: int
    col: int


def _strip_comments(src: str) -> str:
    out, depth, i = [], 0, 0
    while i < len(src):
        if src.startswith("(*", i):
            depth += 1
            out.append("  ")
            i += 2
        elif src.startswith("*)", i) and depth:
            depth -= 1
            out.append("  ")
            i += 2
        else:
            ch = src[i]
            out.append(ch if depth == 0 or ch == "\n" else " ")
            i += 1
    if depth:
        raise ParseError("unterminated comment")
    return "".join(out)


def tokenize(src: str) -> List[Tok]:
    src = _strip_comments(src)
    toks, pos, line, col = [], 0, 1, 1
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m:
            raise ParseError(f"unexpected character {src[pos]!r}", line, col)
        text = m.group(0)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(Tok(kind, "·" if text == "·" else text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    toks.append(Tok("eof", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# Parser


class _Backtrack(Exception):
    pass


class Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.i = 0
        self.embed_depth = 0

    # token helpers -------------------------------------------------------
    def peek(self, k: int = 0) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, *texts: str) -> bool:
        t = self.peek()
        return t.kind in ("sym", "ident", "pragma") and t.text in texts

    def take(self) -> Tok:
        t = self.peek()
        self.i += 1
        return t

    def expect(self, text: str) -> Tok:
        t = self.peek()
        if t.text != text or t.kind == "str":
            raise self.error(f"expected {text!r}, found {t.text or 'end of input'!r}")
        return self.take()

    def error(self, msg: str) -> ParseError:
        t = self.peek()
        return ParseError(msg, t.line, t.col)

    def ident(self) -> str:
        t = self.peek()
        if t.kind != "ident" or t.text in KEYWORDS:
            raise self.error(f"expected identifier, found {t.text or 'end of input'!r}")
        self.take()
        return t.text

    def span(self) -> Tuple[int, int]:
        t = self.peek()
        return (t.line, t.col)

    def attempt(self, fn):
        save = self.i
        try:
            return fn()
        except (ParseError, _Backtrack):
            self.i = save
            return None

    # program -------------------------------------------------------------
    def program(self) -> Tuple[str, List[Decl]]:
        if not self.at("#instance"):
            raise self.error("missing '#instance' pragma")
        self.take()
        inst = self.ident()
        if inst not in INSTANCES:
            raise ParseError(f"unknown instance {inst!r}", self.peek(-1).line, self.peek(-1).col)
        decls = []
        while self.peek().kind != "eof":
            decls.append(self.decl())
        return inst, decls

    def decl(self) -> Tuple[str, str, object, Span]:
        sp = self.span()
        if self.at("val"):
            self.take()
            name = self.ident()
            self.expect(":")
            ty = self.any_type()
            return ("val", name, ty, sp)
        self.expect("let")
        rec = False
        if self.at("rec"):
            self.take()
            rec = True
        name = self.ident()
        params = self.params()
        ty = None
        if self.at(":"):
            self.take()
            ty = self.any_type()
        self.expect("=")
        body = self.comp_or_value()
        term = self.make_function(name, rec, params, body, sp)
        return ("let", name, (ty, term), sp)

    def params(self) -> List[object]:
        ps = []
        while True:
            if self.peek().kind == "ident" and self.peek().text not in KEYWORDS:
                ps.append(self.ident())
            elif self.at("(") and self.peek(1).text == ")":
                self.take(), self.take()
                ps.append(())
            elif self.at("(") and self.peek(1).kind == "ident" and self.peek(2).text == ",":
                self.take()
                names = [self.ident()]
                while self.at(","):
                    self.take()
                    names.append(self.ident())
                self.expect(")")
                ps.append(tuple(names))
            else:
                return ps

    def make_function(self, name, rec, params, body, sp):
        if not params:
            if rec:
                raise ParseError("'let rec' needs a parameter", *sp)
            return body
        comp = body if not _is_value(body) else Return(body, span=sp)
        for p in reversed(params[1:]):
            x, comp = self._bind_param(p, comp, sp)
            comp = Return(Lam(x, comp), span=sp)
        x, comp = self._bind_param(params[0], comp, sp)
        return RecFun(name, x, comp) if rec else Lam(x, comp)

    def _bind_param(self, p, comp, sp):
        if isinstance(p, str):
            return p, comp
        if p == ():
            return fresh("u"), comp
        x = fresh("p")
        return x, _destructure(Var(x), list(p), comp, sp)

    # types ---------------------------------------------------------------
    def any_type(self):
        if self.at("T") and self.peek(1).text == "[":
            return self.ctype()
        return self.rtype()

    def ctype(self) -> Graded:
        self.expect("T")
        self.expect("[")
        eff = self.effect()
        self.expect("]")
        ty, _ = self.rsum()
        return Graded(eff, ty)

    def rtype(self) -> RType:
        ty, names = self.rsum()
        if self.at("->"):
            self.take()
            cod = self.ctype()
            if isinstance(names, str):
                return DFun(names, ty, cod)
            x = fresh("p")
            mapping = {}
            if isinstance(names, dict):
                mapping = {n: path(Var(x)) for n, path in names.items()}
            return DFun(x, ty, subst_many(cod, mapping))
        return ty

    def rsum(self):
        left, names = self.rprod()
        if self.at("+"):
            self.take()
            right, _ = self.rsum()
            return RSum(left, right), None
        return left, names

    def rprod(self):
        left, lname = self.ratom()
        if self.at("*"):
            self.take()
            right, rnames = self.rprod()
            x = lname if isinstance(lname, str) else fresh("v")
            names = {}
            if isinstance(lname, str):
                names[lname] = Fst
            if isinstance(rnames, str):
                names[rnames] = Snd
            elif isinstance(rnames, dict):
                for n, path in rnames.items():
                    names[n] = (lambda p: (lambda v: p(Snd(v))))(path)
            return DPair(x, left, right), names
        return left, lname

    def ratom(self):
        if self.at("{"):
            self.take()
            x = self.ident()
            self.expect(":")
            b = self.ident()
            if b not in BASES:
                raise self.error(f"unknown base type {b!r}")
            self.expect("|")
            phi = self.formula()
            self.expect("}")
            return RefBase(x, b, phi), None
        if self.at("(") and self.peek(1).kind == "ident" and self.peek(2).text == ":":
            self.take()
            name = self.ident()
            self.expect(":")
            ty = self.rtype()
            self.expect(")")
            return ty, name
        if self.at("("):
            self.take()
            ty = self.rtype()
            self.expect(")")
            return ty, None
        name = self.ident()
        if name == "bool":
            return RSum(RefBase(fresh("u"), "unit", FTrue()), RefBase(fresh("u"), "unit", FTrue())), None
        if name not in BASES:
            raise ParseError(f"unknown base type {name!r}", self.peek(-1).line, self.peek(-1).col)
        return RefBase(fresh("v"), name, FTrue()), None

    # effects -------------------------------------------------------------
    def effect(self) -> Effect:
        e = self.eatom()
        while self.at(".", "·"):
            self.take()
            e = EMul(e, self.eatom())
        return e

    def eatom(self) -> Effect:
        t = self.peek()
        if t.kind == "num" and t.text == "1":
            self.take()
            return EOne()
        if self.at("("):
            self.take()
            e = self.effect()
            self.expect(")")
            return e
        name = self.ident()
        if name not in BASIC_EFFECTS:
            raise ParseError(f"unknown basic effect {name!r}", t.line, t.col)
        if name in NULLARY_EFFECTS and not self.at("("):
            return EBasic(name, UnitV())
        return EBasic(name, self.atom())

    # formulas ------------------------------------------------------------
    def formula(self) -> Formula:
        left = self.fdisj()
        if self.at("=>"):
            self.take()
            return Implies(left, self.formula())
        return left

    def fdisj(self) -> Formula:
        f = self.fconj()
        while self.at("\\/"):
            self.take()
            f = Or(f, self.fconj())
        return f

    def fconj(self) -> Formula:
        f = self.fnot()
        while self.at("/\\"):
            self.take()
            f = And(f, self.fnot())
        return f

    def fnot(self) -> Formula:
        if self.at("not") and not (self.peek(1).text == "("
                                   and self.attempt(lambda: self._fatom_expr_probe())):
            self.take()
            return Implies(self.fnot(), FFalse())
        return self.fatom()

    def _fatom_expr_probe(self):
        # 'not (...)' followed by an operator is an arithmetic/boolean value term
        self.take()
        self.atom()
        if self.peek().text in ("=", "<=", "<", ">=", ">", "<>"):
            return True
        raise _Backtrack()

    def fatom(self) -> Formula:
        if self.at("true") and not self._followed_by_relop(1):
            self.take()
            return FTrue()
        if self.at("false") and not self._followed_by_relop(1):
            self.take()
            return FFalse()
        if self.at("<"):
            self.take()
            self.embed_depth += 1
            try:
                body = self.formula()
            finally:
                self.embed_depth -= 1
            self.expect(">")
            return Embed(body)
        if self.at("("):
            save = self.i
            closing = []

            def paren():
                self.take()
                f = self.formula()
                self.expect(")")
                nxt = self.peek().text
                if nxt == ">" and self.embed_depth:
                    # either a comparison or the end of the embedding
                    closing.append((f, self.i))
                    raise _Backtrack()
                if nxt in ("+", "-", "*", "/", "::", "&&", "||") + RELOPS:
                    raise _Backtrack()
                return f
            got = self.attempt(paren)
            if got is not None:
                return got
            self.i = save
            if closing:
                cmp = self.attempt(self._relation)
                if cmp is not None:
                    return cmp
                f, self.i = closing[0]
                return f
        return self._relation()

    def _relation(self) -> Formula:
        left = self.expr()
        if self.peek().kind == "sym" and self.peek().text in RELOPS:
            op = self.take().text
            right = self.expr()
            return _relop_formula(op, left, right)
        return RealF(left)

    def _followed_by_relop(self, k: int) -> bool:
        t = self.peek(k)
        return t.kind == "sym" and t.text in RELOPS + ("+", "-", "*", "/")

    # values --------------------------------------------------------------
    def value(self) -> Value:
        left = self.expr()
        if self.peek().kind == "sym" and self.peek().text in RELOPS:
            op = self.take().text
            right = self.expr()
            return _relop_value(op, left, right)
        return left

    def expr(self) -> Value:
        left = self.conj_expr()
        while self.at("||"):
            self.take()
            left = OpApp("or", Pair(left, self.conj_expr()))
        return left

    def conj_expr(self) -> Value:
        left = self.cons_expr()
        while self.at("&&"):
            self.take()
            left = OpApp("and", Pair(left, self.cons_expr()))
        return left

    def cons_expr(self) -> Value:
        left = self.add_expr()
        if self.at("::"):
            self.take()
            return OpApp("cons", Pair(left, self.cons_expr()))
        return left

    def add_expr(self) -> Value:
        left = self.mul_expr()
        while self.at("+", "-"):
            op = self.take().text
            left = OpApp(op, Pair(left, self.mul_expr()))
        return left

    def mul_expr(self) -> Value:
        left = self.unary()
        while self.at("*", "/"):
            op = self.take().text
            left = OpApp(op, Pair(left, self.unary()))
        return left

    def unary(self) -> Value:
        if self.at("-"):
            self.take()
            if self.peek().kind == "num":
                return Lit(-parse_number(self.take().text))
            return OpApp("neg", self.unary())
        return self.app()

    def app(self) -> Value:
        t = self.peek()
        if t.kind == "ident" and t.text in PREFIX_OPS and self._starts_atom(1):
            self.take()
            return OpApp(t.text, self.atom())
        if self.at("fst", "snd", "inl", "inr"):
            self.take()
            arg = self.atom()
            return {"fst": Fst, "snd": Snd, "inl": Inl, "inr": Inr}[t.text](arg)
        return self.atom()

    def _starts_atom(self, k: int = 0) -> bool:
        t = self.peek(k)
        if t.kind in ("num", "str"):
            return True
        if t.kind == "ident":
            return t.text not in KEYWORDS or t.text in ("true", "false", "fun", "rec", "not", "fst",
                                                       "snd", "inl", "inr")
        return t.kind == "sym" and t.text == "("

    def atom(self) -> Value:
        t = self.peek()
        if t.kind == "num":
            self.take()
            return Lit(parse_number(t.text))
        if t.kind == "str":
            self.take()
            return Lit(t.text[1:-1])
        if self.at("true"):
            self.take()
            return Inl(UnitV())
        if self.at("false"):
            self.take()
            return Inr(UnitV())
        if self.at("fst", "snd", "inl", "inr"):
            return self.app()
        if self.at("not"):
            self.take()
            return OpApp("not", self.atom())
        if self.at("("):
            self.take()
            if self.at(")"):
                self.take()
                return UnitV()
            if self.peek().kind == "sym" and self.peek(1).text == ")" and \
                    self.peek().text in tuple(INFIX) + ("=", "<=", "<"):
                op = self.take().text
                self.take()
                return OpApp(INFIX.get(op, op), self.atom())
            if self.at("fun", "rec"):
                v = self.lambda_()
                self.expect(")")
                return v
            items = [self.value()]
            while self.at(","):
                self.take()
                items.append(self.value())
            self.expect(")")
            out = items[-1]
            for it in reversed(items[:-1]):
                out = Pair(it, out)
            return out
        if t.kind == "ident" and t.text in NULLARY_OPS:
            self.take()
            return OpApp(t.text, UnitV())
        if t.kind == "ident" and t.text in PREFIX_OPS:
            raise self.error(f"operator {t.text!r} needs an argument")
        return Var(self.ident())

    def lambda_(self) -> Value:
        if self.at("fun"):
            self.take()
            params = self.params()
            if not params:
                raise self.error("'fun' needs a parameter")
            self.expect("->")
            body = self.comp()
            return self.make_function("", False, params, body, None)
        self.expect("rec")
        f = self.ident()
        params = self.params()
        self.expect("->")
        body = self.comp()
        return self.make_function(f, True, params, body, None)

    # computations --------------------------------------------------------
    def comp(self) -> Comp:
        c = self.comp_or_value()
        return Return(c) if _is_value(c) else c

    def comp_or_value(self):
        sp = self.span()
        if self.at("let"):
            self.take()
            if self.at("rec") or (self.peek().kind == "ident" and self.peek(1).text != "="
                                  and self.peek(1).text != ":"):
                rec = False
                if self.at("rec"):
                    self.take()
                    rec = True
                name = self.ident()
                params = self.params()
                self.expect("=")
                body = self.comp_or_value()
                fn = self.make_function(name, rec, params, body, sp)
                self.expect("in")
                return Let(name, Return(fn, span=sp), self.comp(), span=sp)
            if self.at("("):
                self.take()
                names = [self.ident()]
                while self.at(","):
                    self.take()
                    names.append(self.ident())
                self.expect(")")
                self.expect("=")
                head = self.comp()
                self.expect("in")
                grade = self._let_grade()
                x = fresh("p")
                return Let(x, head, _destructure(Var(x), names, self.comp(), sp), grade, span=sp)
            x = self.ident()
            self.expect("=")
            head = self.comp()
            self.expect("in")
            grade = self._let_grade()
            return Let(x, head, self.comp(), grade, span=sp)
        if self.at("if"):
            self.take()
            cond = self.value()
            self.expect("then")
            m = self.comp()
            self.expect("else")
            n = self.comp()
            return Case(cond, fresh("u"), m, fresh("u"), n, span=sp)
        if self.at("match"):
            self.take()
            v = self.value()
            self.expect("with")
            self.expect("(")
            x = self.ident()
            self.expect(",")
            y = self.ident()
            self.expect(")")
            self.expect("->")
            return MatchPair(v, x, y, self.comp(), span=sp)
        if self.at("case"):
            self.take()
            v = self.value()
            self.expect("of")
            self.expect("inl")
            x = self.ident()
            self.expect("->")
            m = self.comp()
            self.expect("|")
            self.expect("inr")
            y = self.ident()
            self.expect("->")
            return Case(v, x, m, y, self.comp(), span=sp)
        first = self.simple_comp()
        if self.at(";"):
            self.take()
            head = Return(first, span=sp) if _is_value(first) else first
            return Let(fresh("_"), head, self.comp(), span=sp)
        return first

    def _let_grade(self) -> Optional[Effect]:
        # 'in[E]' annotation: the '[' must directly follow 'in'
        if self.at("["):
            self.take()
            e = self.effect()
            self.expect("]")
            return e
        return None

    def simple_comp(self):
        sp = self.span()
        if self.at("return"):
            self.take()
            return Return(self.value(), span=sp)
        t = self.peek()
        if t.kind == "ident" and t.text in GENEFFS:
            self.take()
            arg = self.atom() if self._starts_atom() else UnitV()
            ghosts: Tuple[Value, ...] = ()
            if self.at("@"):
                self.take()
                if self.ident() != "ghost":
                    raise self.error("expected 'ghost'")
                self.expect("(")
                gs = [self.value()]
                while self.at(","):
                    self.take()
                    gs.append(self.value())
                self.expect(")")
                ghosts = tuple(gs)
            return GenEff(t.text, arg, ghosts, span=sp)
        if self.at("("):
            got = self.attempt(self._paren_comp)
            if got is not None:
                return got
        head = self.value()
        if self._starts_atom() and isinstance(head, (Var, Lam, RecFun)):
            args = [self.atom()]
            while self._starts_atom():
                args.append(self.atom())
            comp = App(head, args[0], span=sp)
            for a in args[1:]:
                g = fresh("g")
                comp = Let(g, comp, App(Var(g), a, span=sp), span=sp)
            return comp
        return head

    def _paren_comp(self):
        self.take()
        c = self.comp_or_value()
        self.expect(")")
        if _is_value(c):
            raise _Backtrack()
        if self._starts_atom() or self.peek().text in ("+", "-", "*", "/", "::") + RELOPS:
            raise _Backtrack()
        return c


def _is_value(c) -> bool:
    return isinstance(c, (Var, UnitV, Lit, Pair, Inl, Inr, Fst, Snd, OpApp, Lam, RecFun))


def _destructure(v: Value, names: List[str], body: Comp, sp) -> Comp:
    if len(names) == 2:
        return MatchPair(v, names[0], names[1], body, span=sp)
    rest = fresh("p")
    return MatchPair(v, names[0], rest, _destructure(Var(rest), names[1:], body, sp), span=sp)


def _relop_value(op: str, a: Value, b: Value) -> Value:
    if op == ">=":
        return OpApp("<=", Pair(b, a))
    if op == ">":
        return OpApp("<", Pair(b, a))
    if op == "<>":
        return OpApp("not", OpApp("=", Pair(a, b)))
    return OpApp(op, Pair(a, b))


def _relop_formula(op: str, a: Value, b: Value) -> Formula:
    if op == ">=":
        return Atom("<=", Pair(b, a))
    if op == ">":
        return Atom("<", Pair(b, a))
    if op == "<>":
        return Implies(Atom("=", Pair(a, b)), FFalse())
    return Atom(op, Pair(a, b))


# ---------------------------------------------------------------------------
# Alpha normalization


class _Alpha:
    """Renames binders so that each binder name is unique in a declaration."""

    def __init__(self, reserved: Iterable[str]):
        self.used = set(reserved)

    def bind(self, name: str, scope: Dict[str, str]) -> Tuple[str, Dict[str, str]]:
        new = name
        if new in self.used:
            new = fresh(name, self.used)
        self.used.add(new)
        s = dict(scope)
        s[name] = new
        return new, s

    def go(self, n, scope: Dict[str, str]):
        t = type(n)
        if n is None:
            return None
        if t is Var:
            return Var(scope.get(n.name, n.name))
        if t in (UnitV, Lit, FTrue, FFalse, EOne):
            return n
        if t is Lam:
            x, s = self.bind(n.x, scope)
            return Lam(x, self.go(n.body, s))
        if t is RecFun:
            f, s = self.bind(n.f, scope)
            x, s = self.bind(n.x, s)
            return RecFun(f, x, self.go(n.body, s))
        if t is Let:
            head = self.go(n.head, scope)
            grade = self.go(n.grade, scope)
            x, s = self.bind(n.x, scope)
            return Let(x, head, self.go(n.body, s), grade, span=n.span)
        if t is MatchPair:
            v = self.go(n.value, scope)
            x, s = self.bind(n.x, scope)
            y, s = self.bind(n.y, s)
            return MatchPair(v, x, y, self.go(n.body, s), span=n.span)
        if t is Case:
            v = self.go(n.value, scope)
            x, s1 = self.bind(n.x, scope)
            left = self.go(n.left, s1)
            y, s2 = self.bind(n.y, scope)
            return Case(v, x, left, y, self.go(n.right, s2), span=n.span)
        if t is RefBase:
            x, s = self.bind(n.x, scope)
            return RefBase(x, n.base, self.go(n.phi, s))
        if t is DPair:
            left = self.go(n.left, scope)
            x, s = self.bind(n.x, scope)
            return DPair(x, left, self.go(n.right, s))
        if t is DFun:
            dom = self.go(n.dom, scope)
            x, s = self.bind(n.x, scope)
            return DFun(x, dom, self.go(n.cod, s))
        changes = {}
        for f in fields(n):
            if f.name == "span":
                continue
            val = getattr(n, f.name)
            if isinstance(val, tuple):
                changes[f.name] = tuple(self.go(i, scope) for i in val)
            elif hasattr(val, "__dataclass_fields__"):
                changes[f.name] = self.go(val, scope)
        return replace(n, **changes) if changes else n


def alpha_normalize(node, reserved: Iterable[str] = ()):
    return _Alpha(reserved).go(node, {})


# ---------------------------------------------------------------------------
# Entry points


def parse_program(source: str) -> Program:
    """Parse a ``.dfx`` source into an alpha-normalized :class:`Program`.

    A ``val`` without a matching ``let`` declares a context parameter; a
    ``val`` followed by ``let`` of the same name annotates the definition.
    """
    p = Parser(source)
    inst, raw = p.program()
    vals: Dict[str, Tuple[object, Span]] = {}
    lets: Dict[str, Span] = {}
    order: List[str] = []
    defs: Dict[str, Tuple[object, object, Span]] = {}
    for kind, name, payload, sp in raw:
        if kind == "val":
            if name in vals:
                raise ParseError(f"duplicate top-level name {name!r}", *sp)
            vals[name] = (payload, sp)
            if name not in order:
                order.append(name)
        else:
            if name in lets:
                raise ParseError(f"duplicate top-level name {name!r}", *sp)
            ty, term = payload
            if ty is not None and name in vals:
                raise ParseError(f"{name!r} is annotated twice", *sp)
            lets[name] = sp
            defs[name] = (ty, term, sp)
            if name not in order:
                order.append(name)
    globals_ = set(order)
    decls = []
    for name in order:
        ty, term, sp = None, None, None
        if name in vals:
            ty, sp = vals[name]
        if name in defs:
            dty, term, sp = defs[name]
            ty = ty if ty is not None else dty
        ty = alpha_normalize(ty, globals_) if ty is not None else None
        if term is not None:
            if isinstance(ty, Graded) and _is_value(term):
                term = Return(term, span=sp)
            term = alpha_normalize(term, globals_ - {name})
        decls.append(Decl(name, ty, term, span=sp))
    return Program(inst, tuple(decls))


def parse_type(text: str):
    p = Parser(text)
    ty = p.any_type()
    if p.peek().kind != "eof":
        raise p.error("trailing input after type")
    return ty


def parse_formula(text: str) -> Formula:
    p = Parser(text)
    f = p.formula()
    if p.peek().kind != "eof":
        raise p.error("trailing input after formula")
    return f


def parse_effect(text: str) -> Effect:
    p = Parser(text)
    e = p.effect()
    if p.peek().kind != "eof":
        raise p.error("trailing input after effect")
    return e


def parse_value(text: str) -> Value:
    p = Parser(text)
    v = p.value()
    if p.peek().kind != "eof":
        raise p.error("trailing input after value")
    return v


def parse_comp(text: str) -> Comp:
    p = Parser(text)
    c = p.comp()
    if p.peek().kind != "eof":
        raise p.error("trailing input after computation")
    return c


# ---------------------------------------------------------------------------
# Pretty-printer (canonical, fully parenthesized, reparses to the same AST)

_INFIX_OUT = {"+": "+", "-": "-", "*": "*", "/": "/", "cons": "::", "and": "&&", "or": "||",
              "=": "=", "<=": "<=", "<": "<"}


def pretty(n) -> str:
    t = type(n)
    if t is Var:
        return n.name
    if t is UnitV:
        return "()"
    if t is Lit:
        v = n.value
        if isinstance(v, str):
            return f'"{v}"'
        if isinstance(v, Fraction) and v.denominator != 1:
            s = f"{abs(v.numerator)}/{v.denominator}"
        else:
            s = str(abs(int(v)))
        return f"(-{s})" if v < 0 else s
    if t is Pair:
        return f"({pretty(n.fst)}, {pretty(n.snd)})"
    if t in (Inl, Inr, Fst, Snd):
        kw = {Inl: "inl", Inr: "inr", Fst: "fst", Snd: "snd"}[t]
        return f"({kw} {_atom(n.value)})"
    if t is OpApp:
        if n.op in NULLARY_OPS and type(n.arg) is UnitV:
            return n.op
        if n.op in _INFIX_OUT and type(n.arg) is Pair:
            return f"({pretty(n.arg.fst)} {_INFIX_OUT[n.op]} {pretty(n.arg.snd)})"
        if n.op in _INFIX_OUT and n.op not in PREFIX_OPS:
            return f"(({_INFIX_OUT[n.op]}) {_atom(n.arg)})"
        return f"({n.op} {_atom(n.arg)})"
    if t is Lam:
        return f"(fun {n.x} -> {pretty(n.body)})"
    if t is RecFun:
        return f"(rec {n.f} {n.x} -> {pretty(n.body)})"
    if t is Return:
        return f"return {pretty(n.value)}"
    if t is Let:
        g = f"[{pretty(n.grade)}]" if n.grade is not None else ""
        return f"let {n.x} = {_paren_comp(n.head)} in{g} {pretty(n.body)}"
    if t is MatchPair:
        return f"match {pretty(n.value)} with ({n.x}, {n.y}) -> {pretty(n.body)}"
    if t is Case:
        return (f"case {pretty(n.value)} of inl {n.x} -> ({pretty(n.left)}) "
                f"| inr {n.y} -> ({pretty(n.right)})")
    if t is App:
        return f"{_atom(n.fn)} {_atom(n.arg)}"
    if t is GenEff:
        g = ""
        if n.ghosts:
            g = " @ghost(" + ", ".join(pretty(x) for x in n.ghosts) + ")"
        return f"{n.name} {_atom(n.arg)}{g}"
    if t is EOne:
        return "1"
    if t is EMul:
        return f"({pretty(n.left)} . {pretty(n.right)})"
    if t is EBasic:
        if n.name in NULLARY_EFFECTS and type(n.arg) is UnitV:
            return n.name
        return f"{n.name}{_atom(n.arg) if type(n.arg) in (Pair, UnitV) else '(' + pretty(n.arg) + ')'}"
    if t is FTrue:
        return "true"
    if t is FFalse:
        return "false"
    if t is Atom:
        if type(n.arg) is Pair:
            return f"({pretty(n.arg.fst)} {n.pred} {pretty(n.arg.snd)})"
        raise ValueError("atoms take a pair of arguments")
    if t is And:
        return f"({pretty(n.left)} /\\ {pretty(n.right)})"
    if t is Or:
        return f"({pretty(n.left)} \\/ {pretty(n.right)})"
    if t is Implies:
        return f"({pretty(n.left)} => {pretty(n.right)})"
    if t is Embed:
        return f"<{pretty(n.body)}>"
    if t is RealF:
        return pretty(n.term)
    if t is RefBase:
        return f"{{{n.x}:{n.base} | {pretty(n.phi)}}}"
    if t is DPair:
        return f"(({n.x} : {pretty(n.left)}) * {pretty(n.right)})"
    if t is RSum:
        return f"({pretty(n.left)} + {pretty(n.right)})"
    if t is DFun:
        return f"(({n.x} : {pretty(n.dom)}) -> {pretty(n.cod)})"
    if t is Graded:
        return f"T[{pretty(n.effect)}] {pretty(n.result)}"
    if t is SBase:
        return n.name
    if t is SProd:
        return f"({pretty(n.left)} * {pretty(n.right)})"
    if t is SSum:
        return f"({pretty(n.left)} + {pretty(n.right)})"
    if t is SArrow:
        return f"({pretty(n.dom)} -> {pretty(n.cod)})"
    if t is SComp:
        return f"T {pretty(n.result)}"
    if t is Decl:
        return pretty_decl(n)
    if t is Program:
        return pretty_program(n)
    raise TypeError(f"cannot print {n!r}")


def _atom(v) -> str:
    s = pretty(v)
    if type(v) in (Var, UnitV, Pair, Lit) or s.startswith("(") and _balanced_outer(s):
        return s
    return f"({s})"


def _balanced_outer(s: str) -> bool:
    depth = 0
    for i, ch in enumerate(s):
        depth += ch == "("
        depth -= ch == ")"
        if depth == 0 and i < len(s) - 1:
            return False
    return True


def _paren_comp(c) -> str:
    if type(c) in (Return, App, GenEff):
        return pretty(c)
    return f"({pretty(c)})"


def pretty_decl(d: Decl) -> str:
    lines = []
    if d.term is None:
        return f"val {d.name} : {pretty(d.type)}"
    if d.type is not None and not isinstance(d.type, Graded):
        lines.append(f"val {d.name} : {pretty(d.type)}")
        body = d.term
    else:
        body = d.term
    ann = f" : {pretty(d.type)}" if isinstance(d.type, Graded) else ""
    if isinstance(body, (Lam, RecFun)) or not isinstance(body, (Return, Let, MatchPair, App, GenEff, Case)):
        lines.append(f"let {d.name}{ann} = {pretty(body)}")
    else:
        lines.append(f"let {d.name}{ann} = {pretty(body)}")
    return "\n".join(lines)


def pretty_program(p: Program) -> str:
    return "\n".join([f"#instance {p.instance}"] + [pretty_decl(d) for d in p.decls]) + "\n"
