"""Discharging obligations by bounded enumeration, random falsification and SMT export.

``discharge_bounded`` decides an obligation *on a finite grid*: every ground
context variable ranges over a finite domain (see :class:`DomainBounds`), and
the obligation is Valid when it holds in every grid environment that satisfies
the context.  Validity on the grid is weaker than validity over the reals;
a Counterexample, however, is always genuine (it is a concrete environment).

Several reductions keep enumeration small without changing the verdict:

* relevance pruning: context entries not connected to the payload through
  shared variables are set aside (they are only consulted to confirm that a
  counterexample extends to them);
* candidate solving: a conjunct ``x = e`` fixes ``x`` to the value of ``e``
  (which may lie off-grid, making the check stronger, never weaker);
* bound extraction: conjuncts ``x <= e``, ``e < x`` and ``abs(x - m) <= t``
  restrict the grid of ``x``;
* exp abstraction (subeffect obligations only): variables that occur only
  under ``exp`` become independent positive atoms.  If the comparison holds
  for all atom values it holds for the actual ones; otherwise the full grid is
  used.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from . import numeric as nm
from .effects import Instance, get_instance
from .ground import (INF, eval_bool, eval_ext, eval_term, ext_fmt, ext_le, ext_max, simplify,
                     type_value)
from .prelude import UNIT, EvalError, VInl, VInr, VPair, base_member
from .syntax import (And, Atom, DFun, DPair, EOne, EMul, Embed, FTrue, Fst, Implies, Lit, OpApp,
                     Or, Pair, RealF, RefBase, RSum, Snd, Var, erase, fv, is_ground_stype, pretty)
from .typecheck import Implication, Obligation, Subeffect

# ---------------------------------------------------------------------------
# Results


@dataclass(frozen=True)
class DomainBounds:
    """Finite grids used by the bounded discharger."""
    int_bound: int = 64
    real_denominator: int = 8
    list_max_len: int = 3
    list_elems: Tuple[object, ...] = (0, 1)
    list_list_max_len: int = 3
    inner_lists: Tuple[Tuple[object, ...], ...] = ((), (0,), (0, 0))
    events: Tuple[str, ...] = ("push", "pop")
    max_envs: int = 10 ** 7


@dataclass(frozen=True)
class Valid:
    method: str
    envs: int = 0


@dataclass(frozen=True)
class Counterexample:
    env: Tuple[Tuple[str, object], ...]
    method: str = "bounded"

    def as_dict(self) -> Dict[str, object]:
        return dict(self.env)


@dataclass(frozen=True)
class Unknown:
    reason: str


@dataclass(frozen=True)
class NoCounterexampleFound:
    trials: int


DischargeResult = Union[Valid, Counterexample, Unknown]


def value_to_json(v):
    """Render a runtime value as JSON-friendly data."""
    if v is UNIT:
        return "()"
    if isinstance(v, bool):
        return v
    if nm.is_real(v):
        return nm.fmt(v) if not isinstance(v, int) else v
    if isinstance(v, str):
        return v
    if type(v) is tuple:
        return [value_to_json(x) for x in v]
    if type(v) is VPair:
        return [value_to_json(v.fst), value_to_json(v.snd)]
    if type(v) is VInl:
        return {"inl": value_to_json(v.value)}
    if type(v) is VInr:
        return {"inr": value_to_json(v.value)}
    return repr(v)


def result_to_json(r) -> dict:
    if isinstance(r, Valid):
        return {"status": "valid", "method": r.method, "envs": r.envs}
    if isinstance(r, Counterexample):
        return {"status": "counterexample", "method": r.method,
                "env": {k: value_to_json(v) for k, v in r.env}}
    if isinstance(r, NoCounterexampleFound):
        return {"status": "no-counterexample", "trials": r.trials}
    return {"status": "unknown", "reason": r.reason}


# ---------------------------------------------------------------------------
# Formula helpers


def _conjuncts(f) -> List[object]:
    if type(f) is And:
        return _conjuncts(f.left) + _conjuncts(f.right)
    if type(f) is Embed and type(f.body) is And:
        return [Embed(c) for c in _conjuncts(f.body)]
    return [f]


def _is_boolean(f) -> bool:
    t = type(f)
    if t is RealF:
        return False
    if t in (And, Or, Implies):
        return _is_boolean(f.left) and _is_boolean(f.right)
    return True


def _boolean_part(phi):
    """The conjuncts of ``phi`` that take only the values 0 and infinity."""
    parts = [c for c in _conjuncts(phi) if _is_boolean(c)]
    if not parts:
        return FTrue()
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def _filter_boolean(ty):
    """``ty`` with every refinement reduced to its Boolean conjuncts."""
    if type(ty) is RefBase:
        return RefBase(ty.x, ty.base, _boolean_part(ty.phi))
    if type(ty) is DPair:
        return DPair(ty.x, _filter_boolean(ty.left), _filter_boolean(ty.right))
    if type(ty) is RSum:
        return RSum(_filter_boolean(ty.left), _filter_boolean(ty.right))
    return ty


def _strip_embed(f):
    while type(f) is Embed:
        f = f.body
    return f


def _solve(f, x: str) -> Optional[List[object]]:
    """Terms ``e`` such that every model of ``f`` has ``x = e`` for one of them."""
    f = _strip_embed(f)
    t = type(f)
    if t is Atom and f.pred == "=" and type(f.arg) is Pair:
        a, b = f.arg.fst, f.arg.snd
        if a == Var(x) and x not in fv(b):
            return [b]
        if b == Var(x) and x not in fv(a):
            return [a]
        return None
    if t is And:
        return _solve(f.left, x) or _solve(f.right, x)
    if t is Or:
        l, r = _solve(f.left, x), _solve(f.right, x)
        return l + r if l is not None and r is not None else None
    return None


@dataclass(frozen=True)
class _Scaled:
    """The bound ``coef * x <= rhs``; its direction depends on the sign of ``coef``."""
    coef: object
    rhs: object


def _op2(op, a, b):
    return OpApp(op, Pair(a, b))


def _linear(t, x: str) -> Optional[Tuple[object, object]]:
    """``(c, r)`` with ``t = c * x + r`` and neither ``c`` nor ``r`` mentioning ``x``."""
    if x not in fv(t):
        return Lit(0), t
    if t == Var(x):
        return Lit(1), Lit(0)
    if type(t) is not OpApp:
        return None
    if t.op == "neg":
        inner = _linear(t.arg, x)
        return None if inner is None else (OpApp("neg", inner[0]), OpApp("neg", inner[1]))
    if type(t.arg) is not Pair:
        return None
    a, b = t.arg.fst, t.arg.snd
    if t.op in ("+", "-"):
        la, lb = _linear(a, x), _linear(b, x)
        if la is None or lb is None:
            return None
        return _op2(t.op, la[0], lb[0]), _op2(t.op, la[1], lb[1])
    if t.op == "*":
        if x not in fv(a):
            a, b = b, a
        if x in fv(b):
            return None
        la = _linear(a, x)
        return None if la is None else (_op2("*", la[0], b), _op2("*", la[1], b))
    if t.op == "/" and x not in fv(b):
        la = _linear(a, x)
        return None if la is None else (_op2("/", la[0], b), _op2("/", la[1], b))
    return None


def _bounds(f, x: str) -> Tuple[List[object], List[object]]:
    """Lower and upper bound terms on ``x`` implied by ``f``.

    Entries are terms, or :class:`_Scaled` for bounds found by isolating ``x``
    in a linear comparison; those appear in both lists.
    """
    f = _strip_embed(f)
    t = type(f)
    lo, hi = [], []
    if t is And:
        l1, h1 = _bounds(f.left, x)
        l2, h2 = _bounds(f.right, x)
        return l1 + l2, h1 + h2
    if t is Atom and f.pred in ("<=", "<") and type(f.arg) is Pair:
        a, b = f.arg.fst, f.arg.snd
        if a == Var(x) and x not in fv(b):
            hi.append(b)
        elif b == Var(x) and x not in fv(a):
            lo.append(a)
        elif (type(a) is OpApp and a.op == "abs" and type(a.arg) is OpApp and a.arg.op == "-"
              and type(a.arg.arg) is Pair and a.arg.arg.fst == Var(x)
              and x not in fv(a.arg.arg.snd) and x not in fv(b)):
            m = a.arg.arg.snd
            lo.append(OpApp("-", Pair(m, b)))
            hi.append(OpApp("+", Pair(m, b)))
        elif x in fv(f.arg):
            la, lb = _linear(a, x), _linear(b, x)
            if la is not None and lb is not None:
                sc = _Scaled(_op2("-", la[0], lb[0]), _op2("-", lb[1], la[1]))
                lo.append(sc)
                hi.append(sc)
    return lo, hi


def _constants(node, out: set) -> None:
    from dataclasses import fields
    if type(node) is Lit:
        if nm.is_real(node.value):
            out.add(node.value)
        return
    if isinstance(node, tuple):
        for item in node:
            _constants(item, out)
        return
    if hasattr(node, "__dataclass_fields__"):
        for f in fields(node):
            if f.name != "span":
                _constants(getattr(node, f.name), out)


# ---------------------------------------------------------------------------
# Grids


class _Grids:
    def __init__(self, bounds: DomainBounds, constants: Iterable[object]):
        self.b = bounds
        q, B = bounds.real_denominator, bounds.int_bound
        self.consts = sorted({c for c in constants if type(c) is not nm.ExpNum
                              and -B <= c <= B}, key=Fraction)
        lists = [()]
        for n in range(1, bounds.list_max_len + 1):
            lists += list(itertools.product(bounds.list_elems, repeat=n))
        self.lists = lists
        llists = [()]
        for n in range(1, bounds.list_list_max_len + 1):
            llists += list(itertools.product(bounds.inner_lists, repeat=n))
        self.llists = llists

    def numeric(self, base: str, lo, hi) -> List[object]:
        B, q = self.b.int_bound, self.b.real_denominator
        flo = -B if lo is None else max(-B, lo)
        fhi = B if hi is None else min(B, hi)
        if base == "nat":
            flo = max(flo, 0)
        if flo > fhi:
            return []
        if base in ("int", "nat"):
            return list(range(math.ceil(flo), math.floor(fhi) + 1))
        ks = range(math.ceil(flo * q), math.floor(fhi * q) + 1)
        vals = {Fraction(k, q) for k in ks}
        vals |= {c for c in self.consts if flo <= c <= fhi}
        return [int(v) if Fraction(v).denominator == 1 else v for v in sorted(vals, key=Fraction)]

    def base(self, base: str, lo=None, hi=None) -> List[object]:
        if base in ("int", "nat", "real"):
            return self.numeric(base, lo, hi)
        if base == "unit":
            return [UNIT]
        if base == "list":
            return self.lists
        if base == "list_list":
            return self.llists
        if base == "event":
            return list(self.b.events)
        raise ValueError(f"no grid for base type {base!r}")


# ---------------------------------------------------------------------------
# The enumeration problem


class _TooMany(Exception):
    pass


class _Problem:
    """Ground entries to enumerate plus a goal over the resulting environment."""

    def __init__(self, inst: Instance, entries, goal, grids: _Grids, max_envs: int):
        self.inst = inst
        self.expect = inst.expect_omega
        self.entries = entries
        self.goal = goal
        self.grids = grids
        self.max_envs = max_envs
        self.count = 0

    # value generation -------------------------------------------------
    def _filter_part(self, phi):
        return _boolean_part(phi) if self.expect else phi

    def gen(self, ty, env) -> Iterator[object]:
        t = type(ty)
        if t is RefBase:
            yield from self._gen_base(ty, env)
        elif t is DPair:
            for a in self.gen(ty.left, env):
                old = env.get(ty.x, _MISSING)
                env[ty.x] = a
                try:
                    rights = list(self.gen(ty.right, env))
                finally:
                    _restore(env, ty.x, old)
                for b in rights:
                    yield VPair(a, b)
        elif t is RSum:
            for a in self.gen(ty.left, env):
                yield VInl(a)
            for b in self.gen(ty.right, env):
                yield VInr(b)
        else:
            raise EvalError("function-typed entries cannot be enumerated")

    def _gen_base(self, ty: RefBase, env) -> Iterator[object]:
        filt = self._filter_part(ty.phi)
        cands = _solve(filt, ty.x)
        if cands is not None:
            seen = []
            for c in cands:
                try:
                    v = eval_term(c, env)
                except (EvalError, nm.Undecided):
                    continue
                if base_member(v, ty.base) and v not in seen:
                    seen.append(v)
                    yield v
            return
        lo_terms, hi_terms = _bounds(filt, ty.x)
        lo = self._bound(lo_terms, env, max)
        hi = self._bound(hi_terms, env, min)
        yield from self.grids.base(ty.base, lo, hi)

    def _bound(self, terms, env, pick):
        vals = []
        q = self.grids.b.real_denominator
        for t in terms:
            try:
                if type(t) is _Scaled:
                    c = eval_term(t.coef, env)
                    if not nm.is_real(c) or nm.sign(c) == 0 or (nm.sign(c) > 0) != (pick is min):
                        continue
                    v = nm.div(eval_term(t.rhs, env), c)
                else:
                    v = eval_term(t, env)
            except (EvalError, nm.Undecided):
                continue
            if nm.is_real(v):
                f = nm.to_float(v) if type(v) is nm.ExpNum else v
                # widen by one grid step so that rounding never drops a point
                vals.append(Fraction(f) + (Fraction(-1, q) if pick is max else Fraction(1, q))
                            if type(v) is nm.ExpNum else Fraction(f))
        return pick(vals) if vals else None

    # search -----------------------------------------------------------
    def search(self, start: Optional[Dict[str, object]] = None
               ) -> Optional[Tuple[Dict[str, object], object]]:
        """First environment (in enumeration order) violating the goal."""
        env: Dict[str, object] = dict(start or {})
        acc0 = 0 if self.expect else True
        return self._go(0, env, acc0)

    def _go(self, i, env, acc):
        if i == len(self.entries):
            ok = self.goal(env, acc)
            return None if ok else (dict(env), acc)
        name, ty = self.entries[i]
        for v in self.gen(ty, env):
            self.count += 1
            if self.count > self.max_envs:
                raise _TooMany()
            env[name] = v
            val = type_value(ty, v, env, self.expect)
            if self.expect:
                if val is INF:
                    continue
                nacc = ext_max(acc, val)
            else:
                if not val:
                    continue
                nacc = True
            found = self._go(i + 1, env, nacc)
            if found is not None:
                return found
        env.pop(name, None)
        return None

    def minimum(self, start: Optional[Dict[str, object]] = None
                ) -> Optional[Tuple[Dict[str, object], object]]:
        """An admitted environment with the least context value (Boolean: any)."""
        best = [None]

        def goal(env, acc):
            if best[0] is None or (self.expect and not ext_le(best[0][1], acc)):
                best[0] = (dict(env), acc)
            return self.expect  # Boolean: stop at the first admitted env
        saved = self.goal
        self.goal = goal
        try:
            self.search(start)
        finally:
            self.goal = saved
        return best[0]


_MISSING = object()


def _restore(env, key, old):
    if old is _MISSING:
        env.pop(key, None)
    else:
        env[key] = old


# ---------------------------------------------------------------------------
# Discharge


def _ground_entries(context) -> List[Tuple[str, object]]:
    return [(n, t) for n, t in context if is_ground_stype(erase(t))]


def _deps(ty) -> set:
    return set(fv(ty))


def _schedule(entries):
    """Move single-valued (unit) entries right after their last dependency."""
    index = {n: i for i, (n, _) in enumerate(entries)}
    keyed = []
    for i, (n, t) in enumerate(entries):
        if isinstance(t, RefBase) and t.base == "unit":
            deps = [index[d] for d in _deps(t) if d in index]
            keyed.append(((max(deps) if deps else -1), 1, i, (n, t)))
        else:
            keyed.append((i, 0, i, (n, t)))
    keyed.sort(key=lambda k: k[:3])
    return [k[3] for k in keyed]


def _relevant(entries, seed: set) -> set:
    """Names the seed depends on, plus unit entries constraining only those names.

    Other entries may only shrink the set of environments, so leaving them out
    keeps Valid sound; counterexamples are checked against them afterwards.
    """
    types = dict(entries)
    rel, todo = set(), list(seed)
    while todo:
        n = todo.pop()
        if n in rel:
            continue
        rel.add(n)
        if n in types:
            todo.extend(_deps(types[n]) - rel)
    for n, t in entries:
        if n not in rel and isinstance(t, RefBase) and t.base == "unit" and _deps(t) <= rel:
            rel.add(n)
    return rel


def _syntactic(ob: Obligation, inst: Instance) -> Optional[str]:
    p = ob.payload
    if isinstance(p, Implication):
        cons = _conjuncts(p.consequent)
        ante = set(_conjuncts(p.antecedent))
        if all(type(c) is FTrue or c in ante for c in cons):
            return "syntactic"
        return None
    lhs = _flatten_eff(p.lhs)
    if lhs == _flatten_eff(p.rhs):
        return "syntactic"
    if not lhs and inst.unit_is_bottom:
        return "syntactic"
    return None


def _flatten_eff(e) -> Tuple[object, ...]:
    if type(e) is EOne:
        return ()
    if type(e) is EMul:
        return _flatten_eff(e.left) + _flatten_eff(e.right)
    return (e,)


def _prepare(ob: Obligation):
    """Simplified ground entries and payload of an obligation."""
    entries = [(n, simplify(t)) for n, t in _ground_entries(ob.context)]
    p = ob.payload
    if isinstance(p, Implication):
        entries.append((p.binder, RefBase(p.binder, p.base, simplify(p.antecedent))))
        payload = Implication(p.binder, p.base, simplify(p.antecedent), simplify(p.consequent))
        seed = set(fv(payload.consequent)) | set(fv(payload.antecedent)) | {p.binder}
    else:
        payload = Subeffect(simplify(p.lhs), simplify(p.rhs))
        seed = set(fv(payload.lhs)) | set(fv(payload.rhs))
    return entries, payload, seed


def _make_goal(inst: Instance, payload):
    if isinstance(payload, Implication):
        cons = payload.consequent
        if inst.expect_omega:
            return lambda env, acc: ext_le(eval_ext(cons, env), acc)
        return lambda env, acc: eval_bool(cons, env)
    lhs, rhs = payload.lhs, payload.rhs
    return lambda env, acc: inst.mleq(inst.eval_effect(lhs, env), inst.eval_effect(rhs, env))


def _goal_value(inst, payload, env):
    if isinstance(payload, Implication) and inst.expect_omega:
        return eval_ext(payload.consequent, env)
    return None


def discharge_bounded(ob: Obligation, instance: Union[str, Instance] = "cost",
                      bounds: DomainBounds = DomainBounds()) -> DischargeResult:
    """Decide ``ob`` on the finite grid described by ``bounds``."""
    inst = get_instance(instance) if isinstance(instance, str) else instance
    how = _syntactic(ob, inst)
    if how:
        return Valid(how)
    entries, payload, seed = _prepare(ob)
    names = {n for n, _ in entries}
    if not seed <= names:
        missing = sorted(seed - names)
        return Unknown(f"payload mentions non-ground or unbound variables {missing}")
    rel = _relevant(entries, seed)
    kept = _schedule([e for e in entries if e[0] in rel])
    dropped = _schedule([e for e in entries if e[0] not in rel])
    consts: set = set()
    _constants((tuple(t for _, t in entries), payload), consts)
    grids = _Grids(bounds, consts)
    try:
        if isinstance(payload, Subeffect):
            fast = _exp_abstraction(inst, kept, payload, grids, bounds)
            if fast is not None:
                return fast
        return _run(inst, kept, dropped, payload, grids, bounds, "bounded")
    except _TooMany:
        return Unknown(f"grid explosion: more than {bounds.max_envs} environments")
    except nm.Undecided as e:
        return Unknown(f"undecided comparison: {e}")
    except (EvalError, ZeroDivisionError, TypeError) as e:
        return Unknown(f"evaluation error: {e}")


def _run(inst, kept, dropped, payload, grids, bounds, method) -> DischargeResult:
    goal = _make_goal(inst, payload)
    extension: List[Dict[str, object]] = []

    def checked_goal(env, acc):
        if goal(env, acc):
            return True
        if not dropped:
            return False
        # the counterexample must extend to the set-aside entries
        sub = _Problem(inst, dropped, lambda e, a: True, grids, bounds.max_envs)
        best = sub.minimum(env)
        if best is None:
            return True
        if inst.expect_omega:
            g = _goal_value(inst, payload, env)
            if g is not None and ext_le(g, ext_max(acc, best[1])):
                return True
        extension[:] = [best[0]]
        return False

    prob = _Problem(inst, kept, checked_goal, grids, bounds.max_envs)
    found = prob.search()
    if found is None:
        return Valid(method, prob.count)
    env, _ = found
    if extension:
        env = {**extension[0], **env}
    order = [n for n, _ in kept] + [n for n, _ in dropped]
    return Counterexample(tuple((n, env[n]) for n in order if n in env), method)


def _exp_abstraction(inst, kept, payload: Subeffect, grids, bounds) -> Optional[Valid]:
    names = {n for n, _ in kept}
    cand = set()
    for n, t in kept:
        if isinstance(t, RefBase) and t.base in ("real", "int", "nat") and _deps(t) <= set():
            cand.add(n)
    for n, t in kept:
        cand -= _deps(t) - {n}
    if not cand:
        return None
    while True:
        bad = set()
        for side in (payload.lhs, payload.rhs):
            _exp_occurrences(side, cand, False, bad)
        if not bad:
            break
        cand -= bad
        if not cand:
            return None
    lhs = _abstract(payload.lhs, cand)
    rhs = _abstract(payload.rhs, cand)
    rest = [(n, t) for n, t in kept if n not in cand]
    try:
        res = _run(inst, rest, [], Subeffect(lhs, rhs), grids, bounds, "bounded+exp-atoms")
    except (nm.Undecided, EvalError):
        return None
    return res if isinstance(res, Valid) else None


def _exp_occurrences(node, cand, under_exp, bad) -> None:
    from dataclasses import fields
    t = type(node)
    if t is Var:
        if node.name in cand and not under_exp:
            bad.add(node.name)
        return
    if t is OpApp and node.op == "exp":
        inner = fv(node.arg)
        if inner & cand and not inner <= cand:
            bad |= inner & cand
        _exp_occurrences(node.arg, cand, inner <= cand, bad)
        return
    if hasattr(node, "__dataclass_fields__"):
        for f in fields(node):
            _exp_occurrences(getattr(node, f.name), cand, under_exp, bad)


def _abstract(node, cand):
    from dataclasses import fields, replace
    t = type(node)
    if t is OpApp and node.op == "exp" and fv(node.arg) and fv(node.arg) <= cand:
        return Lit(nm.symbolic_atom(pretty(node.arg)))
    if not hasattr(node, "__dataclass_fields__") or t in (Var, Lit):
        return node
    changes = {}
    for f in fields(node):
        v = getattr(node, f.name)
        if hasattr(v, "__dataclass_fields__"):
            changes[f.name] = _abstract(v, cand)
    return replace(node, **changes) if changes else node


# ---------------------------------------------------------------------------
# Random falsification


class _Sampler:
    def __init__(self, rng: random.Random, bounds: DomainBounds):
        self.rng = rng
        self.b = bounds

    def number(self, base: str, lo=None, hi=None):
        r = self.rng
        roll = r.random()
        if lo is not None or hi is not None:
            if roll < 0.5:
                a = Fraction(lo) if lo is not None else Fraction(hi) - 10
                z = Fraction(hi) if hi is not None else a + 10
                if a <= z:
                    v = a + (z - a) * Fraction(r.randint(0, 64), 64)
                    return self._cast(v, base)
            roll = r.random()
        if roll < 0.35:
            v = Fraction(r.randint(-3, 3))
        elif roll < 0.6:
            v = Fraction(r.randint(-100, 100), r.choice((1, 1, 2, 3, 4, 8)))
        elif roll < 0.8:
            v = Fraction(r.randint(-10 ** 4, 10 ** 4), 100)
        elif roll < 0.95:
            v = Fraction(r.choice((-1, 1)) * 10 ** r.randint(2, 9))
        else:
            v = Fraction(0)
        return self._cast(v, base)

    @staticmethod
    def _cast(v: Fraction, base: str):
        if base in ("int", "nat"):
            v = Fraction(math.floor(v))
            if base == "nat":
                v = abs(v)
        return int(v) if v.denominator == 1 else v

    def base(self, base: str, lo=None, hi=None):
        r = self.rng
        if base in ("int", "nat", "real"):
            return self.number(base, lo, hi)
        if base == "unit":
            return UNIT
        if base == "event":
            return r.choice(self.b.events)
        if base == "list":
            return tuple(self.number("real") if r.random() < 0.3 else r.choice(self.b.list_elems)
                         for _ in range(r.randint(0, 5)))
        if base == "list_list":
            return tuple(self.base("list") for _ in range(r.randint(0, 4)))
        raise ValueError(base)


def falsify_sampling(ob: Obligation, instance: Union[str, Instance] = "cost", trials: int = 10 ** 4,
                     seed: int = 7, bounds: DomainBounds = DomainBounds()):
    """Search for a counterexample by random sampling (never claims validity)."""
    inst = get_instance(instance) if isinstance(instance, str) else instance
    entries, payload, _ = _prepare(ob)
    entries = _schedule(entries)
    goal = _make_goal(inst, payload)
    smp = _Sampler(random.Random(seed), bounds)
    prob = _Problem(inst, entries, goal, _Grids(bounds, ()), bounds.max_envs)
    for _ in range(trials):
        env: Dict[str, object] = {}
        acc = 0 if inst.expect_omega else True
        ok = True
        try:
            for name, ty in entries:
                v = _sample(smp, prob, ty, env)
                env[name] = v
                val = type_value(ty, v, env, inst.expect_omega)
                if inst.expect_omega:
                    if val is INF:
                        ok = False
                        break
                    acc = ext_max(acc, val)
                elif not val:
                    ok = False
                    break
            if ok and not goal(env, acc):
                return Counterexample(tuple((n, env[n]) for n, _ in entries), "sampling")
        except (EvalError, nm.Undecided, ZeroDivisionError, TypeError):
            continue
    return NoCounterexampleFound(trials)


def _sample(smp: _Sampler, prob: _Problem, ty, env):
    t = type(ty)
    if t is RefBase:
        filt = prob._filter_part(ty.phi)
        cands = _solve(filt, ty.x)
        if cands and smp.rng.random() < 0.8:
            return eval_term(smp.rng.choice(cands), env)
        lo = prob._bound(_bounds(filt, ty.x)[0], env, max)
        hi = prob._bound(_bounds(filt, ty.x)[1], env, min)
        return smp.base(ty.base, lo, hi)
    if t is DPair:
        a = _sample(smp, prob, ty.left, env)
        old = env.get(ty.x, _MISSING)
        env[ty.x] = a
        try:
            b = _sample(smp, prob, ty.right, env)
        finally:
            _restore(env, ty.x, old)
        return VPair(a, b)
    if t is RSum:
        if smp.rng.random() < 0.5:
            return VInl(_sample(smp, prob, ty.left, env))
        return VInr(_sample(smp, prob, ty.right, env))
    raise EvalError("cannot sample a function")


def discharge(ob: Obligation, instance: Union[str, Instance] = "cost",
              bounds: DomainBounds = DomainBounds(), trials: int = 0, seed: int = 7):
    """Bounded discharge, optionally followed by random falsification of Valid results."""
    res = discharge_bounded(ob, instance, bounds)
    if trials and not isinstance(res, Counterexample):
        alt = falsify_sampling(ob, instance, trials, seed, bounds)
        if isinstance(alt, Counterexample):
            return alt
    return res
