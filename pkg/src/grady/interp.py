"""Fuel-bounded call-by-value evaluation with instance-specific effect traces.

Every unfolding of a recursive function costs one unit of fuel; running out
yields :class:`Bottom` carrying the trace produced so far.  Generic effects
are handled per instance:

=========  ==============================================================
Tick k     adds ``k`` to the cost trace
Emit e     appends event ``e`` to the event trace
Bern p     ``inl ()`` with probability ``p``, otherwise ``inr ()``
BernFail p ``inl ()`` (the failure branch) with probability ``p``
Lap (r,m)  a Laplace sample with rate ``r`` centred at ``m``
=========  ==============================================================

:func:`eval_comp` samples random choices from a seeded generator;
:func:`eval_dist` enumerates them and returns the exact distribution over
outcomes (Bern-family effects only).
"""
from __future__ import annotations

import math
import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

from . import numeric as nm
from .constraints import value_to_json
from .effects import Instance, get_instance
from .prelude import IMPLS, UNIT, EvalError, VInl, VInr, VPair, base_member
from .syntax import (App, Case, Fst, GenEff, Inl, Inr, Lam, Let, Lit, MatchPair, OpApp, Pair,
                     Program, RecFun, Return, Snd, UnitV, Var, parse_value)


class InterpError(Exception):
    """Evaluation got stuck; on a checked program this indicates a checker bug."""


class ContinuousEffect(InterpError):
    """Exact enumeration met a continuous effect; use sampling instead."""


@dataclass(eq=False)
class Closure:
    env: Dict[str, object]
    x: str
    body: object

    def __repr__(self) -> str:
        return f"<fun {self.x}>"


@dataclass(eq=False)
class RecClosure:
    env: Dict[str, object]
    f: str
    x: str
    body: object

    def __repr__(self) -> str:
        return f"<rec {self.f}>"


@dataclass(frozen=True)
class Converged:
    value: object
    trace: object
    fuel_used: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Bottom:
    trace: object
    fuel_used: int = field(default=0, compare=False)


Outcome = object  # Converged | Bottom


class _OutOfFuel(Exception):
    pass


class _Branch(Exception):
    def __init__(self, p):
        super().__init__(p)
        self.p = p


# ---------------------------------------------------------------------------
# Laplace sampling


def sample_laplace(rate, loc, rng: random.Random) -> float:
    """Inverse-CDF sample of the density ``rate/2 * exp(-rate * |y - loc|)``."""
    r = nm.to_float(rate) if nm.is_real(rate) else float(rate)
    if not r > 0:
        raise ValueError(f"Laplace rate must be positive, got {rate!r}")
    m = nm.to_float(loc) if nm.is_real(loc) else float(loc)
    u = rng.random() - 0.5
    return m - math.copysign(1.0, u) * math.log1p(-2.0 * abs(u)) / r


# ---------------------------------------------------------------------------
# The evaluator


class _Run:
    def __init__(self, inst: Instance, fuel: int, choose: Callable, rng: Optional[random.Random]):
        self.inst = inst
        self.fuel = fuel
        self.used = 0
        self.choose = choose
        self.rng = rng
        self.cost = 0
        self.events: List[str] = []

    def trace(self):
        if self.inst.name == "cost":
            return self.cost
        if self.inst.name == "temporal":
            return tuple(self.events)
        return ()

    # values ---------------------------------------------------------
    def value(self, env, v):
        t = type(v)
        if t is Var:
            try:
                return env[v.name]
            except KeyError:
                raise InterpError(f"unbound variable {v.name!r}") from None
        if t is Lit:
            return v.value
        if t is UnitV:
            return UNIT
        if t is Pair:
            return VPair(self.value(env, v.fst), self.value(env, v.snd))
        if t is Inl:
            return VInl(self.value(env, v.value))
        if t is Inr:
            return VInr(self.value(env, v.value))
        if t is Fst or t is Snd:
            p = self.value(env, v.value)
            if type(p) is not VPair:
                raise InterpError("projection of a non-pair")
            return p.fst if t is Fst else p.snd
        if t is OpApp:
            try:
                return IMPLS[v.op](self.value(env, v.arg))
            except EvalError as e:
                raise InterpError(str(e)) from None
        if t is Lam:
            return Closure(env, v.x, v.body)
        if t is RecFun:
            return RecClosure(env, v.f, v.x, v.body)
        raise InterpError(f"not a value: {v!r}")

    # computations -----------------------------------------------------
    def comp(self, env, c):
        while True:
            t = type(c)
            if t is Return:
                return self.value(env, c.value)
            if t is Let:
                v = self.comp(env, c.head)
                env = {**env, c.x: v}
                c = c.body
            elif t is MatchPair:
                p = self.value(env, c.value)
                if type(p) is not VPair:
                    raise InterpError("pattern match on a non-pair")
                env = {**env, c.x: p.fst, c.y: p.snd}
                c = c.body
            elif t is Case:
                s = self.value(env, c.value)
                if type(s) is VInl:
                    env, c = {**env, c.x: s.value}, c.left
                elif type(s) is VInr:
                    env, c = {**env, c.y: s.value}, c.right
                else:
                    raise InterpError("case on a non-sum")
            elif t is App:
                fn = self.value(env, c.fn)
                arg = self.value(env, c.arg)
                if type(fn) is Closure:
                    env, c = {**fn.env, fn.x: arg}, fn.body
                elif type(fn) is RecClosure:
                    if self.used >= self.fuel:
                        raise _OutOfFuel()
                    self.used += 1
                    env, c = {**fn.env, fn.f: fn, fn.x: arg}, fn.body
                else:
                    raise InterpError("application of a non-function")
            elif t is GenEff:
                return self.effect(c.name, self.value(env, c.arg))
            else:
                raise InterpError(f"not a computation: {c!r}")

    def effect(self, name: str, arg):
        if name not in self.inst.geneffs:
            raise InterpError(f"unknown generic effect {name!r} in instance {self.inst.name}")
        if name == "Tick":
            if not base_member(arg, "nat"):
                raise InterpError(f"Tick expects a natural number, got {arg!r}")
            self.cost += int(arg)
            return UNIT
        if name == "Emit":
            self.events.append(arg)
            return UNIT
        if name in ("Bern", "BernFail"):
            p = Fraction(nm.to_float(arg)) if type(arg) is nm.ExpNum else Fraction(arg)
            if not 0 <= p <= 1:
                raise InterpError(f"{name} expects a probability, got {arg!r}")
            return VInl(UNIT) if self.choose(p) else VInr(UNIT)
        if name == "Lap":
            if self.rng is None:
                raise ContinuousEffect("Lap has no finite support; use sampling mode")
            if type(arg) is not VPair:
                raise InterpError("Lap expects a (rate, location) pair")
            try:
                y = sample_laplace(arg.fst, arg.snd, self.rng)
            except ValueError as e:
                raise InterpError(str(e)) from None
            return Fraction(y)
        raise InterpError(f"no handler for generic effect {name!r}")


def _instance(inst) -> Instance:
    return get_instance(inst) if isinstance(inst, str) else inst


def eval_comp(env: Dict[str, object], m, fuel: int = 1000, inst="cost", seed: int = 0,
              rng: Optional[random.Random] = None):
    """Evaluate computation ``m``; random choices come from a generator seeded with ``seed``.

    Passing ``rng`` instead continues an existing generator (used for batches
    of Monte-Carlo runs).
    """
    if fuel < 0:
        raise ValueError("fuel must be non-negative")
    rng = random.Random(seed) if rng is None else rng
    run = _Run(_instance(inst), fuel, lambda p: rng.random() < p, rng)
    return _finish(run, env, m)


def _finish(run: _Run, env, m):
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 20000))
    try:
        v = run.comp(env, m)
    except _OutOfFuel:
        return Bottom(run.trace(), run.used)
    finally:
        sys.setrecursionlimit(old)
    return Converged(v, run.trace(), run.used)


@dataclass
class Distribution:
    """Finite distribution over outcomes with exact rational probabilities."""
    support: Dict[object, Fraction]

    @property
    def total(self) -> Fraction:
        return sum(self.support.values(), Fraction(0))

    @property
    def bottom_mass(self) -> Fraction:
        return sum((p for o, p in self.support.items() if type(o) is Bottom), Fraction(0))

    def mass(self, pred: Callable[[object], bool]) -> Fraction:
        return sum((p for o, p in self.support.items() if pred(o)), Fraction(0))

    def to_json(self) -> List[dict]:
        rows = []
        for o, p in self.support.items():
            if type(o) is Bottom:
                rows.append({"outcome": "bottom", "trace": _trace_json(o.trace), "p": str(p)})
            else:
                rows.append({"outcome": "converged", "value": value_to_json(o.value),
                             "trace": _trace_json(o.trace), "p": str(p)})
        return sorted(rows, key=repr)


def eval_dist(env: Dict[str, object], m, fuel: int = 1000, inst="ubound",
              max_paths: int = 10 ** 6) -> Distribution:
    """Exact output distribution of ``m``, enumerating every Bern-family choice."""
    if fuel < 0:
        raise ValueError("fuel must be non-negative")
    instance = _instance(inst)
    support: Dict[object, Fraction] = {}
    stack: List[Tuple[Tuple[bool, ...], Fraction]] = [((), Fraction(1))]
    paths = 0
    while stack:
        prefix, prob = stack.pop()
        pos = [0]

        def choose(p, prefix=prefix, pos=pos):
            i = pos[0]
            if i < len(prefix):
                pos[0] += 1
                return prefix[i]
            raise _Branch(p)

        run = _Run(instance, fuel, choose, None)
        try:
            out = _finish(run, env, m)
        except _Branch as b:
            # explore the false branch first so that the true branch is popped first
            if b.p < 1:
                stack.append((prefix + (False,), prob * (1 - b.p)))
            if b.p > 0:
                stack.append((prefix + (True,), prob * b.p))
            continue
        paths += 1
        if paths > max_paths:
            raise InterpError(f"more than {max_paths} execution paths")
        support[out] = support.get(out, Fraction(0)) + prob
    return Distribution(support)


# ---------------------------------------------------------------------------
# Programs


def program_env(program: Program, params: Optional[Dict[str, object]] = None) -> Dict[str, object]:
    """Global environment: context parameters from ``params`` plus every value declaration.

    Closures share the global dictionary, so declarations may refer to each
    other in any order.  Computation declarations are left out; evaluate them
    with :func:`run_decl`.
    """
    params = dict(params or {})
    env: Dict[str, object] = {}
    for d in program.decls:
        if d.term is None:
            if d.name not in params:
                raise InterpError(f"missing value for context parameter {d.name!r}")
            env[d.name] = params.pop(d.name)
    if params:
        raise InterpError(f"unknown parameter(s) {sorted(params)}")
    run = _Run(get_instance(program.instance), 0, lambda p: False, None)
    for d in program.decls:
        if d.term is not None and _is_value(d.term):
            env[d.name] = run.value(env, d.term)
    return env


def _is_value(t) -> bool:
    return type(t) in (Var, Lit, UnitV, Pair, Inl, Inr, Fst, Snd, OpApp, Lam, RecFun)


def decl_comp(program: Program, name: str, arg=None):
    """The computation run for declaration ``name`` (applied to ``arg`` for functions).

    Returns ``(computation, extra bindings)``.
    """
    d = program.decl(name)
    if d.term is None:
        raise InterpError(f"{name!r} is a context parameter and has no body")
    if _is_value(d.term):
        if arg is None:
            return Return(Var(name)), {}
        return App(Var(name), Var("arg")), {"arg": arg}
    if arg is not None:
        raise InterpError(f"{name!r} is a computation and takes no argument")
    return d.term, {}


def run_decl(program: Program, name: str, params=None, arg=None, fuel: int = 1000,
             seed: int = 0):
    env = program_env(program, params)
    m, extra = decl_comp(program, name, arg)
    return eval_comp({**env, **extra}, m, fuel, program.instance, seed)


def dist_decl(program: Program, name: str, params=None, arg=None, fuel: int = 1000):
    env = program_env(program, params)
    m, extra = decl_comp(program, name, arg)
    return eval_dist({**env, **extra}, m, fuel, program.instance)


def parse_runtime_value(text: str, env: Optional[Dict[str, object]] = None):
    """Evaluate a closed value written in source syntax, e.g. ``(1, [0, 1])``."""
    run = _Run(get_instance("cost"), 0, lambda p: False, None)
    return run.value(dict(env or {}), parse_value(text))


def _trace_json(trace):
    if isinstance(trace, tuple):
        return list(trace)
    return trace


def outcome_to_json(o) -> dict:
    if type(o) is Bottom:
        return {"outcome": "bottom", "value": None, "trace": _trace_json(o.trace),
                "fuel_used": o.fuel_used}
    return {"outcome": "converged", "value": value_to_json(o.value),
            "trace": _trace_json(o.trace), "fuel_used": o.fuel_used}


__all__ = ["Closure", "RecClosure", "Converged", "Bottom", "Distribution", "InterpError",
           "ContinuousEffect", "sample_laplace", "eval_comp", "eval_dist", "program_env",
           "decl_comp", "run_decl", "dist_decl", "parse_runtime_value", "outcome_to_json"]
