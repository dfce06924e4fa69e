"""Dynamic soundness checks: run checked programs and compare effects with grades.

Each check takes a declaration and a list of environments.  An environment
maps context parameters (``val`` declarations without a body) to runtime
values; the key ``"arg"`` holds the argument when the declaration is a
function.  Environments violating the declared context predicates are
reported as skipped rows.

Per instance, a row passes when

* cost:      the ticks performed (also on fuel exhaustion) are at most the grade;
* temporal:  a terminated run's event word lies in the grade language; a run
             cut off by fuel has its peak depth within the grade's maximal
             depth (a prefix condition, labelled as a strengthening);
* ubound:    the probability of a result outside the declared result type is
             at most the grade: exact for Bern-family programs, otherwise a
             Monte-Carlo estimate within a one-sided Hoeffding tolerance;
* expect:    the truncated expectation of the result predicate is at most the
             context value plus the grade (fuel-exhausted runs contribute 0).
"""
from __future__ import annotations

import math
import random
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

from . import numeric as nm
from .constraints import value_to_json
from .effects import Lang, grade_fmt, word_profile
from .ground import INF, ext_add, ext_fmt, ext_le, ext_max, type_value
from .interp import (Bottom, ContinuousEffect, Converged, decl_comp, eval_comp, eval_dist,
                     program_env)
from .prelude import UNIT, VInl, VInr, VPair
from .syntax import DFun, Graded
from .typecheck import TypedProgram


@dataclass(frozen=True)
class SoundnessRow:
    program: str
    decl: str
    env: Dict[str, object]
    seed: Optional[int]
    grade: str
    observed: object
    tolerance: Optional[float]
    verdict: str  # "pass", "fail" or "skipped"
    note: str = ""

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class SoundnessReport:
    rows: List[SoundnessRow] = field(default_factory=list)

    @property
    def failures(self) -> List[SoundnessRow]:
        return [r for r in self.rows if r.verdict == "fail"]

    @property
    def ok(self) -> bool:
        return not self.failures

    def extend(self, other: "SoundnessReport") -> "SoundnessReport":
        self.rows.extend(other.rows)
        return self

    def to_json(self) -> dict:
        return {"rows": [r.to_json() for r in self.rows],
                "summary": {v: sum(r.verdict == v for r in self.rows)
                            for v in ("pass", "fail", "skipped")}}


def hoeffding_tolerance(trials: int, delta: float = 1e-3) -> float:
    """One-sided Hoeffding deviation ``sqrt(ln(1/delta) / (2 trials))``."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not 0 < delta < 1:
        raise ValueError("delta must lie strictly between 0 and 1")
    return math.sqrt(math.log(1 / delta) / (2 * trials))


# ---------------------------------------------------------------------------
# Shared setup


@dataclass
class _Case:
    env_json: Dict[str, object]
    run_env: Dict[str, object]      # globals plus the argument binding
    grade_env: Dict[str, object]    # parameters plus the declared argument binder
    context_value: object           # bool, or [0, inf] in the expectation instance
    effect: object
    result: object
    comp: object


def _setup(tp: TypedProgram, name: str, env: Dict[str, object]) -> _Case:
    program, inst = tp.program, tp.instance
    expect = inst.expect_omega
    params = {k: v for k, v in env.items() if k != "arg"}
    arg = env.get("arg")
    ty = program.decl(name).type
    genv = dict(params)
    ctx = 0 if expect else True
    for d in program.decls:
        if d.term is None and d.name in params:
            ctx = _meet(ctx, type_value(d.type, params[d.name], genv, expect), expect)
    if isinstance(ty, DFun):
        if arg is None:
            raise ValueError(f"{name!r} is a function; the environment needs an 'arg' entry")
        ctx = _meet(ctx, type_value(ty.dom, arg, genv, expect), expect)
        genv[ty.x] = arg
        ty = ty.cod
    if not isinstance(ty, Graded):
        raise ValueError(f"{name!r} does not have a computation type")
    globals_ = program_env(program, params)
    comp, extra = decl_comp(program, name, arg)
    return _Case({k: value_to_json(v) for k, v in sorted(env.items())}, {**globals_, **extra},
                 genv, ctx, ty.effect, ty.result, comp)


def _meet(a, b, expect: bool):
    return ext_max(a, b) if expect else (a and b)


def _admitted(case: _Case, expect: bool) -> bool:
    return case.context_value is not INF if expect else bool(case.context_value)


def _skip(tp, name, case, seed=None) -> SoundnessRow:
    return SoundnessRow(tp_name(tp), name, case.env_json, seed, "", None, None, "skipped",
                        "environment violates the context predicates")


def tp_name(tp: TypedProgram) -> str:
    return getattr(tp, "name", "") or ""


# ---------------------------------------------------------------------------
# Instance checks


def check_cost(tp: TypedProgram, name: str, envs: Sequence[Dict[str, object]],
               fuel: int = 1000) -> SoundnessReport:
    rep = SoundnessReport()
    for env in envs:
        case = _setup(tp, name, env)
        if not _admitted(case, False):
            rep.rows.append(_skip(tp, name, case))
            continue
        grade = tp.instance.eval_effect(case.effect, case.grade_env)
        out = eval_comp(case.run_env, case.comp, fuel, tp.instance)
        ok = grade.value is INF or out.trace <= grade.value
        note = "fuel exhausted; partial cost" if type(out) is Bottom else ""
        rep.rows.append(SoundnessRow(tp_name(tp), name, case.env_json, None, grade_fmt(grade),
                                     out.trace, None, "pass" if ok else "fail", note))
    return rep


def check_temporal(tp: TypedProgram, name: str, envs: Sequence[Dict[str, object]],
                   fuel: int = 1000) -> SoundnessReport:
    rep = SoundnessReport()
    for env in envs:
        case = _setup(tp, name, env)
        if not _admitted(case, False):
            rep.rows.append(_skip(tp, name, case))
            continue
        grade: Lang = tp.instance.eval_effect(case.effect, case.grade_env)
        out = eval_comp(case.run_env, case.comp, fuel, tp.instance)
        word = out.trace
        net, peak = word_profile(word)
        observed = {"net": net, "peak": peak, "length": len(word)}
        if type(out) is Converged:
            if grade.is_stack_closed():
                s = grade.atoms[0]
                ok = net == s.d and peak <= s.m
            else:
                ok = grade.contains(word)
            note = ""
        else:
            ok = peak <= grade.profile()[1]
            note = "fuel exhausted; prefix depth checked (strengthening)"
        rep.rows.append(SoundnessRow(tp_name(tp), name, case.env_json, None, grade_fmt(grade),
                                     observed, None, "pass" if ok else "fail", note))
    return rep


def _fails(case: _Case, value) -> bool:
    return not type_value(case.result, value, dict(case.grade_env), False)


def check_ubound(tp: TypedProgram, name: str, envs: Sequence[Dict[str, object]],
                 trials: int = 10 ** 5, seed: int = 0, delta: float = 1e-3,
                 fuel: int = 1000) -> SoundnessReport:
    rep = SoundnessReport()
    for env in envs:
        case = _setup(tp, name, env)
        if not _admitted(case, False):
            rep.rows.append(_skip(tp, name, case, seed))
            continue
        grade = tp.instance.eval_effect(case.effect, case.grade_env).value
        try:
            dist = eval_dist(case.run_env, case.comp, fuel, tp.instance)
        except ContinuousEffect:
            dist = None
        if dist is not None:
            mass = dist.mass(lambda o: type(o) is Converged and _fails(case, o.value))
            ok = nm.le(mass, grade)
            rep.rows.append(SoundnessRow(tp_name(tp), name, case.env_json, None, nm.fmt(grade),
                                         str(mass), 0.0, "pass" if ok else "fail",
                                         "exact failure probability"))
            continue
        rng = random.Random(seed)
        failures = 0
        for _ in range(trials):
            out = eval_comp(case.run_env, case.comp, fuel, tp.instance, rng=rng)
            if type(out) is Converged and _fails(case, out.value):
                failures += 1
        rate = failures / trials
        tol = hoeffding_tolerance(trials, delta)
        ok = rate <= nm.to_float(grade) + tol
        rep.rows.append(SoundnessRow(tp_name(tp), name, case.env_json, seed, nm.fmt(grade),
                                     round(rate, 12), round(tol, 12), "pass" if ok else "fail",
                                     f"{failures} failures in {trials} sampled runs"))
    return rep


def expectation(case: _Case, dist) -> object:
    """Expected value of the result predicate; fuel-exhausted runs contribute 0."""
    total = Fraction(0)
    for o, p in dist.support.items():
        if type(o) is Bottom:
            continue
        v = type_value(case.result, o.value, dict(case.grade_env), True)
        if v is INF:
            return INF
        total = nm.add(total, nm.mul(p, v))
    return total


def check_expect(tp: TypedProgram, name: str, envs: Sequence[Dict[str, object]],
                 fuel: int = 1000) -> SoundnessReport:
    rep = SoundnessReport()
    for env in envs:
        case = _setup(tp, name, env)
        if not _admitted(case, True):
            rep.rows.append(_skip(tp, name, case))
            continue
        grade = tp.instance.eval_effect(case.effect, case.grade_env).value
        dist = eval_dist(case.run_env, case.comp, fuel, tp.instance)
        e = expectation(case, dist)
        bound = ext_add(case.context_value, grade)
        ok = ext_le(e, bound)
        rep.rows.append(SoundnessRow(
            tp_name(tp), name, {**case.env_json, "fuel": fuel}, None, ext_fmt(grade),
            {"expectation": ext_fmt(e), "bound": ext_fmt(bound),
             "bottom_mass": str(dist.bottom_mass)},
            None, "pass" if ok else "fail", "truncated expectation"))
    return rep


def check(tp: TypedProgram, name: str, envs, *, fuel=1000, trials=10 ** 5, seed=0,
          delta=1e-3) -> SoundnessReport:
    """Dispatch to the check for the program's instance."""
    inst = tp.instance.name
    if inst == "cost":
        return check_cost(tp, name, envs, fuel)
    if inst == "temporal":
        return check_temporal(tp, name, envs, fuel)
    if inst == "ubound":
        return check_ubound(tp, name, envs, trials, seed, delta, fuel)
    return check_expect(tp, name, envs, fuel)


# ---------------------------------------------------------------------------
# Environment matrices for the bundled corpus


TRUE, FALSE = VInl(UNIT), VInr(UNIT)


def _random_list(rng: random.Random, max_len: int):
    return tuple(rng.randint(0, 9) for _ in range(rng.randint(0, max_len)))


def corpus_matrix(stem: str, seed: int = 0):
    """``[(decl, envs, extra keyword arguments)]`` for a corpus program (or mutant).

    Mutants share the matrix of the program they were derived from.
    """
    base = next((s for s in sorted(_MATRICES, key=len, reverse=True)
                 if stem == s or stem.startswith(s + "_")), None)
    return _MATRICES[base](seed) if base else None


def _loop_cost(seed):
    return [("loop", [{"n": n, "arg": x} for n in range(-10, 11) for x in range(-10, 11)], {})]


def _insert(seed):
    rng = random.Random(seed)
    envs = []
    for _ in range(200):
        x = _random_list(rng, 8)
        l = tuple(_random_list(rng, 8) for _ in range(rng.randint(0, 8)))
        envs.append({"arg": VPair(x, l)})
    return [("insert", envs, {})]


def _fib(seed):
    return [("fib", [{"arg": n} for n in range(13)], {})]


def _let_dep(seed):
    return [("main", [{"x": x} for x in range(11)], {})]


def _noisy_cdf(seed):
    arg = VPair(1, VPair((1, 2, 3, 4), (0, 1, 1, 2, 3, 3, 4, 5)))
    return [("noisy_cdf", [{"b": 2, "arg": arg}], {})]


def _laplace(seed):
    return [("main", [{}], {})]


def _union_let(seed):
    return [("f", [{"arg": TRUE}, {"arg": FALSE}], {}), ("main", [{}], {})]


def _cowboy(seed):
    a = b = Fraction(1, 2)
    c = (1 - a) / 3
    envs = [{"a": a, "b": b, "arg": VPair(t, c)} for t in (TRUE, FALSE)]
    return [("aux", envs, {"fuel": f}) for f in range(5, 31)]


_MATRICES = {"loop_cost": _loop_cost, "insert": _insert, "fib": _fib, "let_dep": _let_dep,
             "noisy_cdf": _noisy_cdf, "laplace": _laplace, "union_let": _union_let,
             "cowboy": _cowboy}


def run_matrix(tp: TypedProgram, stem: str, *, fuel=1000, trials=10 ** 5, seed=0,
               delta=1e-3) -> SoundnessReport:
    """Run the corpus matrix for ``stem``; programs without one get a skipped row."""
    rep = SoundnessReport()
    matrix = corpus_matrix(stem, seed)
    if matrix is None:
        rep.rows.append(SoundnessRow(stem, "", {}, None, "", None, None, "skipped",
                                     "no environment matrix for this program"))
        return rep
    for name, envs, extra in matrix:
        kw = dict(fuel=fuel, trials=trials, seed=seed, delta=delta)
        kw.update(extra)
        rep.extend(check(tp, name, envs, **kw))
    return rep


__all__ = ["SoundnessRow", "SoundnessReport", "hoeffding_tolerance", "check_cost",
           "check_temporal", "check_ubound", "check_expect", "check", "expectation",
           "corpus_matrix", "run_matrix"]
