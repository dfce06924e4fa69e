"""Acceptance suite: one test and one printed PASS/FAIL line per criterion.

Tolerances pinned here: grid B=64, q=8; 10**5 trials with delta=1e-3
(Hoeffding tolerance about 0.0059); runtime budgets 30 s (static corpus),
60 s (union bound), 120 s (law lab).
"""
import json
import math
import sys
import time
from fractions import Fraction

import pytest

from grady.cli import main
from grady.constraints import Counterexample, DomainBounds, Valid, discharge_bounded
from grady.effects import word_profile
from grady.interp import Converged, dist_decl, run_decl
from grady.modelcheck import (COST, DIST, MUTANTS, WRITER, check_composite,
                              check_graded_monad_laws, check_par_distribution, check_reindexing,
                              check_stack_abstraction)
from grady.prelude import UNIT, VInl, VPair
from grady.soundness import check_ubound, hoeffding_tolerance, run_matrix
from grady.syntax import Graded, erase, parse_effect, parse_program, parse_type
from grady.typecheck import Obligation, Subeffect, check_program

from conftest import load, source

BOUNDS = DomainBounds(int_bound=64, real_denominator=8)
TRIALS, DELTA = 10 ** 5, 1e-3
REFERENCE_PROGRAMS = ["loop_cost", "insert", "fib", "cowboy", "noisy_cdf"]


@pytest.fixture
def report(request):
    """Print one line per criterion, visible even when output is captured."""
    tr = request.config.pluginmanager.getplugin("terminalreporter")

    def emit(n: int, ok: bool, detail: str):
        line = f"[criterion {n:2}] {'PASS' if ok else 'FAIL'}  {detail}"
        if tr is not None:
            tr.write_line("")
            tr.write_line(line)
        else:
            print(line, file=sys.stderr)
        assert ok, line
    return emit


def test_criterion_01_static_corpus(report):
    t0 = time.perf_counter()
    bad, total = [], 0
    for name in REFERENCE_PROGRAMS:
        prog = parse_program(source(name))
        for d in prog.decls:
            if d.type is not None:
                erase(d.type)
        tp = check_program(prog, name)
        for ob in tp.obligations:
            total += 1
            if not isinstance(discharge_bounded(ob, tp.instance, BOUNDS), Valid):
                bad.append(f"{name}#{ob.id}")
    dt = time.perf_counter() - t0
    report(1, not bad and dt < 30,
           f"{total} obligations over {len(REFERENCE_PROGRAMS)} programs valid on grid, "
           f"undischarged={bad}, {dt:.1f}s < 30s")


def test_criterion_02_counterexample_fidelity(report):
    s = Subeffect(parse_effect("nat2eff(abs (x + 1))"), parse_effect("nat2eff(abs (2 * x))"))
    free = Obligation(0, "subtyping", (("x", parse_type("{x:int | true}")),), s)
    premised = Obligation(1, "subtyping", (("x", parse_type("{x:int | x >= 1}")),), s)
    r1, r2 = discharge_bounded(free, "cost", BOUNDS), discharge_bounded(premised, "cost", BOUNDS)
    ok = isinstance(r1, Counterexample) and r1.as_dict() == {"x": 0} and isinstance(r2, Valid)
    report(2, ok, f"without premise: {r1}; with x>=1: {r2}")


def test_criterion_03_cost_soundness(report):
    tp = load("loop_cost")
    loop = run_matrix(tp, "loop_cost")
    eq_bad = []
    for n in range(-10, 11):
        for x in range(-10, 11):
            o = run_decl(tp.program, "loop", {"n": n}, x)
            if not isinstance(o, Converged) or o.trace > max(0, n - x) or (x < n and o.trace != n - x):
                eq_bad.append((n, x))
    ins = run_matrix(load("insert"), "insert")
    ok = (len(loop.rows) == 441 and loop.ok and not eq_bad
          and len(ins.rows) == 200 and ins.ok)
    report(3, ok, f"loop_cost {len(loop.rows)} envs, {len(loop.failures)} violations, "
                  f"{len(eq_bad)} equality misses; insert {len(ins.rows)} inputs, "
                  f"{len(ins.failures)} violations")


def test_criterion_04_temporal_soundness(report):
    tp = load("fib")
    bad = []
    for n in range(13):
        o = run_decl(tp.program, "fib", arg=n)
        net, peak = word_profile(o.trace)
        if not isinstance(o, Converged) or net != 0 or peak > n + 1:
            bad.append(n)
    rows = run_matrix(tp, "fib")
    mutant = run_matrix(load("fib_missing_pop"), "fib_missing_pop")
    ok = not bad and rows.ok and len(rows.rows) == 13 and not mutant.ok
    report(4, ok, f"fib n=0..12: {len(bad)} violations; missing-pop mutant fails "
                  f"{len(mutant.failures)}/13 rows")


def test_criterion_05_union_bound(report):
    t0 = time.perf_counter()
    eps = hoeffding_tolerance(TRIALS, DELTA)
    lap = run_matrix(load("laplace"), "laplace", trials=TRIALS, seed=0, delta=DELTA)
    (lrow,) = lap.rows
    target = math.exp(-2)
    cdf = run_matrix(load("noisy_cdf"), "noisy_cdf", trials=TRIALS, seed=0, delta=DELTA)
    (crow,) = cdf.rows
    dt = time.perf_counter() - t0
    ok = (abs(eps - 0.0059) < 1e-4 and lrow.verdict == "pass"
          and abs(lrow.observed - target) <= eps and lrow.observed <= target + eps
          and crow.verdict == "pass" and crow.observed <= 4 * target + eps and dt < 60)
    report(5, ok, f"Lap(1,0) |y|>2: {lrow.observed:.5f} vs e^-2={target:.5f} (eps_H={eps:.5f}); "
                  f"noisy_cdf: {crow.observed:.5f} <= 4e^-2+eps={4 * target + eps:.5f}; {dt:.1f}s < 60s")


def test_criterion_06_exact_probability(report):
    tp = load("union_let")
    d = dist_decl(tp.program, "main")
    mass = d.mass(lambda o: isinstance(o, Converged) and o.value == -1)
    main_type = tp.types["main"]
    assert isinstance(main_type, Graded)
    grade = tp.instance.eval_effect(main_type.effect, {}).value
    ok = mass == Fraction(2, 25) and grade == Fraction(2, 5)
    report(6, ok, f"exact failure mass {mass} (= 0.08); static grade {grade} (= 0.4)")


def test_criterion_07_expectation(report):
    tp = load("cowboy")
    a = b = Fraction(1, 2)
    c = (1 - a) / 3
    fair = a / (a + b - a * b)
    bound = fair + Fraction(4, 3) * c * b / (a + b - a * b)
    params = {"a": a, "b": b}
    arg = VPair(VInl(UNIT), c)
    values = []
    for fuel in range(5, 31):
        d = dist_decl(tp.program, "aux", params, arg, fuel)
        values.append(d.mass(lambda o: isinstance(o, Converged) and o.value == VInl(UNIT)))
    monotone = all(x <= y for x, y in zip(values, values[1:]))
    rows = run_matrix(tp, "cowboy")
    ok = monotone and all(v <= bound for v in values) and rows.ok and len(rows.rows) == 52
    report(7, ok, f"E[win|A first] fuel 5..30: {float(values[0]):.6f} .. {float(values[-1]):.6f} "
                  f"<= {bound} ({float(bound):.6f}); monotone={monotone}; "
                  f"{len(rows.failures)} violations in {len(rows.rows)} rows")


def test_criterion_08_law_lab(report):
    t0 = time.perf_counter()
    results = check_graded_monad_laws(COST, 3) + check_graded_monad_laws(WRITER, 3) \
        + check_graded_monad_laws(DIST, 3)
    for spec in (COST, WRITER, DIST):
        results += [check_reindexing(spec, 2), check_composite(spec, 2)]
    results += [check_par_distribution(COST, 3), check_par_distribution(DIST, 3)]
    mutants = [(m, m.run(3)) for m in MUTANTS]
    dt = time.perf_counter() - t0
    failed = [f"{r.law}/{r.lifting}" for r in results if not r.passed]
    missed = [m.name for m, r in mutants if r.passed or r.law != m.law]
    ok = not failed and not missed and dt < 120 and COST.grades == (0, 1, 2, "inf")
    report(8, ok, f"{len(results)} law checks pass (failed={failed}); "
                  f"{len(mutants)} mutants each fail their target (missed={missed}); {dt:.1f}s < 120s")


def test_criterion_09_determinism(report, capsys):
    outputs = []
    for _ in range(2):
        run = []
        for argv in (["check", "--json"], ["soundness", "--json"], ["laws", "--json"]):
            main(argv)
            run.append(capsys.readouterr().out)
        outputs.append(run)
    same = outputs[0] == outputs[1]
    sizes = [len(o) for o in outputs[0]]
    json.loads(outputs[0][1])
    report(9, same, f"check/soundness/laws JSON byte-identical across two runs ({sizes} bytes)")


def test_criterion_10_stack_oracle(report):
    r = check_stack_abstraction(max_d=3, max_m=3, max_len=6)
    report(10, r.passed, f"{r.checked} comparisons against word-level semantics, "
                         f"disagreement={r.witness}")
