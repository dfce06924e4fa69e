import pytest

from grady.constraints import Counterexample, Unknown, discharge_bounded
from grady.smt import emit_smtlib, eval_assertions, parse_sexprs, smt_filename
from grady.syntax import parse_effect, parse_type
from grady.typecheck import Obligation, Subeffect

from conftest import load

CORPUS = ["loop_cost", "insert", "fib", "cowboy", "noisy_cdf", "laplace", "union_let", "let_dep"]
MUTANTS = ["cowboy_tight", "fib_missing_pop", "insert_bad_grade", "loop_cost_extra_tick",
           "noisy_cdf_widened"]


def _scripts(name):
    tp = load(name)
    for ob in tp.obligations:
        yield tp, ob, emit_smtlib(ob, tp.instance)


@pytest.mark.parametrize("name", CORPUS + MUTANTS)
def test_scripts_are_well_formed(name):
    for _, ob, script in _scripts(name):
        if isinstance(script, Unknown):
            continue
        forms = parse_sexprs(script)
        assert forms[-1] == ["check-sat"]
        assert any(f[0] == "assert" for f in forms)


@pytest.mark.parametrize("name", MUTANTS)
def test_counterexamples_satisfy_emitted_assertions(name):
    checked = 0
    for tp, ob, script in _scripts(name):
        res = discharge_bounded(ob, tp.instance)
        if isinstance(res, Counterexample) and isinstance(script, str):
            assert all(eval_assertions(script, res.as_dict()))
            checked += 1
    assert checked


def test_filename():
    ob = load("fib").obligations[3]
    assert smt_filename("fib", ob) == "fib.3.smt2"


def test_premise_appears_as_assertion():
    ob = Obligation(0, "t", (("x", parse_type("{x:int | 1 <= x}")),),
                    Subeffect(parse_effect("nat2eff(abs (x + 1))"), parse_effect("nat2eff(abs (2 * x))")))
    script = emit_smtlib(ob, "cost")
    assert "(declare-const v.x Real)" in script
    assert eval_assertions(script, {"x": 0}) == [False, True]
    assert eval_assertions(script, {"x": 1}) == [True, False]


def _z3_status(script):
    z3 = pytest.importorskip("z3")
    ctx = z3.Context()
    s = z3.Solver(ctx=ctx)
    s.set("timeout", 2000)
    s.from_string(script)
    return str(s.check())


@pytest.mark.parametrize("name", CORPUS)
def test_solver_finds_no_model_for_valid_obligations(name):
    for _, ob, script in _scripts(name):
        if isinstance(script, str):
            assert _z3_status(script) in ("unsat", "unknown"), ob.id


@pytest.mark.parametrize("name", MUTANTS)
def test_solver_agrees_on_mutant_failures(name):
    statuses = []
    for tp, ob, script in _scripts(name):
        if isinstance(script, str) and isinstance(discharge_bounded(ob, tp.instance), Counterexample):
            statuses.append(_z3_status(script))
    assert "unsat" not in statuses
