import pytest
from hypothesis import given, settings, strategies as st

from grady.constraints import (Counterexample, DomainBounds, Unknown, Valid, discharge,
                               discharge_bounded, falsify_sampling, result_to_json)
from grady.syntax import FTrue, parse_effect, parse_formula, parse_type
from grady.typecheck import Implication, Obligation, Subeffect

from conftest import load

CORPUS = ["loop_cost", "insert", "fib", "cowboy", "noisy_cdf", "laplace", "union_let", "let_dep"]
MUTANTS = {"cowboy_tight": {17}, "fib_missing_pop": {7}, "insert_bad_grade": {16, 20},
           "loop_cost_extra_tick": {3}, "noisy_cdf_widened": {9}}


def _implication(ctx, formula):
    ctx = tuple((n, parse_type(t)) for n, t in ctx)
    return Obligation(0, "test", ctx, Implication("v", "unit", FTrue(), parse_formula(formula)))


def _subeffect(ctx, lhs, rhs):
    ctx = tuple((n, parse_type(t)) for n, t in ctx)
    return Obligation(0, "test", ctx, Subeffect(parse_effect(lhs), parse_effect(rhs)))


def test_counterexample_at_zero_without_premise():
    ob = _subeffect([("x", "{x:int | true}")], "nat2eff(abs (x + 1))", "nat2eff(abs (2 * x))")
    res = discharge_bounded(ob, "cost")
    assert isinstance(res, Counterexample) and res.as_dict() == {"x": 0}


def test_valid_with_premise():
    ob = _subeffect([("x", "{x:int | 1 <= x}")], "nat2eff(abs (x + 1))", "nat2eff(abs (2 * x))")
    assert isinstance(discharge_bounded(ob, "cost"), Valid)


@pytest.mark.parametrize("name", CORPUS)
def test_corpus_obligations_valid(name):
    tp = load(name)
    bad = [o.id for o in tp.obligations if not isinstance(discharge_bounded(o, tp.instance), Valid)]
    assert bad == []


@pytest.mark.parametrize("name,failing", sorted(MUTANTS.items()))
def test_mutants_have_counterexamples(name, failing):
    tp = load(name)
    found = {o.id for o in tp.obligations
             if isinstance(discharge_bounded(o, tp.instance), Counterexample)}
    assert found == failing


@settings(max_examples=60, deadline=None)
@given(st.integers(-4, 4), st.integers(-9, 9), st.integers(-4, 4), st.integers(-9, 9),
       st.integers(-8, 8))
def test_linear_implications_agree_with_enumeration(a, b, c, d, lo):
    ob = _implication([("x", f"{{x:int | {lo} <= x}}")], f"{a} * x + {b} <= {c} * x + {d}")
    bound = 16
    res = discharge_bounded(ob, "cost", DomainBounds(int_bound=bound))
    bad = [x for x in range(-bound, bound + 1) if x >= lo and not a * x + b <= c * x + d]
    if bad:
        assert isinstance(res, Counterexample)
        x = res.as_dict()["x"]
        assert x >= lo and not a * x + b <= c * x + d
    else:
        assert isinstance(res, Valid)


def test_counterexample_satisfies_context_premises():
    ob = _implication([("x", "{x:int | 3 <= x}"), ("y", "{y:int | x <= y}")], "y <= 5")
    env = discharge_bounded(ob, "cost").as_dict()
    assert 3 <= env["x"] <= env["y"] and env["y"] > 5


def test_real_grid_density():
    ob = _implication([("x", "{x:real | 0 < x /\\ x < 1}")], "x * 4 <= 1")
    res = discharge_bounded(ob, "cost", DomainBounds(real_denominator=8))
    assert isinstance(res, Counterexample)
    assert 1 < 4 * res.as_dict()["x"] < 4


def test_unbound_payload_variable_unknown():
    ob = _implication([], "z <= 1")
    assert isinstance(discharge_bounded(ob, "cost"), Unknown)


def test_sampling_falsifier_finds_violation():
    ob = _implication([("x", "{x:int | true}")], "x * x <= 100")
    res = falsify_sampling(ob, "cost", trials=2000, seed=1)
    assert isinstance(res, Counterexample) and res.as_dict()["x"] ** 2 > 100


def test_discharge_keeps_valid_when_sampling_agrees():
    ob = _implication([("x", "{x:int | 0 <= x}")], "0 <= x + 1")
    assert isinstance(discharge(ob, "cost", trials=500), Valid)


def test_result_json():
    assert result_to_json(Valid("bounded", 3)) == {"status": "valid", "method": "bounded", "envs": 3}
    assert result_to_json(Counterexample((("x", 0),)))["env"] == {"x": 0}
