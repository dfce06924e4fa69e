import pytest
from hypothesis import given, strategies as st

from grady.syntax import (App, Inl, Inr, Lam, Lit, Pair, ParseError, Return, SArrow, SBase, SComp,
                          UnitV, Var, erase, fv, parse_comp, parse_program, parse_type, parse_value,
                          pretty, pretty_program, subst)

from conftest import source

CORPUS = ["loop_cost", "insert", "fib", "cowboy", "noisy_cdf", "laplace", "union_let", "let_dep"]

names = st.sampled_from(["x", "y", "z", "w"])
leaves = st.one_of(names.map(Var), st.integers(-50, 50).map(Lit), st.just(UnitV()))
values = st.recursive(
    leaves,
    lambda kids: st.one_of(st.tuples(kids, kids).map(lambda p: Pair(*p)),
                           kids.map(Inl), kids.map(Inr)),
    max_leaves=8)


@given(values)
def test_pretty_value_reparses(v):
    assert parse_value(pretty(v)) == v


@pytest.mark.parametrize("name", CORPUS)
def test_corpus_pretty_roundtrip(name):
    prog = parse_program(source(name))
    assert parse_program(pretty_program(prog)) == prog


@given(values, names)
def test_subst_removes_variable(v, x):
    lam = Lam("y", Return(Pair(Var(x), Var("y"))))
    out = subst(lam, x, v)
    if x != "y":
        assert x not in fv(out) or x in fv(v)


def test_subst_avoids_capture():
    lam = Lam("y", Return(Pair(Var("x"), Var("y"))))
    out = subst(lam, "x", Var("y"))
    assert isinstance(out, Lam) and out.x != "y"
    assert fv(out) == {"y"}


def test_subst_stops_at_shadowing_binder():
    lam = Lam("x", Return(Var("x")))
    assert subst(lam, "x", Lit(1)) == lam


def test_fv_of_application():
    assert fv(App(Var("f"), Pair(Var("a"), Lit(3)))) == {"f", "a"}


def test_erase_forgets_refinements_and_grades():
    ty = parse_type("(x : {x:int | 0 <= x}) -> T[nat2eff(x)] {v:unit | true}")
    assert erase(ty) == SArrow(SBase("int"), SComp(SBase("unit")))


def test_parse_error_carries_position():
    with pytest.raises(ParseError):
        parse_program("#instance cost\nval f : int\nlet f = (")


def test_duplicate_definition_rejected():
    with pytest.raises(ParseError):
        parse_program("#instance cost\nlet x = 1\nlet x = 2")


def test_parse_comp_let():
    c = parse_comp("let y = return 1 in return y")
    assert fv(c) == frozenset()


@pytest.mark.parametrize("text", ["<(0 <= c) /\\ (c <= 1)>", "<((0 <= c) /\\ (c <= 1))>"])
def test_embedded_parenthesized_conjunction(text):
    from grady.syntax import Embed, parse_formula
    f = parse_formula(text)
    assert isinstance(f, Embed)
    assert parse_formula(pretty(f)) == f


def test_embedded_comparison_with_greater_than():
    from grady.syntax import Atom, Embed, parse_formula
    f = parse_formula("<(a + b) > 0>")
    assert isinstance(f, Embed) and isinstance(f.body, Atom)


def test_fresh_scope_restarts_numbering_and_resumes_above():
    from grady.syntax import fresh, fresh_scope
    with fresh_scope():
        a = [fresh("v") for _ in range(3)]
    with fresh_scope():
        b = [fresh("v") for _ in range(3)]
    assert a == b == ["v_1", "v_2", "v_3"]
    assert int(fresh("v").rsplit("_", 1)[1]) > 3


def test_fresh_respects_avoid():
    from grady.syntax import fresh, fresh_scope
    with fresh_scope():
        assert fresh("x", avoid={"x_1"}) == "x_2"
