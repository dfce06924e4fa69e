import pytest

from grady.syntax import Graded, parse_program, parse_type, parse_value
from grady.typecheck import (CheckError, Implication, SimpleTypeError, Subeffect, check_program,
                             check_value, subtype)

from conftest import load

CORPUS = ["loop_cost", "insert", "fib", "cowboy", "noisy_cdf", "laplace", "union_let", "let_dep"]


@pytest.mark.parametrize("name", CORPUS)
def test_corpus_checks(name):
    tp = load(name)
    assert tp.obligations
    assert [o.id for o in tp.obligations] == list(range(len(tp.obligations)))


def test_instance_recorded():
    assert load("fib").instance.name == "temporal"
    assert load("cowboy").instance.name == "expect"


def test_pragma_only_program_has_no_obligations():
    assert check_program(parse_program("#instance cost\n")).obligations == []


def test_simple_type_mismatch():
    src = "#instance cost\nval f : (x : int) -> T[nat2eff(0)] int\nlet f x = return (x, x)"
    with pytest.raises(SimpleTypeError):
        check_program(parse_program(src))


def test_unbound_variable():
    src = "#instance cost\nval f : (x : int) -> T[nat2eff(0)] int\nlet f x = return y"
    with pytest.raises(CheckError):
        check_program(parse_program(src))


def test_unknown_generic_effect():
    src = "#instance cost\nval m : T[nat2eff(1)] unit\nlet m = Emit \"a\""
    with pytest.raises(CheckError):
        check_program(parse_program(src))


def test_computation_type_on_parameter_rejected():
    with pytest.raises(CheckError):
        check_program(parse_program("#instance cost\nval p : T[nat2eff(1)] unit"))


def test_subtype_of_refinements_emits_implication():
    obs = subtype([("x", parse_type("{x:int | 1 <= x}"))],
                  parse_type("{y:int | y = x}"), parse_type("{y:int | 1 <= y}"))
    assert [type(o.payload) for o in obs] == [Implication]


def test_graded_subtype_emits_subeffect():
    a = parse_type("T[nat2eff(abs (x + 1))] {y:int | y = x}")
    b = parse_type("T[nat2eff(abs (2 * x))] {y:int | 1 <= y}")
    assert isinstance(a, Graded)
    obs = subtype([("x", parse_type("{x:int | 1 <= x}"))], a, b)
    kinds = {type(o.payload) for o in obs}
    assert kinds == {Implication, Subeffect}


def test_check_value_literal():
    obs = check_value([], parse_value("3"), parse_type("{v:int | 0 <= v}"))
    assert len(obs) == 1 and obs[0].kind == "implication"


def test_obligation_json_is_plain():
    import json
    for o in load("loop_cost").obligations:
        json.dumps(o.to_json())


def test_ill_formed_refinement_rejected():
    src = "#instance cost\nval f : (x : int) -> T[nat2eff(0)] {v:int | v <= z}\nlet f x = return x"
    with pytest.raises(CheckError):
        check_program(parse_program(src))
