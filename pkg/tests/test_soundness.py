import math
from fractions import Fraction

import pytest

from grady.soundness import check_cost, corpus_matrix, hoeffding_tolerance, run_matrix

from conftest import load

FAST = ["loop_cost", "insert", "fib", "cowboy", "union_let", "let_dep"]
MUTANTS = ["cowboy_tight", "fib_missing_pop", "insert_bad_grade", "loop_cost_extra_tick"]


def test_hoeffding_tolerance_value():
    assert hoeffding_tolerance(10 ** 5, 1e-3) == pytest.approx(0.005877, abs=1e-6)
    assert hoeffding_tolerance(1, 1e-3) == pytest.approx(math.sqrt(math.log(1000) / 2))


def test_hoeffding_rejects_bad_arguments():
    with pytest.raises(ValueError):
        hoeffding_tolerance(0)


@pytest.mark.parametrize("name", FAST)
def test_corpus_rows_pass(name):
    rep = run_matrix(load(name), name, trials=2000)
    assert rep.rows and rep.ok, [r for r in rep.failures][:3]


@pytest.mark.parametrize("name", MUTANTS)
def test_mutants_violate(name):
    rep = run_matrix(load(name), name, trials=2000)
    assert rep.failures


def test_laplace_sampled_with_tolerance():
    rep = run_matrix(load("laplace"), "laplace", trials=5000, seed=3)
    (row,) = rep.rows
    assert row.verdict == "pass" and row.tolerance == pytest.approx(hoeffding_tolerance(5000))


def test_loop_cost_equality_when_below():
    rep = check_cost(load("loop_cost"), "loop", [{"n": 7, "arg": 2}])
    (row,) = rep.rows
    assert row.observed == 5 and row.grade == "5"


def test_union_let_exact_mass():
    rep = run_matrix(load("union_let"), "union_let")
    main = [r for r in rep.rows if r.decl == "main"]
    (row,) = main
    assert row.tolerance == 0 and row.note == "exact failure probability"
    assert Fraction(row.observed) == Fraction(2, 25) and Fraction(row.grade) == Fraction(2, 5)


def test_unknown_program_skipped():
    rep = run_matrix(load("loop_cost"), "something_else")
    assert [r.verdict for r in rep.rows] == ["skipped"]


def test_matrix_for_mutant_uses_base():
    assert corpus_matrix("fib_missing_pop") == corpus_matrix("fib")


def test_report_json_deterministic():
    a = run_matrix(load("insert"), "insert", seed=4).to_json()
    b = run_matrix(load("insert"), "insert", seed=4).to_json()
    assert a == b and a["summary"]["fail"] == 0
