import itertools
import json

import pytest
from hypothesis import given, strategies as st

from grady.modelcheck import (COST, DIST, INF_HAT, MUTANTS, WRITER, FinitePredicate,
                              check_associativity, check_composite, check_graded_monad_laws,
                              check_monotonicity, check_par_distribution, check_reindexing,
                              check_restricted_order, check_stack_abstraction, check_strength,
                              check_unit, lift_family, reindex, run_laws)

SPECS = [COST, WRITER, DIST]


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.name)
def test_graded_monad_laws(spec):
    reports = check_graded_monad_laws(spec, 3)
    assert all(r.passed for r in reports), [r for r in reports if not r.passed]
    assert all(r.checked > 0 for r in reports)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.name)
def test_reindexing_and_composite(spec):
    assert check_reindexing(spec, 2).passed
    assert check_composite(spec, 2).passed


@pytest.mark.parametrize("spec", [COST, DIST], ids=lambda s: s.name)
def test_par_distribution(spec):
    assert check_par_distribution(spec, 3).passed


def test_writer_par_needs_empty_word_in_grade():
    # bottom produces the empty word, which grades like "push" exclude
    assert not check_par_distribution(WRITER, 1).passed


def test_restricted_order_exhibits_pair():
    r = check_restricted_order(COST)
    assert r.passed and r.witness is not None
    assert r.witness["P"] != ["i", "k", "l"]


def test_stack_abstraction():
    assert check_stack_abstraction().passed


def test_singleton_universe_trivial():
    assert all(r.passed for r in run_laws(1))


def test_universe_out_of_range():
    with pytest.raises(ValueError):
        check_unit(COST, 5)


@pytest.mark.parametrize("mutant", MUTANTS, ids=lambda m: m.name)
def test_mutants_fail_target_law(mutant):
    r = mutant.run(3)
    assert not r.passed and r.law == mutant.law
    json.dumps(r.to_json())


def test_strict_cost_witness_replays():
    from grady.modelcheck import STRICT_COST
    r = check_unit(STRICT_COST, 3)
    w = r.witness
    P, x = frozenset(w["P"]), w["x"]
    assert x in P and not STRICT_COST.lift(0, P, STRICT_COST.eta(x))


def test_identity_reindexing_is_equality():
    X = {"x": frozenset({"a"}), "y": frozenset()}
    f = {"x": 1, "y": INF_HAT}
    u = {"x": "x", "y": "y"}
    tx = COST.carrier(("a", "b"))
    assert reindex(u, lift_family(COST, f, X, tx)) == lift_family(COST, f, X, tx)


def test_finite_predicate_invariant():
    with pytest.raises(ValueError):
        FinitePredicate(("a",), frozenset({"b"}))


costs = st.sampled_from([0, 1, 2, INF_HAT])


@given(costs, costs, costs)
def test_capped_addition_is_monoid(a, b, c):
    add = COST.mul
    assert add(add(a, b), c) == add(a, add(b, c))
    assert add(0, a) == a == add(a, 0)
    assert COST.leq(a, add(a, b))
