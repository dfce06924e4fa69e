from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from grady.effects import (COST, EXPECT, TEMPORAL, UBOUND, Lang, NatInf, RealNN, StackAtom,
                           get_instance, lang_le, word_profile)
from grady.ground import INF
from grady.prelude import EvalError
from grady.syntax import parse_effect

words = st.lists(st.sampled_from(["push", "pop"]), max_size=7).map(tuple)
stack_atoms = st.builds(StackAtom, st.integers(-3, 3), st.integers(0, 3))
nats = st.one_of(st.integers(0, 20).map(NatInf), st.just(NatInf(INF)))


def _brute_stack(word, d, m):
    depths = [sum(1 if e == "push" else -1 for e in word[:i]) for i in range(len(word) + 1)]
    return depths[-1] == d and max(depths) <= m


@given(words, stack_atoms)
def test_stack_membership_matches_prefix_depths(w, a):
    assert Lang((a,)).contains(w) == _brute_stack(w, a.d, a.m)


@given(words, stack_atoms, stack_atoms)
def test_composition_membership_is_concatenation(w, a, b):
    expected = any(_brute_stack(w[:i], a.d, a.m) and _brute_stack(w[i:], b.d, b.m)
                   for i in range(len(w) + 1))
    assert Lang((a, b)).contains(w) == expected


@given(words)
def test_word_profile(w):
    net, peak = word_profile(w)
    assert net == w.count("push") - w.count("pop")
    assert Lang((StackAtom(net, peak),)).contains(w)


def test_profile_of_composition():
    assert Lang((StackAtom(1, 2), StackAtom(-1, 1))).profile() == (0, 2)


def test_lang_le_stack_atoms():
    assert lang_le(Lang((StackAtom(0, 1),)), Lang((StackAtom(0, 2),)))
    assert not lang_le(Lang((StackAtom(0, 3),)), Lang((StackAtom(0, 2),)))
    assert lang_le(Lang(("push", "pop")), Lang((StackAtom(0, 1),)))


def test_empty_stack_language_below_everything():
    assert lang_le(Lang((StackAtom(2, 1),)), Lang(("pop",)))


@given(nats, nats, nats)
def test_cost_monoid_associative(a, b, c):
    mul = COST.mmul
    assert mul(mul(a, b), c) == mul(a, mul(b, c))
    assert mul(COST.munit, a) == a


@given(nats, nats)
def test_cost_order_compatible_with_addition(a, b):
    assert COST.mleq(a, COST.mmul(a, b))


def test_infinity_absorbs():
    assert COST.mmul(NatInf(3), NatInf(INF)) == NatInf(INF)
    assert COST.mleq(NatInf(10 ** 9), NatInf(INF))
    assert not COST.mleq(NatInf(INF), NatInf(10 ** 9))


def test_eval_effect_with_environment():
    e = parse_effect("nat2eff(max(0, n - x))")
    assert COST.eval_effect(e, {"n": 5, "x": 2}) == NatInf(3)
    assert COST.eval_effect(e, {"n": 1, "x": 2}) == NatInf(0)


def test_nat2eff_rejects_negative():
    with pytest.raises(EvalError):
        COST.eval_effect(parse_effect("nat2eff(0 - 1)"), {})


def test_ubound_exact_rationals():
    g = UBOUND.mmul(RealNN(Fraction(1, 5)), RealNN(Fraction(1, 5)))
    assert g == RealNN(Fraction(2, 5))


def test_temporal_unit_is_empty_word():
    assert TEMPORAL.munit == Lang(())
    assert TEMPORAL.mmul(Lang(("push",)), Lang(("pop",))) == Lang(("push", "pop"))


def test_expect_truth_values_are_extended_reals():
    assert EXPECT.expect_omega and not COST.expect_omega


def test_unknown_instance():
    with pytest.raises(ValueError):
        get_instance("nondeterminism")
