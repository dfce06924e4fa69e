import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from grady.interp import (Bottom, Converged, InterpError, dist_decl, eval_comp, eval_dist,
                          parse_runtime_value, run_decl, sample_laplace)
from grady.prelude import UNIT, VInl, VInr, VPair
from grady.syntax import parse_comp

from conftest import load


def test_tick_cost():
    o = eval_comp({}, parse_comp("Tick 3"), inst="cost")
    assert isinstance(o, Converged) and o.trace == 3 and o.value == UNIT


@given(st.integers(-6, 6), st.integers(-6, 6))
def test_loop_cost_exact(n, x):
    o = run_decl(load("loop_cost").program, "loop", {"n": n}, x)
    assert isinstance(o, Converged) and o.trace == max(0, n - x)


def test_fib_event_word():
    o = run_decl(load("fib").program, "fib", arg=2)
    assert o.value == 2
    assert o.trace == ("push", "push", "pop", "push", "pop", "pop")


def test_divergence_is_bottom_and_keeps_prefix():
    o = eval_comp({}, parse_comp("let _ = Tick 2 in (rec f x -> f x) 0"), fuel=50, inst="cost")
    assert isinstance(o, Bottom) and o.trace == 2 and o.fuel_used == 50


def test_fuel_zero():
    o = eval_comp({}, parse_comp("(rec f x -> f x) 0"), fuel=0, inst="cost")
    assert isinstance(o, Bottom)


def test_bern_distribution_exact():
    d = eval_dist({}, parse_comp("Bern (1/2)"), inst="ubound")
    assert d.mass(lambda o: isinstance(o, Converged) and o.value == VInl(UNIT)) == Fraction(1, 2)
    assert d.total == 1 and d.bottom_mass == 0


def test_union_let_failure_mass():
    d = dist_decl(load("union_let").program, "main")
    assert d.mass(lambda o: o.value == -1) == Fraction(2, 25)


def test_cowboy_bottom_mass_decreases_with_fuel():
    prog = load("cowboy").program
    arg = VPair(VInl(UNIT), Fraction(1, 6))
    masses = [dist_decl(prog, "aux", {"a": Fraction(1, 2), "b": Fraction(1, 2)}, arg, fuel).bottom_mass
              for fuel in (5, 10, 20)]
    assert masses[0] > masses[1] > masses[2] > 0


def test_laplace_rejects_nonpositive_rate():
    with pytest.raises(ValueError):
        sample_laplace(0, 0, random.Random(0))


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([Fraction(1, 2), 1, 2]), st.integers(0, 1000))
def test_laplace_tail_frequency(rate, seed):
    rng = random.Random(seed)
    n, t = 4000, 1
    hits = sum(abs(sample_laplace(rate, 0, rng)) > t for _ in range(n))
    expected = math.exp(-float(rate) * t)
    assert abs(hits / n - expected) < 5 * math.sqrt(expected * (1 - expected) / n) + 0.01


def test_laplace_is_deterministic_per_seed():
    a = [sample_laplace(1, 0, random.Random(5)) for _ in range(3)]
    b = [sample_laplace(1, 0, random.Random(5)) for _ in range(3)]
    assert a == b


def test_laplace_outside_sampling_mode():
    with pytest.raises(InterpError):
        eval_dist({}, parse_comp("Lap (1, 0)"), inst="ubound")


def test_runtime_value_syntax():
    v = parse_runtime_value("(1 :: nil, ((0 :: nil) :: lnil))")
    assert v == VPair((1,), ((0,),))
    assert parse_runtime_value("inr ()") == VInr(UNIT)


def test_missing_parameter():
    with pytest.raises(InterpError):
        run_decl(load("loop_cost").program, "loop", {}, 0)
