import math
from decimal import Decimal
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fibrenorm.golden import (
    GAMMA,
    ONE,
    ZERO,
    CirclePoint,
    GoldenRational,
    arith,
    compare,
    fib,
    floor,
    mod1,
    rotate,
)
from tests.oracles import fib_standard, golden_decimal

fractions = st.fractions(min_value=-1000, max_value=1000, max_denominator=500)
golden = st.builds(GoldenRational, fractions, fractions)


def test_gamma_squared():
    assert GAMMA * GAMMA == GAMMA + 1
    assert ONE / GAMMA == GAMMA - 1


def test_fib_indexing():
    assert [fib(n) for n in range(-2, 8)] == [1, 0, 1, 1, 2, 3, 5, 8, 13, 21]
    with pytest.raises(ValueError):
        fib(-3)


@pytest.mark.parametrize("n", range(0, 40))
def test_fib_matches_standard_shifted(n):
    assert fib(n) == fib_standard(n + 1)


@given(golden)
def test_sign_matches_decimal(x):
    d = golden_decimal(x)
    want = (d > 0) - (d < 0)
    assert x.sign() == want


@given(golden, golden)
def test_compare_matches_decimal(x, y):
    dx, dy = golden_decimal(x), golden_decimal(y)
    assert compare(x, y) == (dx > dy) - (dx < dy)


@given(golden, golden)
def test_field_ops_match_decimal(x, y):
    for op, f in (("add", lambda a, b: a + b), ("sub", lambda a, b: a - b), ("mul", lambda a, b: a * b)):
        got = golden_decimal(arith(x, y, op))
        assert abs(got - f(golden_decimal(x), golden_decimal(y))) < Decimal(10) ** -50
    if y:
        got = golden_decimal(arith(x, y, "div"))
        assert abs(got - golden_decimal(x) / golden_decimal(y)) < Decimal(10) ** -40
        assert (x / y) * y == x


def test_division_by_zero():
    with pytest.raises(ZeroDivisionError):
        GAMMA / ZERO


def test_unknown_op():
    with pytest.raises(ValueError):
        arith(ONE, ONE, "pow")


@given(golden)
def test_floor_matches_decimal(x):
    assert floor(x) == math.floor(golden_decimal(x))


def test_floor_examples():
    assert floor(GoldenRational(0, 1000)) == 1618
    assert floor(GAMMA - 1) == 0
    assert floor(GoldenRational(-1, 0)) == -1


def test_mod1_and_rotation():
    assert mod1(2 * GAMMA).t == GoldenRational(-3, 2)
    t = mod1(GoldenRational(Fraction(1, 3), 0))
    assert rotate(rotate(t, 5), -5) == t
    assert rotate(t, 1).t == mod1(t.t + GAMMA).t


def test_circle_point_range():
    with pytest.raises(ValueError):
        CirclePoint(ONE)
    with pytest.raises(ValueError):
        CirclePoint(GoldenRational(0, -1) + 1 - GAMMA)  # -2*gamma + 1 < 0
    assert float(CirclePoint(GAMMA - 1)) == pytest.approx(0.6180339887)


@given(golden)
def test_mod1_in_unit_interval(x):
    t = mod1(x).t
    assert ZERO <= t < ONE
    assert t.b == x.b
    assert (x - t).b == 0
