import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from denseforest.exact import SQRT2, SQRT3, SQRT6, Biquadratic

rationals = st.fractions(min_value=-20, max_value=20, max_denominator=12)
biquads = st.builds(Biquadratic, rationals, rationals, rationals, rationals)


def test_square_roots_square_to_integers():
    assert SQRT2 * SQRT2 == 2
    assert SQRT3 * SQRT3 == 3
    assert SQRT2 * SQRT3 == SQRT6
    assert SQRT6 * SQRT6 == 6


def test_float_conversion():
    x = Biquadratic(1, Fraction(1, 2), -2, 3)
    assert math.isclose(float(x), 1 + math.sqrt(2) / 2 - 2 * math.sqrt(3) + 3 * math.sqrt(6))


def test_division_by_zero_raises():
    with pytest.raises(ZeroDivisionError):
        SQRT2 / Biquadratic(0)


@given(biquads, biquads, biquads)
def test_ring_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert (a * b) * c == a * (b * c)
    assert a * b == b * a
    assert a - a == 0


@given(biquads)
def test_inverse_is_exact(a):
    if a == 0:
        return
    assert a * (1 / a) == 1


@given(biquads, biquads)
def test_product_matches_floats(a, b):
    scale = max(1.0, abs(float(a)) * abs(float(b)))
    assert math.isclose(float(a * b), float(a) * float(b), rel_tol=1e-9, abs_tol=1e-9 * scale)
