"""Exact arithmetic in the biquadratic field Q(sqrt2, sqrt3).

Elements are stored as four rational coordinates on the basis
1, sqrt2, sqrt3, sqrt6.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

Rational = Union[int, Fraction]

# products of basis elements: index pairs -> (coefficient, index)
# basis order: 0 -> 1, 1 -> sqrt2, 2 -> sqrt3, 3 -> sqrt6
_TABLE = {
    (0, 0): (1, 0), (0, 1): (1, 1), (0, 2): (1, 2), (0, 3): (1, 3),
    (1, 1): (2, 0), (1, 2): (1, 3), (1, 3): (2, 2),
    (2, 2): (3, 0), (2, 3): (3, 1),
    (3, 3): (6, 0),
}
_ROOTS = (1.0, math.sqrt(2.0), math.sqrt(3.0), math.sqrt(6.0))


class Biquadratic:
    """a + b*sqrt2 + c*sqrt3 + d*sqrt6 with rational a, b, c, d."""

    __slots__ = ("coeffs",)

    def __init__(self, a: Rational = 0, b: Rational = 0, c: Rational = 0, d: Rational = 0):
        self.coeffs = (Fraction(a), Fraction(b), Fraction(c), Fraction(d))

    @classmethod
    def _lift(cls, other) -> "Biquadratic":
        if isinstance(other, Biquadratic):
            return other
        if isinstance(other, (int, Fraction)):
            return cls(other)
        raise TypeError(f"cannot combine Biquadratic with {type(other).__name__}")

    def __add__(self, other):
        o = self._lift(other)
        return Biquadratic(*(x + y for x, y in zip(self.coeffs, o.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return Biquadratic(*(-x for x in self.coeffs))

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        o = self._lift(other)
        out = [Fraction(0)] * 4
        for i, x in enumerate(self.coeffs):
            if not x:
                continue
            for j, y in enumerate(o.coeffs):
                if not y:
                    continue
                k, idx = _TABLE[(min(i, j), max(i, j))]
                out[idx] += k * x * y
        return Biquadratic(*out)

    __rmul__ = __mul__

    def conjugate(self, flip2: bool, flip3: bool) -> "Biquadratic":
        """Apply the field automorphism sending sqrt2 -> -sqrt2 and/or sqrt3 -> -sqrt3."""
        a, b, c, d = self.coeffs
        s2 = -1 if flip2 else 1
        s3 = -1 if flip3 else 1
        return Biquadratic(a, s2 * b, s3 * c, s2 * s3 * d)

    def norm(self) -> Fraction:
        """Product of the four Galois conjugates, always rational."""
        prod = self * self.conjugate(True, False) * self.conjugate(False, True) * self.conjugate(True, True)
        assert prod.is_rational()
        return prod.coeffs[0]

    def inverse(self) -> "Biquadratic":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of zero in Q(sqrt2, sqrt3)")
        others = self.conjugate(True, False) * self.conjugate(False, True) * self.conjugate(True, True)
        return others * Biquadratic(1 / n)

    def __truediv__(self, other):
        return self * self._lift(other).inverse()

    def __rtruediv__(self, other):
        return self._lift(other) * self.inverse()

    def __eq__(self, other):
        try:
            o = self._lift(other)
        except TypeError:
            return NotImplemented
        return self.coeffs == o.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def __float__(self):
        return math.fsum(float(x) * r for x, r in zip(self.coeffs, _ROOTS))

    def __repr__(self):
        a, b, c, d = self.coeffs
        return f"Biquadratic({a}, {b}, {c}, {d})"


SQRT2 = Biquadratic(0, 1)
SQRT3 = Biquadratic(0, 0, 1)
SQRT6 = Biquadratic(0, 0, 0, 1)
