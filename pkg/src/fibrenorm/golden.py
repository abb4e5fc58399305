"""Exact arithmetic in Q(gamma), gamma = (1 + sqrt 5) / 2, and circle rotation by gamma.

Elements are stored as ``a + b*gamma`` with rational ``a`` and ``b``.  Every
sign decision reduces to comparing a non-negative rational with gamma through
the minimal polynomial X^2 - X - 1, so no floating point enters exact paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, total_ordering
from numbers import Rational

__all__ = [
    "GoldenRational",
    "CirclePoint",
    "GAMMA",
    "ONE",
    "ZERO",
    "arith",
    "compare",
    "fib",
    "mod1",
    "rotate",
    "floor",
]

_SQRT5 = math.sqrt(5.0)
_GAMMA_F = (1.0 + _SQRT5) / 2.0


def _gamma_exceeds(t: Fraction) -> bool:
    """True iff gamma > t, for rational t >= 0."""
    return t * t - t - 1 < 0


def _to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    raise TypeError(f"expected a rational, got {type(value).__name__}")


@total_ordering
class GoldenRational:
    """The number ``a + b*gamma`` with ``a, b`` rational."""

    __slots__ = ("_a", "_b")

    def __init__(self, a=0, b=0) -> None:
        self._a = _to_fraction(a)
        self._b = _to_fraction(b)

    @property
    def a(self) -> Fraction:
        return self._a

    @property
    def b(self) -> Fraction:
        return self._b

    @classmethod
    def coerce(cls, value) -> GoldenRational:
        if isinstance(value, GoldenRational):
            return value
        return cls(_to_fraction(value), 0)

    def __repr__(self) -> str:
        return f"GoldenRational({self._a}, {self._b})"

    def __str__(self) -> str:
        if self._b == 0:
            return str(self._a)
        if self._a == 0:
            return f"{self._b}γ"
        sign = "+" if self._b > 0 else "-"
        return f"{self._a}{sign}{abs(self._b)}γ"

    def __float__(self) -> float:
        return float(self._a) + float(self._b) * _GAMMA_F

    def __hash__(self) -> int:
        if self._b == 0:
            return hash(self._a)
        return hash((self._a, self._b))

    def __bool__(self) -> bool:
        return self._a != 0 or self._b != 0

    def sign(self) -> int:
        """Exact sign of ``a + b*gamma``."""
        a, b = self._a, self._b
        if b == 0:
            return (a > 0) - (a < 0)
        if a == 0 or (a > 0) == (b > 0):
            return 1 if b > 0 else -1
        t = -a / b  # positive rational
        if b > 0:
            # a + b*gamma > 0  <=>  gamma > t
            return 1 if _gamma_exceeds(t) else -1
        # b < 0: a + b*gamma > 0  <=>  gamma < t
        return -1 if _gamma_exceeds(t) else 1

    def conjugate(self) -> GoldenRational:
        # gamma -> 1 - gamma
        return GoldenRational(self._a + self._b, -self._b)

    def norm(self) -> Fraction:
        a, b = self._a, self._b
        return a * a + a * b - b * b

    def __neg__(self) -> GoldenRational:
        return GoldenRational(-self._a, -self._b)

    def __add__(self, other) -> GoldenRational:
        try:
            o = GoldenRational.coerce(other)
        except TypeError:
            return NotImplemented
        return GoldenRational(self._a + o._a, self._b + o._b)

    __radd__ = __add__

    def __sub__(self, other) -> GoldenRational:
        try:
            o = GoldenRational.coerce(other)
        except TypeError:
            return NotImplemented
        return GoldenRational(self._a - o._a, self._b - o._b)

    def __rsub__(self, other) -> GoldenRational:
        return (-self) + other

    def __mul__(self, other) -> GoldenRational:
        try:
            o = GoldenRational.coerce(other)
        except TypeError:
            return NotImplemented
        a, b, c, d = self._a, self._b, o._a, o._b
        return GoldenRational(a * c + b * d, a * d + b * c + b * d)

    __rmul__ = __mul__

    def __truediv__(self, other) -> GoldenRational:
        try:
            o = GoldenRational.coerce(other)
        except TypeError:
            return NotImplemented
        n = o.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero in Q(gamma)")
        num = self * o.conjugate()
        return GoldenRational(num._a / n, num._b / n)

    def __rtruediv__(self, other) -> GoldenRational:
        return GoldenRational.coerce(other) / self

    def __pow__(self, k: int) -> GoldenRational:
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return ONE / (self ** (-k))
        result, base = ONE, self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other) -> bool:
        try:
            o = GoldenRational.coerce(other)
        except TypeError:
            return NotImplemented
        return self._a == o._a and self._b == o._b

    def __lt__(self, other) -> bool:
        try:
            o = GoldenRational.coerce(other)
        except TypeError:
            return NotImplemented
        return (self - o).sign() < 0


ZERO = GoldenRational(0, 0)
ONE = GoldenRational(1, 0)
GAMMA = GoldenRational(0, 1)


def arith(x: GoldenRational, y: GoldenRational, op: str) -> GoldenRational:
    """Apply ``op`` in {"add", "sub", "mul", "div"}."""
    if op == "add":
        return x + y
    if op == "sub":
        return x - y
    if op == "mul":
        return x * y
    if op == "div":
        return x / y
    raise ValueError(f"unknown operation {op!r}")


def compare(x, y) -> int:
    """Return -1, 0 or 1 as x <, ==, > y (exact)."""
    return (GoldenRational.coerce(x) - GoldenRational.coerce(y)).sign()


@lru_cache(maxsize=None)
def fib(n: int) -> int:
    """Fibonacci numbers indexed from -2: F(-2)=1, F(-1)=0, F(0)=F(1)=1."""
    if n < -2:
        raise ValueError(f"fib is defined for n >= -2, got {n}")
    if n == -2:
        return 1
    a, b = 0, 1  # F(-1), F(0)
    for _ in range(n + 1):
        a, b = b, a + b
    return a


def floor(x: GoldenRational) -> int:
    """Exact floor of ``a + b*gamma``.

    Brackets gamma in [3/2, 2] to get an integer search range, then bisects on
    exact comparisons.
    """
    x = GoldenRational.coerce(x)
    a, b = x.a, x.b
    ends = (a + b * Fraction(3, 2), a + 2 * b)
    lo = math.floor(min(ends)) - 1
    hi = math.floor(max(ends)) + 1
    # invariant: lo <= x < hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if compare(x, mid) >= 0:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class CirclePoint:
    """A point of the circle R/Z, stored as its representative in [0, 1)."""

    t: GoldenRational

    def __post_init__(self) -> None:
        t = GoldenRational.coerce(self.t)
        if t.sign() < 0 or compare(t, 1) >= 0:
            raise ValueError(f"circle coordinate {t} outside [0, 1)")
        object.__setattr__(self, "t", t)

    def __float__(self) -> float:
        return float(self.t)


def mod1(x) -> CirclePoint:
    x = GoldenRational.coerce(x)
    return CirclePoint(x - floor(x))


def rotate(t: CirclePoint, k: int) -> CirclePoint:
    """Apply the rotation x -> x + gamma (mod 1) ``k`` times (k may be negative)."""
    return mod1(t.t + GoldenRational(0, k))
