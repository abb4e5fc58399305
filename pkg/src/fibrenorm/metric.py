"""Points of the full shift, distance to K, the counters kappa-tilde and accidents.

A point is a finite prefix followed by a tail: a point of K given by its circle
coordinate, an eventually periodic word, or rho itself.  Points of K are
handled exactly, so membership in K is decided without scanning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

from .fibword import (
    _check_word,
    cylinder_interval,
    extend_cylinder,
    itinerary,
    longest_factor_prefix,
    orbit_is_clean,
    rho_prefix,
    substitute,
)
from .golden import GAMMA, CirclePoint, fib, mod1, rotate

__all__ = [
    "KTail",
    "PeriodicTail",
    "RhoTail",
    "Point",
    "DistanceResult",
    "INFINITE",
    "DEFAULT_CAP",
    "UndefinedCounterError",
    "CapExhaustedError",
    "dist_to_K",
    "kappa_tilde",
    "accidents",
    "coincidence_length",
    "closest_K_point",
    "check_no_accident",
    "check_H_preserves_closest",
    "RHO_COORD",
]

INFINITE = math.inf
DEFAULT_CAP = 10 * fib(15)

# rho is the coding of 2*gamma mod 1
RHO_COORD = mod1(2 * GAMMA)
_INV_G = GAMMA - 1  # 1/gamma
_INV_G2 = 2 - GAMMA  # 1/gamma^2


class UndefinedCounterError(ValueError):
    """kappa-tilde requested for a point of K (or one not resolved within the cap)."""


class CapExhaustedError(RuntimeError):
    """A distance scan reached its cap without deciding."""


@dataclass(frozen=True)
class KTail:
    """The point of K coded by the circle coordinate ``t``."""

    t: CirclePoint

    def __post_init__(self) -> None:
        if not isinstance(self.t, CirclePoint):
            object.__setattr__(self, "t", mod1(self.t))

    def symbols(self, n: int) -> str:
        return itinerary(self.t, n)


@dataclass(frozen=True)
class PeriodicTail:
    """The periodic word p p p ..."""

    p: str

    def __post_init__(self) -> None:
        if not self.p:
            raise ValueError("period must be non-empty")
        _check_word(self.p)

    def symbols(self, n: int) -> str:
        reps = -(-n // len(self.p))
        return (self.p * reps)[:n]


@dataclass(frozen=True)
class RhoTail:
    """The fixed word rho."""

    def symbols(self, n: int) -> str:
        return rho_prefix(n)


Tail = Union[KTail, PeriodicTail, RhoTail]


@dataclass(frozen=True)
class Point:
    """A point of the full shift: ``prefix`` followed by ``tail``."""

    prefix: str = ""
    tail: Tail = field(default_factory=RhoTail)

    def __post_init__(self) -> None:
        _check_word(self.prefix)

    def __str__(self) -> str:
        return f"{self.prefix}|{self.tail}"

    def symbols(self, n: int) -> str:
        """The first ``n`` symbols."""
        m = len(self.prefix)
        if n <= m:
            return self.prefix[:n]
        return self.prefix + self.tail.symbols(n - m)

    @property
    def first_symbol(self) -> str:
        return self.symbols(1)

    def shift(self, k: int = 1) -> Point:
        """sigma^k of the point."""
        if k < 0:
            raise ValueError("k must be non-negative")
        m = len(self.prefix)
        if k <= m:
            return Point(self.prefix[k:], self.tail)
        k -= m
        tail = self.tail
        if isinstance(tail, RhoTail):
            return Point("", KTail(rotate(RHO_COORD, k)))
        if isinstance(tail, KTail):
            return Point("", KTail(rotate(tail.t, k)))
        r = k % len(tail.p)
        return Point("", PeriodicTail(tail.p[r:] + tail.p[:r]))

    def substitute(self, n: int = 1) -> Point:
        """H^n of the point; K-tails are mapped exactly on the circle."""
        x = self
        for _ in range(n):
            x = x._substitute_once()
        return x

    def _substitute_once(self) -> Point:
        tail = self.tail
        if isinstance(tail, RhoTail):
            return Point(substitute(self.prefix), tail)
        if isinstance(tail, PeriodicTail):
            return Point(substitute(self.prefix), PeriodicTail(substitute(tail.p)))
        t = tail.t.t
        prefix = self.prefix
        if not orbit_is_clean(t):
            # move the symbols up to the last partition hit into the prefix
            k = int(2 - t.b)
            prefix += itinerary(t, k)
            t = rotate(tail.t, k).t
        if itinerary(t, 1) == "0":
            image = _INV_G2 - t * _INV_G
        else:
            image = 1 - t * _INV_G
        return Point(substitute(prefix), KTail(mod1(image)))

    def in_K(self) -> bool:
        """Exact membership of the point in K."""
        tail = self.tail
        if isinstance(tail, PeriodicTail):
            return False  # K contains no periodic points
        t = RHO_COORD.t if isinstance(tail, RhoTail) else tail.t.t
        w = self.prefix
        if not w:
            return True
        s = mod1(t - len(w) * GAMMA)
        if itinerary(s, len(w)) == w:
            return True
        return orbit_is_clean(t) and itinerary(s, len(w), upper=True) == w


@dataclass(frozen=True)
class DistanceResult:
    """d(x, K) = 2^-n.  ``status`` is "finite", "infinite" (x in K) or "capped"."""

    n: float
    status: str = "finite"

    @property
    def finite(self) -> bool:
        return self.status == "finite"

    @property
    def distance(self) -> float:
        return 0.0 if not self.finite else 2.0 ** (-self.n)


def dist_to_K(x: Point, cap: int = DEFAULT_CAP) -> DistanceResult:
    """Length of the longest prefix of ``x`` that is a factor of rho.

    Points of K give n = INFINITE with status "infinite"; a scan that finds
    every prefix up to ``cap`` in the language reports status "capped".
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if not isinstance(x.tail, PeriodicTail) and x.in_K():
        return DistanceResult(INFINITE, "infinite")
    length = max(16, 2 * len(x.prefix))
    while True:
        length = min(length, cap)
        s = x.symbols(length)
        n = longest_factor_prefix(s)
        if n < length:
            return DistanceResult(n)
        if length >= cap:
            return DistanceResult(INFINITE, "capped")
        length *= 2


def _finite_dist(x: Point, cap: int) -> int:
    d = dist_to_K(x, cap)
    if d.status == "capped":
        raise CapExhaustedError(f"distance of {x} undecided within {cap} symbols")
    return d.n


def kappa_tilde(x: Point, a: str, cap: int = DEFAULT_CAP) -> int:
    """Number of symbols ``a`` among the first n symbols of x, d(x,K) = 2^-n."""
    if a not in ("0", "1"):
        raise ValueError(f"symbol must be '0' or '1', got {a!r}")
    d = dist_to_K(x, cap)
    if not d.finite:
        raise UndefinedCounterError(f"kappa-tilde undefined: distance status {d.status}")
    return x.symbols(int(d.n)).count(a)


def accidents(x: Point, horizon: int, cap: int = DEFAULT_CAP) -> list[int]:
    """Positions 1 <= j <= horizon with d(sigma^j x, K) <= d(sigma^(j-1) x, K).

    Steps where either distance is zero (point in K) are not reported.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    out = []
    prev = dist_to_K(x, cap)
    y = x
    for j in range(1, horizon + 1):
        y = y.shift(1)
        cur = dist_to_K(y, cap)
        if "capped" in (prev.status, cur.status):
            raise CapExhaustedError(f"distance undecided near shift {j}")
        if prev.finite and cur.finite and cur.n >= prev.n:
            out.append(j)
        prev = cur
    return out


def _common_prefix(x: Point, y: Point, cap: int) -> int:
    length = 64
    while True:
        length = min(length, cap)
        a, b = x.symbols(length), y.symbols(length)
        for i in range(length):
            if a[i] != b[i]:
                return i
        if length >= cap:
            raise CapExhaustedError(f"points agree on the first {cap} symbols")
        length *= 2


def coincidence_length(x: Point, y: Point, n: int, cap: int = DEFAULT_CAP) -> int:
    """Length of the maximal common prefix of H^n(x) and H^n(y)."""
    return _common_prefix(x.substitute(n), y.substitute(n), cap)


def closest_K_point(x: Point, cap: int = DEFAULT_CAP) -> Point:
    """A point of K sharing the maximal factor prefix of x.

    The factor prefix is continued greedily by the smaller symbol whenever the
    continuation stays in the language.
    """
    n = _finite_dist(x, cap)
    if not math.isfinite(n):
        raise UndefinedCounterError("x lies in K")
    n = int(n)
    w = x.symbols(n)
    ci = cylinder_interval(w)
    for k in range(n, n + 16):
        nxt = extend_cylinder(ci, k, "0")
        ci = nxt if nxt else extend_cylinder(ci, k, "1")
    return Point("", KTail(CirclePoint(ci.lo)))


def check_no_accident(x: Point, n: int, cap: int = DEFAULT_CAP) -> bool:
    """True iff H^n(x) has no accident among its first F_{n*} - 1 shifts."""
    n_star = n + 1 if x.first_symbol == "0" else n
    horizon = fib(n_star) - 1
    if horizon < 1:
        return True
    return not accidents(x.substitute(n), horizon, cap)


def check_H_preserves_closest(x: Point, n: int, cap: int = DEFAULT_CAP) -> bool:
    """True iff d(H^n x, K) = d(H^n x, H^n y) for the closest K point y of x."""
    y = closest_K_point(x, cap)
    hx = x.substitute(n)
    d = dist_to_K(hx, cap)
    if not d.finite:
        return False
    return d.n == _common_prefix(hx, y.substitute(n), cap)
