"""Potentials of the form g(x)/n^alpha, the renormalization operator R and its fixed point.

A potential only needs to be read through ``depth`` leading symbols, the
distance index n (d(x,K) = 2^-n) and the counters kappa-tilde.  That is what
makes the closed form for R^n cheap: along sigma^j H^n(x) all three are known
from one symbol buffer.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Protocol, Union

from .fibword import cylinder_interval, factors
from .golden import GAMMA, GoldenRational, fib
from .metric import DEFAULT_CAP, CapExhaustedError, Point, UndefinedCounterError, dist_to_K

__all__ = [
    "Constant",
    "DepthTable",
    "TildeDensity",
    "Potential",
    "TildePotential",
    "ConvergenceRow",
    "eval_potential",
    "apply_R",
    "iterate_R_direct",
    "iterate_R_closed",
    "tilde_V",
    "tilde_argument",
    "fixed_point_check_exact",
    "mu_K_cylinder",
    "integrate_density",
    "toeplitz_limit_check",
    "convergence_experiment",
    "MAX_K",
]

MAX_K = 22
_SQRT5 = 2 * GAMMA - 1


def _exact(value) -> Optional[GoldenRational]:
    if isinstance(value, GoldenRational):
        return value
    if isinstance(value, (int, Fraction)):
        return GoldenRational(value)
    return None


@dataclass(frozen=True)
class Constant:
    c: Union[float, int, Fraction] = 1

    depth = 0

    def __post_init__(self) -> None:
        if not self.c > 0:
            raise ValueError("density must be positive")

    def exact(self, w: str) -> Optional[GoldenRational]:
        return _exact(self.c)

    def value(self, w: str) -> float:
        return float(self.c)


@dataclass(frozen=True)
class DepthTable:
    """Density depending on the first ``m`` symbols."""

    m: int
    table: dict = field(hash=False)

    def __post_init__(self) -> None:
        words = {"".join(p) for p in itertools.product("01", repeat=self.m)}
        if set(self.table) != words:
            raise ValueError(f"table must cover exactly the {2 ** self.m} words of length {self.m}")
        if any(not v > 0 for v in self.table.values()):
            raise ValueError("density must be positive")

    @property
    def depth(self) -> int:
        return self.m

    def exact(self, w: str) -> Optional[GoldenRational]:
        return _exact(self.table[w[: self.m]])

    def value(self, w: str) -> float:
        return float(self.table[w[: self.m]])

    def scaled(self, factor) -> DepthTable:
        return DepthTable(self.m, {k: v * factor for k, v in self.table.items()})


@dataclass(frozen=True)
class TildeDensity:
    """gamma^2/sqrt5 on [0] and gamma/sqrt5 on [1]."""

    depth = 1
    _VALUES = {"0": GAMMA * GAMMA / _SQRT5, "1": GAMMA / _SQRT5}

    def exact(self, w: str) -> GoldenRational:
        return self._VALUES[w[0]]

    def value(self, w: str) -> float:
        return float(self._VALUES[w[0]])


Density = Union[Constant, DepthTable, TildeDensity]


class PotentialLike(Protocol):
    depth: int

    def at_distance(self, lead: str, n: int, k0: int, k1: int) -> float: ...


@dataclass(frozen=True)
class Potential:
    """V(x) = g(x) / n^alpha with d(x,K) = 2^-n; the correction term is taken to be 0."""

    alpha: float
    density: Density = field(default_factory=Constant)

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    @property
    def depth(self) -> int:
        return self.density.depth

    def at_distance(self, lead: str, n: int, k0: int = 0, k1: int = 0) -> float:
        return self.density.value(lead) / n**self.alpha


def _tilde_base(first: str, k0, k1) -> GoldenRational:
    # V-tilde = log(X / (X - 1)); 1/gamma = gamma - 1 keeps X integral
    if first == "0":
        return GoldenRational(k0 - k1, k1 + 1)
    if first == "1":
        return GoldenRational(k1 + 1, k0 + 1)
    raise ValueError(f"symbol must be '0' or '1', got {first!r}")


def tilde_argument(first: str, k0, k1) -> GoldenRational:
    """The fraction whose logarithm is V-tilde, exact in Q(gamma)."""
    x = _tilde_base(first, k0, k1)
    return x / (x - 1)


_G = (1 + math.sqrt(5)) / 2


def _tilde_float(first: str, k0: int, k1: int) -> float:
    if first == "0":
        x = k0 + k1 / _G + _G
    else:
        x = _G * k0 + k1 + _G * _G
    return math.log1p(1 / (x - 1))


@dataclass(frozen=True)
class TildePotential:
    """The fixed point V-tilde of R, as a potential."""

    depth = 1

    def at_distance(self, lead: str, n: int, k0: int, k1: int) -> float:
        return _tilde_float(lead[0], k0, k1)


def _read(x: Point, cap: int):
    """(n, k0, k1) for a point off K, or None for a point of K."""
    d = dist_to_K(x, cap)
    if d.status == "capped":
        raise CapExhaustedError(f"evaluation at {x} undecided within {cap} symbols")
    if d.status == "infinite":
        return None
    n = int(d.n)
    s = x.symbols(n)
    return n, s.count("0"), s.count("1")


def eval_potential(V: PotentialLike, x: Point, cap: int = DEFAULT_CAP) -> float:
    """V(x), with V = 0 on K."""
    r = _read(x, cap)
    if r is None:
        return 0.0
    n, k0, k1 = r
    return V.at_distance(x.symbols(max(V.depth, 1)), n, k0, k1)


def tilde_V(x: Point, strict: bool = False, cap: int = DEFAULT_CAP) -> float:
    """V-tilde(x); on K it is 0, or an error when ``strict``."""
    r = _read(x, cap)
    if r is None:
        if strict:
            raise UndefinedCounterError("V-tilde is defined off K only")
        return 0.0
    _, k0, k1 = r
    return _tilde_float(x.first_symbol, k0, k1)


def _as_evaluator(V) -> Callable[[Point], float]:
    if callable(V) and not hasattr(V, "at_distance"):
        return V
    return lambda x: eval_potential(V, x)


def apply_R(V, x: Point) -> float:
    """(RV)(x) = V(sigma H x) + V(H x) on [0], V(H x) on [1].

    ``V`` is a potential or any callable on points.
    """
    f = _as_evaluator(V)
    hx = x.substitute(1)
    if x.first_symbol == "0":
        return math.fsum((f(hx.shift(1)), f(hx)))
    return f(hx)


def iterate_R_direct(V, n: int, x: Point) -> float:
    """R^n V(x) by composing ``apply_R`` n times."""
    if n < 0:
        raise ValueError("n must be non-negative")
    f = _as_evaluator(V)
    for _ in range(n):
        f = (lambda g: lambda y: apply_R(g, y))(f)
    return f(x)


def iterate_R_closed(V: PotentialLike, n: int, x: Point, cap: int = DEFAULT_CAP) -> float:
    """R^n V(x) as the Birkhoff sum of V over F_{n*} shifts of H^n(x).

    The distance of sigma^j H^n(x) is N - j with N = |H^n(w)| + F_{n+2} - 2,
    w the longest factor prefix of x.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    r = _read(x, cap)
    if r is None:
        return 0.0
    _, k0, k1 = r
    n_star = n + 1 if x.first_symbol == "0" else n
    terms = fib(n_star)
    big_n = fib(n + 1) * k0 + fib(n) * k1 + fib(n + 2) - 2
    depth = max(V.depth, 1)
    s = x.substitute(n).symbols(max(big_n, terms - 1 + depth))
    # ones[i] = number of 1s in s[:i]
    ones = list(itertools.accumulate((c == "1" for c in s[:big_n]), initial=0))
    total_ones = ones[big_n]
    vals = []
    for j in range(terms):
        length = big_n - j
        c1 = total_ones - ones[j]
        vals.append(V.at_distance(s[j : j + depth], length, length - c1, c1))
    return math.fsum(vals)


def fixed_point_check_exact(kappa0: int, kappa1: int, first_symbol: str) -> bool:
    """Exact check that R fixes V-tilde at a point with the given counters.

    One step of H maps the counters (k0, k1) to (k0 + k1 + 1, k0) with first
    symbol 0; on [0] the extra shift drops that 0 and leaves first symbol 1.
    The identity is checked on the arguments of the logarithms.
    """
    if kappa0 < 0 or kappa1 < 0:
        raise ValueError("counters must be non-negative")
    # compare X1/(X1-1) [* X2/(X2-1)] with X/(X-1) after clearing denominators
    x = _tilde_base(first_symbol, kappa0, kappa1)
    num = _tilde_base("0", kappa0 + kappa1 + 1, kappa0)
    den = num - 1
    if first_symbol == "0":
        x2 = _tilde_base("1", kappa0 + kappa1, kappa0)
        num, den = num * x2, den * (x2 - 1)
    return num * (x - 1) == x * den


def mu_K_cylinder(w: str) -> GoldenRational:
    """Exact mass of the cylinder [w] under the invariant measure of K."""
    return cylinder_interval(w).length


def integrate_density(g: Density):
    """Integral of g against the invariant measure of K.

    Returns a GoldenRational when every density value is exact, else a float.
    """
    words = sorted(factors(g.depth))
    exact = [g.exact(w) for w in words]
    if all(v is not None for v in exact):
        total = GoldenRational(0)
        for w, v in zip(words, exact):
            total = total + v * mu_K_cylinder(w)
        return total
    return math.fsum(g.value(w) * float(mu_K_cylinder(w)) for w in words)


def toeplitz_limit_check(X: float, F: int) -> float:
    """(1/F) * sum_{j=0}^{F} 1/(X - j/F), a Riemann sum for log(X/(X-1))."""
    if not X > 1:
        raise ValueError("X must exceed 1")
    if F < 1:
        raise ValueError("F must be >= 1")
    return math.fsum(1.0 / (X - j / F) for j in range(F + 1)) / F


@dataclass(frozen=True)
class ConvergenceRow:
    k: int
    value: float
    target: Optional[float]
    ratio: Optional[float]


def convergence_experiment(V: Potential, x: Point, k_max: int) -> list[ConvergenceRow]:
    """R^k V(x) for k = 0..k_max, against the limit when alpha = 1.

    For alpha = 1 the limit is (integral of g) * V-tilde(x).  Otherwise target
    and ratio are None.
    """
    if not 0 <= k_max <= MAX_K:
        raise ValueError(f"k_max must lie in [0, {MAX_K}]")
    target = None
    if V.alpha == 1:
        target = float(integrate_density(V.density)) * tilde_V(x, strict=True)
    rows = []
    for k in range(k_max + 1):
        value = iterate_R_closed(V, k, x)
        ratio = value / target if target else None
        rows.append(ConvergenceRow(k, value, target, ratio))
    return rows
