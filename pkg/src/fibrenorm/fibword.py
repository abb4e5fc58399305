"""Fibonacci substitution, its fixed word rho, and the factor language of K.

Words are plain ``str`` over the alphabet ``"01"``.  Two independent factor
oracles are provided: an exact one (non-empty cylinder arc on the circle) and a
fast one (substring search in a prefix of rho).
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .golden import GAMMA, ONE, ZERO, GoldenRational, compare, mod1

__all__ = [
    "CylinderInterval",
    "SpecialWords",
    "DecompositionError",
    "substitute",
    "kappa",
    "rho_prefix",
    "inverse_substitute",
    "cylinder_interval",
    "extend_cylinder",
    "is_factor",
    "is_factor_exact",
    "is_factor_fast",
    "factors",
    "complexity",
    "special_words",
    "bispecial_lengths",
    "longest_factor_prefix",
    "fast_window",
    "itinerary",
    "orbit_is_clean",
]

_GAMMA3 = ((1 + math.sqrt(5)) / 2) ** 3
_SUB = str.maketrans({"0": "01", "1": "0"})
_BOUNDARY = GAMMA - 1  # 0 on [0, gamma-1), 1 on [gamma-1, 1)
_STARTS = {"0": ZERO, "1": _BOUNDARY}
_LENGTHS = {"0": _BOUNDARY, "1": ONE - _BOUNDARY}


class DecompositionError(ValueError):
    """A word cannot be split into the blocks "0" and "01"."""


def _check_word(w: str) -> str:
    if w.strip("01"):
        raise ValueError(f"word {w!r} is not over the alphabet {{0,1}}")
    return w


def substitute(w: str, n: int = 1) -> str:
    """H^n(w) with H: 0 -> 01, 1 -> 0."""
    if n < 0:
        raise ValueError("n must be non-negative")
    for _ in range(n):
        w = w.translate(_SUB)
    return w


def kappa(w: str, a: str) -> int:
    """Number of occurrences of the symbol ``a`` in ``w``."""
    if a not in ("0", "1"):
        raise ValueError(f"symbol must be '0' or '1', got {a!r}")
    return w.count(a)


class _RhoBuffer:
    """Monotonically growing prefix of rho, safe for concurrent readers."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._buf = "0"

    def get(self, n: int) -> str:
        buf = self._buf
        if len(buf) >= n:
            return buf[:n]
        with self._lock:
            buf = self._buf
            while len(buf) < n:
                buf = substitute(buf, 1)
            self._buf = buf
        return buf[:n]

    # test hook: lets selftest fault injection corrupt the buffer
    def _replace(self, buf: str) -> None:
        with self._lock:
            self._buf = buf
        _clear_caches()


_RHO = _RhoBuffer()


def rho_prefix(length: int) -> str:
    """The first ``length`` symbols of the fixed word rho = 0100101001001..."""
    if length < 0:
        raise ValueError("length must be non-negative")
    return _RHO.get(length)


def inverse_substitute(w: str) -> str:
    """Left inverse of H: replace each block "01" by 0 and each lone "0" by 1.

    A trailing "0" is read as a complete block.
    """
    _check_word(w)
    if w and w[0] == "1":
        raise DecompositionError(f"{w!r} starts with 1")
    out = []
    i, n = 0, len(w)
    while i < n:
        if w[i] != "0":
            raise DecompositionError(f"{w!r} contains 11 at position {i - 1}")
        if i + 1 < n and w[i + 1] == "1":
            out.append("0")
            i += 2
        else:
            out.append("1")
            i += 1
    return "".join(out)


@dataclass(frozen=True)
class CylinderInterval:
    """Arc [lo, hi) of the circle; ``wraps`` means it passes through 0."""

    lo: GoldenRational
    hi: GoldenRational
    wraps: bool = False
    empty: bool = False

    @classmethod
    def empty_interval(cls) -> CylinderInterval:
        return cls(ZERO, ZERO, False, True)

    @property
    def length(self) -> GoldenRational:
        if self.empty:
            return ZERO
        if self.wraps:
            return ONE - self.lo + self.hi
        return self.hi - self.lo

    def __bool__(self) -> bool:
        return not self.empty

    def contains(self, t) -> bool:
        if self.empty:
            return False
        t = GoldenRational.coerce(t)
        if self.wraps:
            return compare(t, self.lo) >= 0 or compare(t, self.hi) < 0
        return compare(self.lo, t) <= 0 and compare(t, self.hi) < 0


def _arc_pieces(start: GoldenRational, length: GoldenRational):
    """Split the arc [start, start+length) (start in [0,1)) into pieces inside [0, 1)."""
    end = start + length
    if compare(end, 1) <= 0:
        return [(start, end)]
    return [(start, ONE), (ZERO, end - 1)]


def _restrict(pieces, k: int, c: str):
    """Intersect a union of arcs with T^{-k}(I_c) = I_c - k*gamma."""
    arc = _arc_pieces(mod1(_STARTS[c] - GoldenRational(0, k)).t, _LENGTHS[c])
    out = []
    for lo, hi in pieces:
        for alo, ahi in arc:
            a = lo if compare(lo, alo) >= 0 else alo
            b = hi if compare(hi, ahi) <= 0 else ahi
            if compare(a, b) < 0:
                out.append((a, b))
    return out


def _as_interval(pieces) -> CylinderInterval:
    if not pieces:
        return CylinderInterval.empty_interval()
    pieces = sorted(pieces, key=lambda p: float(p[0]))
    if len(pieces) == 1:
        return CylinderInterval(*pieces[0])
    if len(pieces) == 2 and pieces[0][0] == ZERO and pieces[1][1] == ONE:
        return CylinderInterval(pieces[1][0], pieces[0][1], wraps=True)
    raise AssertionError(f"cylinder is not an arc: {pieces}")


def _pieces_of(ci: CylinderInterval):
    if ci.empty:
        return []
    if ci.wraps:
        return [(ci.lo, ONE), (ZERO, ci.hi)]
    return [(ci.lo, ci.hi)]


def cylinder_interval(w: str) -> CylinderInterval:
    """Exact set of circle points whose itinerary under x -> x + gamma starts with ``w``."""
    _check_word(w)
    pieces = [(ZERO, ONE)]
    for k, c in enumerate(w):
        pieces = _restrict(pieces, k, c)
        if not pieces:
            break
    return _as_interval(pieces)


def extend_cylinder(ci: CylinderInterval, k: int, c: str) -> CylinderInterval:
    """Cylinder of ``w + c`` given the cylinder ``ci`` of a word ``w`` of length ``k``."""
    return _as_interval(_restrict(_pieces_of(ci), k, c))


_GAMMA_F = (1 + math.sqrt(5)) / 2
_MARGIN = 1e-6


def _symbol_exact(u: GoldenRational, upper: bool) -> str:
    if upper:
        # coding by (0, gamma-1] -> 0, (gamma-1, 1] -> 1
        return "0" if u.sign() > 0 and compare(u, _BOUNDARY) <= 0 else "1"
    return "0" if compare(u, _BOUNDARY) < 0 else "1"


def itinerary(t, n: int, upper: bool = False) -> str:
    """First ``n`` symbols of the coding of t, T(t), T^2(t), ... under x -> x + gamma.

    The default coding is 0 on [0, gamma-1) and 1 on [gamma-1, 1); ``upper``
    selects the other endpoint convention, (0, gamma-1] and (gamma-1, 1].
    Floating point decides symbols away from the partition points; anything
    within 1e-6 of them is decided exactly.
    """
    t = GoldenRational.coerce(getattr(t, "t", t))
    if n <= 0:
        return ""
    k = np.arange(n, dtype=np.float64)
    x = np.mod(float(t) + k * _GAMMA_F, 1.0)
    out = np.where(x < _GAMMA_F - 1, 48, 49).astype(np.uint8)
    if upper:
        out[x == 0.0] = 49
    near = np.flatnonzero(
        (x < _MARGIN) | (x > 1 - _MARGIN) | (np.abs(x - (_GAMMA_F - 1)) < _MARGIN)
    )
    for i in near:
        u = mod1(t + GoldenRational(0, int(i))).t
        out[i] = ord(_symbol_exact(u, upper))
    return out.tobytes().decode("ascii")


def orbit_is_clean(t) -> bool:
    """True iff the forward orbit of t never meets the partition points 0, gamma-1."""
    t = GoldenRational.coerce(getattr(t, "t", t))
    if t.a.denominator != 1 or t.b.denominator != 1:
        return True
    return t.b >= 2


def fast_window(n: int) -> int:
    """Length of the rho prefix searched by the fast factor oracle for words of length n."""
    return math.ceil(_GAMMA3 * n) + 8


def is_factor_exact(w: str) -> bool:
    return bool(cylinder_interval(w))


def is_factor_fast(w: str) -> bool:
    _check_word(w)
    return w in rho_prefix(fast_window(len(w)))


def is_factor(w: str) -> bool:
    """Whether ``w`` occurs in rho."""
    return is_factor_fast(w)


@lru_cache(maxsize=None)
def factors(n: int) -> frozenset:
    """All factors of rho of length ``n``."""
    buf = rho_prefix(fast_window(n) + 1)
    return frozenset(buf[i : i + n] for i in range(len(buf) - n + 1))


def complexity(n: int) -> int:
    return len(factors(n))


class SpecialWords(NamedTuple):
    left: str
    right: str


def _unique(words, what: str, n: int) -> str:
    if len(words) != 1:
        raise AssertionError(f"expected one {what}-special word of length {n}, found {sorted(words)}")
    return words[0]


def special_words(n: int) -> SpecialWords:
    """The unique left-special and right-special factors of length n >= 1."""
    if n < 1:
        raise ValueError("n must be >= 1")
    fac = factors(n)
    longer = factors(n + 1)
    left = [w for w in fac if "0" + w in longer and "1" + w in longer]
    right = [w for w in fac if w + "0" in longer and w + "1" in longer]
    return SpecialWords(_unique(left, "left", n), _unique(right, "right", n))


def bispecial_lengths(max_len: int) -> list[int]:
    """Lengths 1 <= n <= max_len whose left-special factor is also right-special."""
    out = []
    for n in range(1, max_len + 1):
        sw = special_words(n)
        if sw.left == sw.right:
            out.append(n)
    return out


def longest_factor_prefix(s: str) -> int:
    """Length of the longest prefix of ``s`` that is a factor of rho."""
    window = rho_prefix(fast_window(len(s)))
    if s in window:
        return len(s)
    lo, hi = 0, len(s)  # s[:lo] is a factor, s[:hi] is not
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if s[:mid] in window:
            lo = mid
        else:
            hi = mid
    return lo


_CACHE_CLEARERS = []


def register_cache(clear) -> None:
    """Register a callback that drops caches derived from the rho buffer."""
    _CACHE_CLEARERS.append(clear)


def _clear_caches() -> None:
    factors.cache_clear()
    for clear in _CACHE_CLEARERS:
        clear()
