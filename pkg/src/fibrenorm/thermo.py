"""Induced transfer operator on the cylinder [11], pressure and the freezing point.

The marker "11" never occurs in rho, so along a first-return word every shift
has its longest factor prefix ending inside the word.  Birkhoff sums are then
functions of the word alone, and the induced operator's leading value on [11]
is the weighted sum over return words.

Return words are built right to left, starting from the terminal marker.
Prepending a symbol ``a`` to a suffix whose longest factor prefix is ``u``
gives a suffix whose longest factor prefix is the longest factor prefix of
``a + u``; that map is memoized, so the cost per word is O(1).
"""

from __future__ import annotations

import math
import statistics
import threading
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .fibword import factors, register_cache
from .metric import DEFAULT_CAP, Point, dist_to_K
from .renorm import Constant, DepthTable, Potential, TildeDensity

__all__ = [
    "MARKER",
    "LogPotential",
    "LOG_POTENTIAL",
    "phi_log",
    "birkhoff_on_return",
    "ReturnWord",
    "ReturnEnumeration",
    "enumerate_returns",
    "ReturnSpectrum",
    "return_spectrum",
    "lam",
    "PressureSample",
    "BetaBracket",
    "pressure",
    "beta_c",
    "pressure_curve",
    "kappa_bound",
    "GeneralPressure",
    "general_potential_pressure",
    "InvalidReturnWord",
    "DEFAULT_L",
    "DEFAULT_TOL",
    "DEFAULT_BETAC_TOL",
]

MARKER = "11"
DEFAULT_L = 30
DEFAULT_TOL = 1e-10
DEFAULT_BETAC_TOL = 0.05
MAX_ITER = 200
LOG2 = math.log(2.0)
_FIT_POINTS = 6
_FRONTIER_DEPTH = 10


class InvalidReturnWord(ValueError):
    """The word is not a first return to the marker."""


@dataclass(frozen=True)
class LogPotential:
    """V(x) = log((n+1)/n) for d(x,K) = 2^-n, so that phi = -V."""

    depth = 0
    alpha = 1

    def at_distance(self, lead: str, n: int, k0: int = 0, k1: int = 0) -> float:
        return math.log1p(1.0 / n)


LOG_POTENTIAL = LogPotential()


def phi_log(x: Point, cap: int = DEFAULT_CAP) -> float:
    """-log((n+1)/n) with d(x,K) = 2^-n, and 0 on K."""
    d = dist_to_K(x, cap)
    if d.status == "capped":
        raise RuntimeError(f"distance of {x} undecided within {cap} symbols")
    if not d.finite:
        return 0.0
    return -math.log1p(1.0 / d.n)


# -- word level ---------------------------------------------------------------

_EXT: dict = {}
_EXT_LOCK = threading.Lock()


def _extend(a: str, u: str) -> str:
    """Longest factor prefix of a + u, where u is a factor."""
    key = (a, u)
    r = _EXT.get(key)
    if r is None:
        s = a + u
        m = len(s)
        while s[:m] not in factors(m):
            m -= 1
        r = s[:m]
        with _EXT_LOCK:
            _EXT[key] = r
    return r


def _validate_return(word: str) -> int:
    if word.strip("01"):
        raise InvalidReturnWord(f"{word!r} is not a binary word")
    if len(word) < 3 or not (word.startswith(MARKER) and word.endswith(MARKER)):
        raise InvalidReturnWord(f"{word!r} must start and end with the marker {MARKER}")
    n = len(word) - 2
    first = word.find(MARKER, 1)
    if first != n:
        raise InvalidReturnWord(f"{word!r} returns to the marker at {first}, not at {n}")
    return n


def _shadows(word: str) -> list[str]:
    """Longest factor prefix of every proper suffix word[k:], k < n."""
    n = len(word) - 2
    out = [""] * n
    u = "1"  # the terminal marker: "1" is a factor, "11" is not
    for k in range(n, 0, -1):
        u = _extend(word[k - 1], u)
        out[k - 1] = u
    return out


def birkhoff_on_return(word: str, potential=LOG_POTENTIAL) -> float:
    """S_n(-V) along a first-return word to the marker; n = len(word) - 2."""
    n = _validate_return(word)
    depth = potential.depth
    terms = []
    for k, u in enumerate(_shadows(word)):
        terms.append(-potential.at_distance(word[k : k + depth], len(u), u.count("0"), u.count("1")))
    return math.fsum(terms)


@dataclass(frozen=True)
class ReturnWord:
    word: str
    n: int
    birkhoff: float


def _leaf_counts(r_max: int):
    """A[c][r]: number of return words completing a suffix starting with c
    using at most r more symbols."""
    a0 = [0] * (r_max + 1)
    a1 = [0] * (r_max + 1)
    for r in range(1, r_max + 1):
        a1[r] = 1 + a0[r - 1]
        a0[r] = a1[r - 1] + a0[r - 1]
    return {"0": a0, "1": a1}


class _Walker:
    """Right-to-left DFS over return words with return time <= L."""

    def __init__(self, L: int, potential) -> None:
        self.L = L
        self.potential = potential
        self.depth = potential.depth
        self._phi: dict = {}

    def phi(self, s: str, u: str) -> float:
        key = (s[: self.depth], u)
        v = self._phi.get(key)
        if v is None:
            v = -self.potential.at_distance(key[0], len(u), u.count("0"), u.count("1"))
            self._phi[key] = v
        return v

    def children(self, s: str, u: str, S: float):
        """Yield (s2, u2, S2, complete) for both one-symbol extensions."""
        if len(s) - 2 >= self.L:
            return
        for a in "01":
            s2 = a + s
            u2 = _extend(a, u)
            S2 = S + self.phi(s2, u2)
            yield s2, u2, S2, s2.startswith(MARKER)


_ROOT = (MARKER, "1", 0.0)


class ReturnEnumeration:
    """Iterable over return words; ``pruned_mass`` is final after iteration.

    A branch is cut when its best-case weight exp(beta*S - (len-1)*Z) falls
    below ``prune_threshold``.  The cut mass is bounded by that weight times
    the number of return words in the branch.
    """

    def __init__(self, L_max: int, prune_threshold: float = 0.0, beta: float = 0.0,
                 Z: float = 0.0, potential=LOG_POTENTIAL) -> None:
        if L_max < 1:
            raise ValueError("L_max must be >= 1")
        if prune_threshold < 0 or beta < 0 or Z < 0:
            raise ValueError("prune_threshold, beta and Z must be non-negative")
        self.L_max = L_max
        self.prune_threshold = prune_threshold
        self.beta = beta
        self.Z = Z
        self.potential = potential
        self.pruned_mass = 0.0
        self.pruned_branches = 0

    def __iter__(self) -> Iterator[ReturnWord]:
        walker = _Walker(self.L_max, self.potential)
        counts = _leaf_counts(self.L_max)
        self.pruned_mass = 0.0
        self.pruned_branches = 0
        pruned = []
        stack = [_ROOT]
        while stack:
            s, u, S = stack.pop()
            for s2, u2, S2, done in walker.children(s, u, S):
                if done:
                    yield ReturnWord(s2, len(s2) - 2, S2)
                    continue
                if self.prune_threshold > 0:
                    bound = math.exp(self.beta * S2 - (len(s2) - 1) * self.Z)
                    if bound < self.prune_threshold:
                        remaining = self.L_max - (len(s2) - 2)
                        pruned.append(bound * counts[s2[0]][remaining])
                        self.pruned_branches += 1
                        continue
                stack.append((s2, u2, S2))
        self.pruned_mass = math.fsum(pruned)


def enumerate_returns(L_max: int, prune_threshold: float = 0.0, beta: float = 0.0,
                      Z: float = 0.0, potential=LOG_POTENTIAL) -> ReturnEnumeration:
    """All first-return words to "11" with return time <= L_max, depth first."""
    return ReturnEnumeration(L_max, prune_threshold, beta, Z, potential)


# -- spectrum -----------------------------------------------------------------

def _frontier(L: int, potential, depth: int):
    """Expand the DFS ``depth`` levels: finished (n, S) pairs and open states."""
    walker = _Walker(L, potential)
    leaves, states = [], [_ROOT]
    for _ in range(depth):
        nxt = []
        for s, u, S in states:
            for s2, u2, S2, done in walker.children(s, u, S):
                if done:
                    leaves.append((len(s2) - 2, S2))
                else:
                    nxt.append((s2, u2, S2))
        states = nxt
    return leaves, states


def _run_states(args) -> list[tuple[int, float]]:
    L, potential, states = args
    walker = _Walker(L, potential)
    out = []
    stack = list(states)
    while stack:
        s, u, S = stack.pop()
        for s2, u2, S2, done in walker.children(s, u, S):
            if done:
                out.append((len(s2) - 2, S2))
            else:
                stack.append((s2, u2, S2))
    return out


class ReturnSpectrum:
    """Birkhoff sums of all return words up to return time L, grouped by length.

    Each group is stored sorted, and sums over a group use ``math.fsum``, so
    every derived number is independent of the order in which words were found.
    """

    def __init__(self, L: int, potential, by_length: dict[int, np.ndarray]) -> None:
        self.L = L
        self.potential = potential
        self.by_length = by_length
        self._A: dict = {}

    @classmethod
    def build(cls, L: int, potential=LOG_POTENTIAL, threads: int = 1) -> ReturnSpectrum:
        if L < 1:
            raise ValueError("L must be >= 1")
        if threads < 1:
            raise ValueError("threads must be >= 1")
        leaves, states = _frontier(L, potential, min(_FRONTIER_DEPTH, L))
        chunks = [states[i::threads * 4] for i in range(threads * 4)]
        jobs = [(L, potential, c) for c in chunks if c]
        if threads == 1:
            results = [_run_states(j) for j in jobs]
        else:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(_run_states, jobs))
        groups: dict[int, list[float]] = {n: [] for n in range(1, L + 1)}
        for n, S in leaves:
            groups[n].append(S)
        for res in results:
            for n, S in res:
                groups[n].append(S)
        by_length = {n: np.sort(np.asarray(v, dtype=np.float64)) for n, v in groups.items()}
        return cls(L, potential, by_length)

    def counts(self) -> list[int]:
        return [len(self.by_length[n]) for n in range(1, self.L + 1)]

    def restricted(self, L: int) -> ReturnSpectrum:
        if L > self.L:
            raise ValueError("cannot extend a spectrum")
        return ReturnSpectrum(L, self.potential, {n: self.by_length[n] for n in range(1, L + 1)})

    def weights(self, beta: float) -> list[float]:
        """A_n(beta) = sum over return words of time n of exp(beta * S)."""
        w = self._A.get(beta)
        if w is None:
            w = [math.fsum(np.exp(beta * self.by_length[n]).tolist()) for n in range(1, self.L + 1)]
            self._A[beta] = w
        return w

    def buckets(self, Z: float, beta: float) -> list[float]:
        out = [a * math.exp(-n * Z) for n, a in enumerate(self.weights(beta), start=1)]
        if not all(math.isfinite(b) for b in out):
            raise OverflowError(f"series diverges numerically at Z={Z}, beta={beta}")
        return out

    def lam(self, Z: float, beta: float) -> tuple[float, float]:
        b = self.buckets(Z, beta)
        return math.fsum(b), geometric_tail(b)


def geometric_tail(buckets: Sequence[float]) -> float:
    """Extrapolated mass beyond the last bucket from a log-linear fit of the last six."""
    last = list(buckets[-_FIT_POINTS:])
    if len(last) < _FIT_POINTS or any(b <= 0 for b in last):
        return 0.0 if last and all(b == 0 for b in last) else math.inf
    slope, _ = statistics.linear_regression(range(_FIT_POINTS), [math.log(b) for b in last])
    r = math.exp(slope)
    if r >= 1:
        return math.inf
    return last[-1] * r / (1 - r)


_SPECTRA: dict = {}
_SPECTRA_LOCK = threading.Lock()


def _clear() -> None:
    _EXT.clear()
    _SPECTRA.clear()


register_cache(_clear)


def return_spectrum(L: int, potential=LOG_POTENTIAL, threads: int = 1) -> ReturnSpectrum:
    """Cached spectrum; a longer cached spectrum for the same potential is reused."""
    with _SPECTRA_LOCK:
        have = _SPECTRA.get(potential)
    if have is not None and have.L >= L:
        return have if have.L == L else have.restricted(L)
    spec = ReturnSpectrum.build(L, potential, threads)
    with _SPECTRA_LOCK:
        cur = _SPECTRA.get(potential)
        if cur is None or cur.L < L:
            _SPECTRA[potential] = spec
    return spec


def lam(Z: float, beta: float, L_max: int = DEFAULT_L, potential=LOG_POTENTIAL,
        threads: int = 1) -> tuple[float, float]:
    """(lambda^(L)(Z, beta), tail estimate) for the induced operator on [11]."""
    if Z < 0 or beta < 0:
        raise ValueError("Z and beta must be non-negative")
    return return_spectrum(L_max, potential, threads).lam(Z, beta)


# -- pressure -----------------------------------------------------------------

@dataclass(frozen=True)
class PressureSample:
    beta: float
    pressure: float
    lambda0: float
    L: int
    tail_estimate: float
    status: str  # "converged" or "truncation-limited"

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def _solve(spec: ReturnSpectrum, beta: float, tol: float) -> PressureSample:
    lam0, tail0 = spec.lam(0.0, beta)
    if lam0 + tail0 <= 1:
        return PressureSample(beta, 0.0, lam0, spec.L, tail0, "converged")
    if lam0 <= 1:
        return PressureSample(beta, 0.0, lam0, spec.L, tail0, "truncation-limited")
    lo, hi = 0.0, LOG2
    if spec.lam(hi, beta)[0] > 1:
        return PressureSample(beta, hi, lam0, spec.L, tail0, "truncation-limited")
    for _ in range(MAX_ITER):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if spec.lam(mid, beta)[0] > 1:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    above, above_tail = spec.lam(min(root + tol, LOG2), beta)
    status = "converged" if above + above_tail <= 1 else "truncation-limited"
    return PressureSample(beta, root, lam0, spec.L, tail0, status)


def pressure(beta: float, L_max: int = DEFAULT_L, tol: float = DEFAULT_TOL,
             potential=LOG_POTENTIAL, threads: int = 1) -> PressureSample:
    """P(beta) from lambda^(L)(P, beta) = 1, or 0 on the frozen branch.

    Status is "converged" when adding the tail estimate could not move the
    answer by more than ``tol``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if beta < 0:
        raise ValueError("beta must be non-negative")
    return _solve(return_spectrum(L_max, potential, threads), beta, tol)


def pressure_curve(beta_grid: Sequence[float], L_max: int = DEFAULT_L, tol: float = DEFAULT_TOL,
                   potential=LOG_POTENTIAL, threads: int = 1) -> list[PressureSample]:
    grid = list(beta_grid)
    if any(b2 < b1 for b1, b2 in zip(grid, grid[1:])):
        raise ValueError("beta grid must be sorted")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if grid and grid[0] < 0:
        raise ValueError("beta must be non-negative")
    spec = return_spectrum(L_max, potential, threads)
    return [_solve(spec, b, tol) for b in grid]


@dataclass(frozen=True)
class BetaBracket:
    lo: float
    hi: float
    L: int
    lambda_lo: float
    tail_lo: float
    lambda_hi: float
    tail_hi: float
    status: str

    @property
    def width(self) -> float:
        return self.hi - self.lo


def beta_c(L_max: int = DEFAULT_L, tol: float = DEFAULT_BETAC_TOL, potential=LOG_POTENTIAL,
           threads: int = 1) -> BetaBracket:
    """Bracket [lo, hi] for the point where lambda^(L)(0, beta) + tail crosses 1.

    The bracket is "truncation-limited" when the computed terms alone are
    already below 1 at ``lo``, i.e. the crossing is decided by the tail.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    spec = return_spectrum(L_max, potential, threads)

    def total(b: float) -> float:
        v, t = spec.lam(0.0, b)
        return v + t

    lo, hi = 0.0, 1.0
    while total(hi) > 1:
        lo, hi = hi, 2 * hi
        if hi > 1e6:
            raise RuntimeError("no crossing below beta = 1e6")
    for _ in range(MAX_ITER):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if total(mid) > 1:
            lo = mid
        else:
            hi = mid
    l_lo, t_lo = spec.lam(0.0, lo)
    l_hi, t_hi = spec.lam(0.0, hi)
    status = "converged" if l_lo > 1 and math.isfinite(t_hi) else "truncation-limited"
    return BetaBracket(lo, hi, spec.L, l_lo, t_lo, l_hi, t_hi, status)


# -- general potentials -------------------------------------------------------

def kappa_bound(V) -> float:
    """Largest kappa with -V <= kappa * phi_log, for V = g/n (alpha = 1).

    Since n*log(1 + 1/n) < 1 and tends to 1, this is the minimum of g.
    """
    if isinstance(V, LogPotential):
        return 1.0
    if not isinstance(V, Potential) or V.alpha != 1:
        raise ValueError("kappa is defined for alpha = 1 potentials")
    g = V.density
    if isinstance(g, Constant):
        return float(g.c)
    if isinstance(g, TildeDensity):
        return min(g.value("0"), g.value("1"))
    if isinstance(g, DepthTable):
        return float(min(g.table.values()))
    raise TypeError(f"unsupported density {g!r}")


@dataclass(frozen=True)
class GeneralPressure:
    samples: list
    kappa: float
    beta0: float
    onset_bound: float
    plateau_by_bound: bool


def general_potential_pressure(V, beta_grid: Sequence[float], L_max: int = DEFAULT_L,
                               tol: float = DEFAULT_TOL, threads: int = 1,
                               beta0: Optional[float] = None) -> GeneralPressure:
    """Pressure of -beta*V on a grid, with the plateau onset bound beta0/kappa.

    ``beta0`` defaults to the upper end of the log-potential bracket at the
    same truncation.  ``plateau_by_bound`` records whether the pressure of -V
    is 0 with converged status at beta0/kappa.
    """
    if getattr(V, "alpha", None) != 1:
        raise ValueError("general potentials must have alpha = 1")
    if V.depth > 3:
        raise ValueError("densities deeper than 3 symbols are not supported")
    kappa = kappa_bound(V)
    if beta0 is None:
        beta0 = beta_c(L_max, threads=threads).hi
    samples = pressure_curve(beta_grid, L_max, tol, V, threads)
    onset = beta0 / kappa
    at_onset = pressure(onset, L_max, tol, V, threads)
    ok = at_onset.pressure == 0 and at_onset.converged
    return GeneralPressure(samples, kappa, beta0, onset, ok)
