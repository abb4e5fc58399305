import itertools
import math

import pytest

from fibrenorm.metric import PeriodicTail, Point, RhoTail
from fibrenorm.renorm import Constant, DepthTable, Potential, TildeDensity
from fibrenorm.thermo import (
    LOG_POTENTIAL,
    InvalidReturnWord,
    ReturnSpectrum,
    beta_c,
    birkhoff_on_return,
    enumerate_returns,
    general_potential_pressure,
    geometric_tail,
    kappa_bound,
    lam,
    phi_log,
    pressure,
    pressure_curve,
)
from tests.oracles import longest_prefix_in_ref

L_TEST = 18


def brute_returns(n_max):
    out = set()
    for n in range(1, n_max + 1):
        for mid in itertools.product("01", repeat=n):
            w = "11" + "".join(mid)
            if not w.endswith("11"):
                continue
            if w.find("11", 1) == n:
                out.add(w)
    return out


def brute_birkhoff(word):
    n = len(word) - 2
    total = 0.0
    for k in range(n):
        d = longest_prefix_in_ref(word[k:])
        total -= math.log((d + 1) / d)
    return total


def test_phi_log():
    assert phi_log(Point("11", RhoTail())) == pytest.approx(-math.log(2))
    assert phi_log(Point("", RhoTail())) == 0.0
    x = Point("0100101001" + "1", PeriodicTail("1"))
    assert phi_log(x) == pytest.approx(-math.log(1.1))


def test_birkhoff_examples():
    assert birkhoff_on_return("111") == pytest.approx(-math.log(2))
    assert birkhoff_on_return("11011") == pytest.approx(brute_birkhoff("11011"))
    # "1111" returns at position 1, so it is not a return word of time 2
    for bad in ("1111", "1101", "0111", "11", "110112"):
        with pytest.raises(InvalidReturnWord):
            birkhoff_on_return(bad)


def test_return_words_against_brute_force():
    got = [w.word for w in enumerate_returns(14)]
    assert len(got) == len(set(got))
    assert set(got) == brute_returns(14)
    for rw in enumerate_returns(14):
        hits = [i for i in range(len(rw.word) - 1) if rw.word.startswith("11", i)]
        assert hits[0] == 0 and hits[1] == rw.n
        assert rw.n == len(rw.word) - 2
        assert rw.birkhoff <= 0


def test_small_listing():
    assert [w.word for w in enumerate_returns(4)] == ["111", "11011", "110011"]


def test_birkhoff_against_oracle():
    for rw in enumerate_returns(13):
        assert rw.birkhoff == pytest.approx(brute_birkhoff(rw.word), abs=1e-12)
        assert rw.birkhoff == pytest.approx(birkhoff_on_return(rw.word), abs=1e-12)


def test_telescoping_on_accident_free_stretch():
    checked = 0
    for rw in enumerate_returns(14):
        w = rw.word
        d = [longest_prefix_in_ref(w[k:]) for k in range(rw.n)]
        k = 0
        while k < rw.n:
            b = 1
            while k + b < rw.n and d[k + b] == d[k] - b:
                b += 1
            part = -sum(math.log((d[j] + 1) / d[j]) for j in range(k, k + b))
            assert part == pytest.approx(-math.log((d[k] + 1) / (d[k] + 1 - b)))
            checked += b > 1
            k += b
    assert checked > 0


def test_counts_grow_like_gamma():
    counts = ReturnSpectrum.build(24).counts()
    brute = [0] * 14
    for w in brute_returns(14):
        brute[len(w) - 3] += 1
    assert counts[:14] == brute
    g = (1 + math.sqrt(5)) / 2
    assert abs(counts[-1] / counts[-2] - g) < 1e-6


def test_prune_zero_is_identity():
    a = [(w.word, w.birkhoff) for w in enumerate_returns(14)]
    b = [(w.word, w.birkhoff) for w in enumerate_returns(14, 0.0, 2.0, 0.1)]
    assert a == b


def test_pruned_mass_bounds_cut_weight():
    beta, Z = 2.0, 0.05
    full = enumerate_returns(16)
    w_full = math.fsum(math.exp(beta * w.birkhoff - w.n * Z) for w in full)
    en = enumerate_returns(16, 1e-3, beta, Z)
    kept = list(en)
    w_kept = math.fsum(math.exp(beta * w.birkhoff - w.n * Z) for w in kept)
    assert en.pruned_branches > 0
    assert len(kept) < len(list(enumerate_returns(16)))
    assert w_full - w_kept <= en.pruned_mass * (1 + 1e-12)


def test_lambda_monotonicity():
    for L in (12, 15, 18):
        v, _ = lam(0.2, 1.0, L)
        assert v <= lam(0.2, 1.0, L + 1)[0]
    zs = [0.0, 0.1, 0.3, 0.6]
    vals = [lam(z, 1.0, L_TEST)[0] for z in zs]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    bs = [0.0, 0.5, 1.0, 3.0]
    vals = [lam(0.0, b, L_TEST)[0] for b in bs]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_lambda_at_log2():
    v, _ = lam(math.log(2), 0.0, 26)
    assert 0.99 < v < 1
    assert lam(0.0, 0.0, L_TEST)[0] > 1


def test_geometric_tail():
    b = [0.5**n for n in range(1, 13)]
    assert geometric_tail(b) == pytest.approx(sum(0.5**n for n in range(13, 400)))
    assert geometric_tail([1.0] * 8) == math.inf
    assert geometric_tail([0.0] * 8) == 0.0


def test_threads_give_identical_spectra():
    a = ReturnSpectrum.build(16, threads=1)
    b = ReturnSpectrum.build(16, threads=3)
    assert all((a.by_length[n] == b.by_length[n]).all() for n in a.by_length)
    assert a.lam(0.1, 1.3) == b.lam(0.1, 1.3)


def test_pressure_basics():
    p0 = pressure(0.0, L_TEST)
    assert abs(p0.pressure - math.log(2)) < 1e-2
    big = pressure(50.0, L_TEST)
    assert big.pressure == 0 and big.converged and big.lambda0 < 1e-10
    with pytest.raises(ValueError):
        pressure(1.0, L_TEST, tol=0)


def test_sandwich():
    for s in pressure_curve([0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0], L_TEST):
        assert s.pressure <= max(math.log(s.lambda0), 0.0) + 1e-10


def test_curve_shape():
    grid = [0.25 * k for k in range(21)]
    P = [s.pressure for s in pressure_curve(grid, L_TEST)]
    assert all(b <= a for a, b in zip(P, P[1:]))
    assert all(P[i - 1] - 2 * P[i] + P[i + 1] >= -1e-6 for i in range(1, len(P) - 1))
    assert pressure_curve([0.0], L_TEST)[0].pressure == pytest.approx(math.log(2), abs=1e-2)
    with pytest.raises(ValueError):
        pressure_curve([1.0, 0.5], L_TEST)


def test_beta_c_contract():
    b = beta_c(L_TEST, 0.1)
    assert 0 < b.lo < b.hi and b.width <= 0.1
    assert b.lambda_lo + b.tail_lo > 1 >= b.lambda_hi + b.tail_hi
    half = beta_c(L_TEST, 0.05)
    assert half.width == pytest.approx(b.width / 2)
    assert b.lo <= half.lo and half.hi <= b.hi


def test_beyond_bracket_is_frozen():
    b = beta_c(L_TEST)
    for beta in (b.hi, b.hi + 0.3, 2 * b.hi):
        s = pressure(beta, L_TEST)
        assert s.pressure == 0 and s.converged


def test_kappa_bound():
    assert kappa_bound(LOG_POTENTIAL) == 1
    assert kappa_bound(Potential(1.0, Constant(2))) == 2
    assert kappa_bound(Potential(1.0, TildeDensity())) == pytest.approx((1 + math.sqrt(5)) / 2 / math.sqrt(5))
    with pytest.raises(ValueError):
        kappa_bound(Potential(2.0))


def test_kappa_inequality_termwise():
    # -V <= kappa * phi on every shift of every return word
    V = Potential(1.0, DepthTable(2, {"00": 1.5, "01": 0.8, "10": 1.0, "11": 2.0}))
    k = kappa_bound(V)
    for rw in enumerate_returns(12):
        assert birkhoff_on_return(rw.word, V) <= k * rw.birkhoff + 1e-12


def test_general_pressure_log_reproduces():
    grid = [0.0, 1.0, 2.0, 4.0]
    g = general_potential_pressure(LOG_POTENTIAL, grid, L_TEST, beta0=3.0)
    assert g.samples == pressure_curve(grid, L_TEST)
    assert g.kappa == 1


def test_general_pressure_tilde_plateau():
    b0 = beta_c(L_TEST).hi
    g = general_potential_pressure(Potential(1.0, TildeDensity()), [0.0, 2.0, 6.0], L_TEST, beta0=b0)
    assert g.plateau_by_bound
    assert g.samples[-1].pressure == 0


def test_scaling_halves_beta_c():
    tol = 0.01
    one = beta_c(L_TEST, tol, potential=Potential(1.0, Constant(1)))
    two = beta_c(L_TEST, tol, potential=Potential(1.0, Constant(2)))
    assert abs((two.lo + two.hi) - (one.lo + one.hi) / 2) / 2 <= tol
