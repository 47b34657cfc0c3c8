import cmath
import itertools
import math
from fractions import Fraction
from math import gcd

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ecvec.curve import INFINITY, Curve
from ecvec.ecgen import GeneratorConfig, find_max_period_config, measure_period
from ecvec.field_tower import build_tower
from ecvec.quality import (BudgetExceeded, PointSet, brute_force_discrepancy, build_pointset,
                           char_sum, character_data, discrepancy_bound, exact_discrepancy,
                           hefter_bound, max_walsh_abs, quality_report, walsh, walsh_sum,
                           walsh_sums, walsh_character_identity)

F5 = build_tower(5, 1, 1)
C5 = Curve.from_ints(F5, 1, 1)
CFG5 = find_max_period_config(C5)


def _discrepancy_1d(xs, den):
    """Independent 1-d oracle: boxes [lo, hi) and their limits over a fine grid."""
    L = len(xs)
    best = Fraction(0)
    for lo2 in range(2 * den + 1):
        for hi2 in range(lo2, 2 * den + 1):
            # half-grid: 2c is c/den itself, 2c+1 sits just above it
            count = sum(1 for x in xs if lo2 <= 2 * x < hi2)
            vol = Fraction(hi2 // 2 - lo2 // 2, den)
            best = max(best, abs(Fraction(count, L) - vol))
    return best


def test_single_point():
    # boxes [1/2, 1/2 + eps) hold the point with vanishing volume, so the
    # extreme discrepancy is 1 (the anchored-box value would be 1/2)
    ps = PointSet.from_fractions([(Fraction(1, 2),)], 2)
    assert exact_discrepancy(ps) == 1
    assert _discrepancy_1d([1], 2) == 1


@pytest.mark.parametrize("L", [1, 2, 5, 8])
def test_full_grid(L):
    ps = PointSet.from_fractions([(Fraction(i, L),) for i in range(L)], L)
    assert exact_discrepancy(ps) == Fraction(1, L)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 6), min_size=1, max_size=6))
def test_one_dimension_matches_oracle(xs):
    ps = PointSet(np.array(xs).reshape(-1, 1), 7)
    assert exact_discrepancy(ps) == _discrepancy_1d(xs, 7)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=1, max_size=5))
def test_two_dimensions_match_brute_force(pts):
    ps = PointSet(np.array(pts), 5)
    assert exact_discrepancy(ps) == brute_force_discrepancy(ps)


def test_budget_is_enforced():
    ps = build_pointset("N", CFG5, 3)
    with pytest.raises(BudgetExceeded, match="budget 10"):
        exact_discrepancy(ps, budget=10)


def test_pointset_validation():
    with pytest.raises(ValueError):
        PointSet(np.array([[5]]), 5)
    with pytest.raises(ValueError):
        exact_discrepancy(PointSet(np.zeros((0, 1), dtype=int), 5))


def test_pointset_cardinalities():
    info = measure_period(CFG5)
    t = info.t
    assert info.visits_infinity
    assert build_pointset("M", CFG5).L == info.t_prime == t - 1
    for s in (2, 3, 4):
        assert build_pointset("N", CFG5, s).L == t - s
        assert build_pointset("Nt", CFG5, s).L == (t - s) // gcd(s, t)
    with pytest.raises(ValueError):
        build_pointset("N", CFG5, 1)
    with pytest.raises(ValueError):
        build_pointset("N", CFG5, t + 1)


def test_pointset_without_infinity():
    # P0 outside <Q> means the orbit never meets O
    Q = C5.mul(3, CFG5.Q)
    P0 = next(P for P in C5.points() if C5.order(P) == 9)
    cfg = GeneratorConfig(C5, 1, Q, P0)
    info = measure_period(cfg)
    assert not info.visits_infinity
    assert build_pointset("M", cfg).L == info.t
    assert build_pointset("N", cfg, 2).L == info.t


def test_walsh_examples():
    assert walsh(0, Fraction(3, 5), 5, 1) == 1
    assert cmath.isclose(walsh(1, Fraction(3, 5), 5, 1), cmath.exp(6j * math.pi / 5))
    # multi-digit: k = 7 = (2, 1) low first, xi = 13/25 = 0.(2)(3) high first
    assert cmath.isclose(walsh(7, Fraction(13, 25), 5, 2), cmath.exp(2j * math.pi * (2 * 2 + 1 * 3) / 5))
    with pytest.raises(ValueError):
        walsh(1, Fraction(1, 3), 5, 1)


@pytest.mark.parametrize("p,a", [(2, 3), (3, 2), (5, 1), (5, 2), (5, 3), (7, 2), (11, 1)])
def test_walsh_orthogonality(p, a):
    den = p**a
    vals = np.array([[walsh(k, Fraction(x, den), p, a) for x in range(den)] for k in range(den)])
    gram = vals @ vals.conj().T / den
    assert np.allclose(gram, np.eye(den), atol=1e-12)


def test_walsh_sums():
    ps = build_pointset("M", CFG5)
    sums = walsh_sums(ps, 5)
    assert sums[0] == pytest.approx(1)
    assert np.all(np.abs(sums) <= 1 + 1e-12)
    for idx, k in enumerate(itertools.product(range(5), repeat=2)):
        assert sums[idx] == pytest.approx(walsh_sum(k, ps, 5), abs=1e-12)


def test_walsh_sums_chunked():
    ps = build_pointset("N", CFG5, 2)
    assert np.allclose(walsh_sums(ps, 5), walsh_sums(ps, 5, chunk=16), atol=1e-12)


def test_hefter_bound():
    assert hefter_bound(0, 1, 5, 1) == pytest.approx(1 / 5)
    assert hefter_bound(4 * math.sqrt(5) / 9, 2, 5, 1) == pytest.approx(24.33, abs=0.01)
    assert hefter_bound(0.2, 3, 5, 2) < hefter_bound(0.3, 3, 5, 2)
    with pytest.raises(ValueError):
        hefter_bound(-1, 1, 5, 1)


def test_discrepancy_bounds():
    assert discrepancy_bound("D", 1000003, 1, 1, 1000003) < discrepancy_bound("D", 101, 1, 1, 101)
    assert discrepancy_bound("D_s", 7, 1, 1, 10, 2) > 1
    with pytest.raises(ValueError, match="gcd"):
        discrepancy_bound("Dt_s", 5, 1, 1, 10, 5)
    with pytest.raises(ValueError, match="p >= 5"):
        discrepancy_bound("D_s", 3, 1, 1, 10, 2)


def test_character_data():
    cd = character_data(F5, (3, 0))
    assert cd.eta == (F5.from_int(3),) and F5.is_zero(cd.eta_bar[0])
    cd = character_data(F5, (0, 2))
    assert F5.is_zero(cd.eta[0]) and not F5.is_zero(cd.eta_bar[0])
    with pytest.raises(ValueError):
        character_data(F5, (0, 0))
    assert character_data(F5, (1, 2, 0, 4), 2).s == 2


@pytest.mark.parametrize("params,A,B", [((5, 1, 1), 1, 1), ((5, 1, 2), 2, 7), ((5, 2, 1), 1, 1)])
def test_walsh_character_identity(params, A, B):
    t = build_tower(*params, basis_a=((1, 1), (0, 1)) if params[1] == 2 else None)
    c = Curve.from_ints(t, A, B)
    cfg = GeneratorConfig(c, 1, c.points()[1])
    h = 2 * t.r
    ks = [k for k in itertools.product(range(t.k_size), repeat=h) if any(k)]
    for k in ks[::max(1, len(ks) // 40)]:
        for P in c.points()[1:]:
            lhs, rhs = walsh_character_identity(cfg, k, P)
            assert abs(lhs - rhs) < 1e-12


def test_char_sum_trivial_subgroup():
    cfg = GeneratorConfig(C5, 1, INFINITY)
    rep = char_sum(cfg, character_data(F5, (1, 0)))
    assert rep.value == 0 and rep.terms == 0


def test_char_sum_of_x():
    rep = char_sum(CFG5, character_data(F5, (1, 0)))
    direct = sum(cmath.exp(2j * math.pi * P.x[0][0] / 5) for P in C5.points()[1:])
    assert abs(rep.value - direct) < 1e-12
    assert rep.single_pole and rep.degree == 2
    assert rep.magnitude <= 3 * math.sqrt(5)


def test_char_sums_equal_scaled_walsh_sums():
    for kind, s, stride in (("M", None, False), ("N", 2, False), ("Nt", 2, True), ("N", 3, False)):
        ps = build_pointset(kind, CFG5, s)
        sums = walsh_sums(ps, 5)
        width = ps.dim
        for idx, k in enumerate(itertools.product(range(5), repeat=width)):
            if not any(k):
                continue
            rep = char_sum(CFG5, character_data(F5, k, width // 2), stride=stride)
            assert abs(rep.value - ps.L * sums[idx]) < 1e-9


def test_char_sum_bounds_exhaustive_f5():
    for k in itertools.product(range(5), repeat=2):
        if any(k):
            rep = char_sum(CFG5, character_data(F5, k))
            assert rep.magnitude <= rep.bound + 1e-9
            assert rep.magnitude <= 4 * math.sqrt(5) + 1e-9


def test_hefter_pipeline_self_consistent():
    for kind, s in (("M", None), ("N", 2), ("Nt", 2), ("N", 3)):
        ps = build_pointset(kind, CFG5, s)
        D = exact_discrepancy(ps)
        assert D <= hefter_bound(max_walsh_abs(ps, 5), ps.dim, 5, 1) + 1e-12


def test_quality_report():
    rep = quality_report(CFG5, "D")
    d = rep.to_dict()
    assert rep.holds and d["holds"]
    assert Fraction(d["discrepancy"]["num"], d["discrepancy"]["den"]) == rep.discrepancy
    assert d["maxWalshAbs"] <= d["walshPremise"] + 1e-9
    assert quality_report(CFG5, "Dt_s", 2).holds


def test_pointset_csv():
    ps = PointSet.from_fractions([(Fraction(1, 5), Fraction(2, 5))], 5)
    assert ps.to_csv() == "0.2,0.4\n"
