import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ecvec.arith import divisors
from ecvec.curve import (INFINITY, Curve, CurveError, Point, all_curves, hasse_window,
                         ss_cyclic_ratio, vladut_ratio)
from ecvec.field_tower import build_tower


def _naive_count(p, A, B):
    """#E(F_p) from Euler's criterion, independent of the library's square table."""
    total = 1
    for x in range(p):
        f = (x**3 + A * x + B) % p
        total += 1 if f == 0 else (2 if pow(f, (p - 1) // 2, p) == 1 else 0)
    return total


def _torsion_census_m1(curve):
    """Largest m with #E[m](F) = m^2, by counting points killed by m."""
    pts = curve.points()
    N = len(pts)
    best = 1
    for m in divisors(math.gcd(N, curve.tower.q - 1)):
        if sum(1 for P in pts if curve.mul(m, P).is_infinity) == m * m:
            best = max(best, m)
    return best


F5 = build_tower(5, 1, 1)
C5 = Curve.from_ints(F5, 1, 1)


def test_small_curve_count():
    assert C5.order_N == 9
    assert len(C5.points()) == 9


def test_singular_curve_rejected():
    with pytest.raises(CurveError):
        Curve.from_ints(F5, 0, 0)


def test_characteristic_below_five_rejected():
    with pytest.raises(CurveError):
        Curve.from_ints(build_tower(3, 1, 1), 1, 1)


@pytest.mark.parametrize("p", [5, 7, 11, 13])
def test_counts_match_euler_criterion(p):
    t = build_tower(p, 1, 1)
    for A, B in itertools.product(range(p), repeat=2):
        if (4 * A**3 + 27 * B**2) % p == 0:
            continue
        assert Curve.from_ints(t, A, B).order_N == _naive_count(p, A, B)


def test_hasse_window():
    assert hasse_window(5) == (2, 10)
    assert hasse_window(25) == (16, 36)


def test_group_axioms_exhaustive_f5():
    pts = C5.points()
    for P, Q in itertools.product(pts, repeat=2):
        assert C5.add(P, Q) == C5.add(Q, P)
        assert C5.contains(C5.add(P, Q))
    for P, Q, R in itertools.product(pts, repeat=3):
        assert C5.add(C5.add(P, Q), R) == C5.add(P, C5.add(Q, R))
    for P in pts:
        assert C5.add(P, INFINITY) == P
        assert C5.add(P, C5.neg(P)) == INFINITY


def test_group_axioms_f25_sample():
    t = build_tower(5, 1, 2)
    rng = random.Random(3)
    for A, B in [(1, 1), (2, 7), (3, 11)]:
        c = Curve.from_ints(t, A, B)
        pts = c.points()
        for _ in range(300):
            P, Q, R = rng.choice(pts), rng.choice(pts), rng.choice(pts)
            assert c.add(c.add(P, Q), R) == c.add(P, c.add(Q, R))


def test_off_curve_rejected():
    with pytest.raises(CurveError):
        C5.add(Point(F5.from_int(0), F5.from_int(0)), INFINITY)


def test_scalar_mul_matches_repeated_addition():
    for P in C5.points():
        acc = INFINITY
        for k in range(C5.order_N + 1):
            assert C5.mul(k, P) == acc
            assert C5.mul(-k, P) == C5.neg(acc)
            acc = C5.add(acc, P)
        assert C5.mul(C5.order_N, P) == INFINITY


def test_order():
    assert C5.order(INFINITY) == 1
    for P in C5.points():
        t = C5.order(P)
        assert C5.order_N % t == 0
        assert C5.mul(t, P) == INFINITY
        assert all(not C5.mul(k, P).is_infinity for k in range(1, t))


def test_structure_of_small_curve_by_census():
    info = C5.group_info
    assert info.N == 9
    assert info.M1 == _torsion_census_m1(C5)
    assert info.cyclic == (info.M1 == 1)
    assert (C5.generator() is not None) == info.cyclic


@pytest.mark.parametrize("params", [(5, 1, 1), (7, 1, 1), (11, 1, 1), (5, 1, 2)])
def test_structure_matches_census(params):
    t = build_tower(*params)
    for c in all_curves(t):
        info = c.group_info
        assert info.M1 == _torsion_census_m1(c)
        assert info.M1 * info.M2 == info.N
        assert info.M2 % info.M1 == 0 and (t.q - 1) % info.M1 == 0
        assert info.supersingular == (info.N % t.p == 1)


def test_non_cyclic_example():
    # y^2 = x^3 - x over F_5 has full 2-torsion
    c = Curve.from_ints(F5, -1, 0)
    assert c.order_N == 8
    assert c.group_info.M1 == 2 and not c.group_info.cyclic
    assert c.generator() is None


def test_prime_order_is_cyclic():
    for c in all_curves(build_tower(7, 1, 1)):
        N = c.order_N
        if all(N % d for d in range(2, N)) and N > 1:
            assert c.group_info == c.group_info.__class__(N, 1, N, N % 7 == 1)


def test_bsgs_count_agrees_with_enumeration():
    t = build_tower(7, 1, 2)
    for A, B in [(1, 1), (3, 5), (2, 9)]:
        c = Curve.from_ints(t, A, B)
        assert c.count_points(cap=1) == c.count_points()


def test_large_field_structure_without_enumeration():
    t = build_tower(1009, 1, 3)  # q ~ 1.03e9, above the enumeration cap
    c = Curve.from_ints(t, 2, 3)
    lo, hi = hasse_window(t.q)
    N = c.order_N
    assert lo <= N <= hi
    info = c.group_info
    assert info.M1 * info.M2 == N
    for _, P in zip(range(5), c._random_points(seed=9)):
        assert c.mul(N, P).is_infinity
        assert c.mul(info.M2, P).is_infinity


def test_curve_json_round_trip():
    t = build_tower(5, 1, 2)
    c = Curve.from_ints(t, 2, 7)
    assert Curve.from_dict(t, c.to_dict()) == c
    P = c.points()[5]
    assert Point.from_dict(P.to_dict()) == P
    assert Point.from_dict(INFINITY.to_dict()) == INFINITY


def test_j_invariant():
    # j = 0 when A = 0, 1728 when B = 0
    assert Curve.from_ints(F5, 0, 1).j_invariant == F5.zero()
    assert Curve.from_ints(F5, 1, 0).j_invariant == F5.from_int(1728)


@pytest.mark.parametrize("p,expected", [(5, 1), (13, 1), (17, 1), (7, Fraction(1, 2))])
def test_ratio_prime_fields(p, expected):
    assert ss_cyclic_ratio(p).ratio == expected


def test_ratio_q25():
    rep = ss_cyclic_ratio(5, 2)
    assert rep.ratio == Fraction(2, 3)
    assert rep.matches_closed_form


def test_ratio_closed_form():
    assert vladut_ratio(13, 1) == 1
    assert vladut_ratio(7, 1) == Fraction(1, 2)
    assert vladut_ratio(5, 2) == Fraction(2, 3)
    assert vladut_ratio(7, 2) == Fraction(2, 3)
    assert vladut_ratio(11, 2) == Fraction(3, 5)
    assert vladut_ratio(13, 2) == 0


def test_ratio_rejects_small_p():
    with pytest.raises(CurveError):
        ss_cyclic_ratio(3)


def test_cyclic_supersingular_f11_j0_twist():
    # a j = 0 supersingular class over F_11 that is cyclic: only one rational 2-torsion point
    t = build_tower(11, 1, 1)
    c = Curve.from_ints(t, 0, 1)
    assert c.order_N == 12 and c.group_info.supersingular
    two_torsion = [P for P in c.points() if c.mul(2, P).is_infinity]
    assert len(two_torsion) == 2
    assert c.group_info.cyclic


T25 = build_tower(5, 1, 2)
C25 = Curve.from_ints(T25, 2, 7)
PTS25 = C25.points()
pt = st.sampled_from(PTS25)


@settings(max_examples=200, deadline=None)
@given(pt, pt, st.integers(-60, 60), st.integers(-60, 60))
def test_scalar_mul_is_a_homomorphism(P, Q, j, k):
    c = C25
    assert c.mul(j + k, P) == c.add(c.mul(j, P), c.mul(k, P))
    assert c.mul(k, c.add(P, Q)) == c.add(c.mul(k, P), c.mul(k, Q))
    assert c.mul(j, c.mul(k, P)) == c.mul(j * k, P)
