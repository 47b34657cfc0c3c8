"""Short Weierstrass curves y^2 = x^3 + A x + B over a tower field (p >= 5)."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import isqrt, lcm
from typing import Iterator

from .arith import factorize
from .field_tower import FElem, TowerField, build_tower

ENUMERATION_CAP = 10**6
BSGS_CAP = 10**10
TABLE_CAP = 512


class CurveError(ValueError):
    pass


@dataclass(frozen=True)
class Point:
    """An affine point, or the point at infinity when x is None."""

    x: FElem | None = None
    y: FElem | None = None

    @property
    def is_infinity(self) -> bool:
        return self.x is None

    def to_dict(self) -> dict:
        if self.x is None:
            return {"inf": True}
        return {"x": [list(c) for c in self.x], "y": [list(c) for c in self.y]}

    @classmethod
    def from_dict(cls, d: dict) -> "Point":
        if d.get("inf"):
            return INFINITY
        return cls(tuple(tuple(c) for c in d["x"]), tuple(tuple(c) for c in d["y"]))


INFINITY = Point()


@dataclass(frozen=True)
class GroupInfo:
    N: int
    M1: int
    M2: int
    supersingular: bool

    @property
    def cyclic(self) -> bool:
        return self.M1 == 1


def hasse_window(q: int) -> tuple[int, int]:
    """Integer range allowed for #E(F_q) by |N - (q+1)| <= 2 sqrt(q)."""
    w = isqrt(4 * q)
    return q + 1 - w, q + 1 + w


@dataclass(frozen=True)
class Curve:
    tower: TowerField
    A: FElem
    B: FElem

    def __post_init__(self):
        if self.tower.p < 5:
            raise CurveError("only short Weierstrass curves with p >= 5 are supported")
        if self.tower.is_zero(self.discriminant):
            raise CurveError("singular curve: discriminant is zero")

    @classmethod
    def from_ints(cls, tower: TowerField, A: int, B: int) -> "Curve":
        return cls(tower, tower.element(A), tower.element(B))

    # -- invariants -----------------------------------------------------------
    @property
    def _four_a3_27b2(self) -> FElem:
        f = self.tower
        a3 = f.mul(self.A, f.mul(self.A, self.A))
        return f.add(f.scale(4, a3), f.scale(27, f.mul(self.B, self.B)))

    @property
    def discriminant(self) -> FElem:
        return self.tower.scale(-16, self._four_a3_27b2)

    @property
    def j_invariant(self) -> FElem:
        f = self.tower
        a3 = f.mul(self.A, f.mul(self.A, self.A))
        return f.div(f.scale(1728 * 4, a3), self._four_a3_27b2)

    def rhs(self, x: FElem) -> FElem:
        f = self.tower
        return f.add(f.mul(f.add(f.mul(x, x), self.A), x), self.B)

    def contains(self, P: Point) -> bool:
        if P.is_infinity:
            return True
        f = self.tower
        return f.mul(P.y, P.y) == self.rhs(P.x)

    # -- group law ------------------------------------------------------------
    def neg(self, P: Point) -> Point:
        if P.is_infinity:
            return P
        return Point(P.x, self.tower.neg(P.y))

    def add(self, P: Point, Q: Point) -> Point:
        """Chord-tangent sum; rejects points that are not on the curve."""
        for R in (P, Q):
            if not self.contains(R):
                raise CurveError(f"point {R} is not on the curve")
        return self._add(P, Q)

    def _add(self, P: Point, Q: Point) -> Point:
        if P.x is None:
            return Q
        if Q.x is None:
            return P
        f = self.tower
        if P.x == Q.x:
            if P.y != Q.y or f.is_zero(P.y):
                return INFINITY
            x2 = f.mul(P.x, P.x)
            num = f.add(f.scale(3, x2), self.A)
            slope = f.div(num, f.scale(2, P.y))
        else:
            slope = f.div(f.sub(Q.y, P.y), f.sub(Q.x, P.x))
        x3 = f.sub(f.sub(f.mul(slope, slope), P.x), Q.x)
        y3 = f.sub(f.mul(slope, f.sub(P.x, x3)), P.y)
        return Point(x3, y3)

    def mul(self, k: int, P: Point) -> Point:
        """[k](P) by double-and-add; negative k uses -P."""
        if k < 0:
            k, P = -k, self.neg(P)
        out = INFINITY
        while k:
            if k & 1:
                out = self._add(out, P)
            P = self._add(P, P)
            k >>= 1
        return out

    # -- enumeration ----------------------------------------------------------
    def points(self) -> list[Point]:
        """All points of E(F): infinity first, then by x index and y index."""
        f = self.tower
        if f.q > ENUMERATION_CAP:
            raise CurveError(f"enumeration cap {ENUMERATION_CAP} exceeded (q = {f.q})")
        roots = f.square_roots
        out = [INFINITY]
        for x in f.elements():
            for y in sorted(roots.get(self.rhs(x), ()), key=f.index):
                out.append(Point(x, y))
        return out

    @cached_property
    def order_N(self) -> int:
        return self.count_points()

    def count_points(self, cap: int = ENUMERATION_CAP) -> int:
        """#E(F): quadratic-character enumeration up to ``cap``, BSGS above."""
        f = self.tower
        if f.q <= cap:
            roots = f.square_roots
            return 1 + sum(len(roots.get(self.rhs(x), ())) for x in f.elements())
        if f.q > BSGS_CAP:
            raise CurveError(f"point counting cap {BSGS_CAP} exceeded (q = {f.q})")
        return self._count_bsgs()

    def _random_points(self, seed: int = 0) -> Iterator[Point]:
        f = self.tower
        rng = random.Random(seed)
        while True:
            x = f.element(rng.randrange(f.q))
            y = f.sqrt(self.rhs(x))
            if y is not None:
                yield Point(x, f.neg(y) if rng.random() < 0.5 else y)

    def _bsgs_multiple(self, P: Point, lo: int, hi: int) -> int:
        """Some M in [lo, hi] with [M]P = O, or the exact order if it is small."""
        m = isqrt(hi - lo) + 1
        baby = {}
        R = INFINITY
        for j in range(m):
            if j and R.is_infinity:
                return j
            baby.setdefault(self.neg(R), j)
            R = self._add(R, P)
        step = self.mul(m, P)
        G = self.mul(lo, P)
        for i in range((hi - lo) // m + 2):
            j = baby.get(G)
            if j is not None:
                return lo + i * m + j
            G = self._add(G, step)
        raise CurveError("baby-step giant-step found no multiple in the Hasse window")

    def _count_bsgs(self, attempts: int = 64) -> int:
        lo, hi = hasse_window(self.tower.q)
        L = 1
        for _, P in zip(range(attempts), self._random_points()):
            L = lcm(L, self._order_from_multiple(P, self._bsgs_multiple(P, lo, hi)))
            multiples = hi // L - (lo - 1) // L
            if multiples == 1:
                return (hi // L) * L
        raise CurveError("baby-step giant-step could not isolate the group order")

    def _order_from_multiple(self, P: Point, M: int) -> int:
        t = M
        for ell in factorize(M):
            while t % ell == 0 and self.mul(t // ell, P).is_infinity:
                t //= ell
        return t

    # -- group structure ------------------------------------------------------
    def order(self, P: Point) -> int:
        """Smallest t >= 1 with [t](P) = O, by stripping prime factors of N."""
        return self._order_from_multiple(P, self.order_N)

    @cached_property
    def group_info(self) -> GroupInfo:
        """N, structure invariants M1 | M2, and the supersingular flag.

        E(F) = Z/M1 x Z/M2 with M1 | q - 1, so only primes ell with ell^2 | N
        and ell | q - 1 can divide M1.  For each such ell the ell-Sylow
        subgroup is built exactly as the span of projected sample points,
        stopping once it has the full size ell^v; its exponent is the largest
        generator order.
        """
        N = self.order_N
        q = self.tower.q
        exponent = N
        for ell, v in factorize(N).items():
            if v < 2 or (q - 1) % ell:
                continue
            size = ell**v
            span = {INFINITY}
            top = 1
            for P in self._random_points():
                R = self.mul(N // size, P)
                if R in span:
                    continue
                top = max(top, self._order_from_multiple(R, size))
                span = self._span(span, R)
                if len(span) == size:
                    break
            exponent = exponent // size * top
        return GroupInfo(N=N, M1=N // exponent, M2=exponent, supersingular=N % self.tower.p == 1)

    def _span(self, H: set, R: Point) -> set:
        out = set(H)
        cur = R
        while cur not in H:
            out.update(self._add(cur, h) for h in H)
            cur = self._add(cur, R)
        return out

    def generator(self) -> Point | None:
        """First point of order N in enumeration order (None if not cyclic).

        Above the enumeration cap the search follows the seeded sampler.
        """
        if not self.group_info.cyclic:
            return None
        N = self.order_N
        if N == 1:
            return INFINITY
        source = self.points() if self.tower.q <= ENUMERATION_CAP else self._random_points()
        for P in source:
            if self.order(P) == N:
                return P
        return None  # pragma: no cover

    @cached_property
    def table(self) -> "GroupTable":
        return GroupTable(self)

    # -- serialisation --------------------------------------------------------
    def to_dict(self) -> dict:
        return {"A": [list(c) for c in self.A], "B": [list(c) for c in self.B]}

    @classmethod
    def from_dict(cls, tower: TowerField, d: dict) -> "Curve":
        def elem(v):
            if isinstance(v, int):
                return tower.element(v)
            return tuple(tuple(c) for c in v)
        return cls(tower, elem(d["A"]), elem(d["B"]))


class GroupTable:
    """Index-level model of a small group E(F): points, sums and negatives.

    Used by exhaustive scans where per-step field arithmetic would dominate.
    """

    def __init__(self, curve: Curve):
        pts = curve.points()
        if len(pts) > TABLE_CAP:
            raise CurveError(f"group table cap {TABLE_CAP} exceeded (N = {len(pts)})")
        self.curve = curve
        self.points = pts
        self.index = {P: i for i, P in enumerate(pts)}
        n = len(pts)
        self.add = [[0] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                k = self.index[curve._add(pts[i], pts[j])]
                self.add[i][j] = self.add[j][i] = k
        self.neg = [self.index[curve.neg(P)] for P in pts]

    def mul(self, k: int, i: int) -> int:
        if k < 0:
            k, i = -k, self.neg[i]
        out = 0
        while k:
            if k & 1:
                out = self.add[out][i]
            i = self.add[i][i]
            k >>= 1
        return out

    def mul_map(self, k: int) -> list[int]:
        return [self.mul(k, i) for i in range(len(self.points))]


def all_curves(tower: TowerField) -> Iterator[Curve]:
    """Every nonsingular (A, B) over F, in index order."""
    for A in tower.elements():
        for B in tower.elements():
            try:
                yield Curve(tower, A, B)
            except CurveError:
                continue


@dataclass(frozen=True)
class RatioReport:
    q: int
    ratio: Fraction
    classes: int
    cyclic_classes: int
    weighted_ratio: Fraction
    expected: Fraction | None

    @property
    def matches_closed_form(self) -> bool | None:
        return None if self.expected is None else self.ratio == self.expected


def vladut_ratio(p: int, degree: int) -> Fraction | None:
    """Published closed form of the cyclic share among supersingular classes.

    ``degree`` is [F : F_p]; q is a square exactly when it is even.
    """
    if degree % 2:
        if p == 2 or p % 4 == 1:
            return Fraction(1)
        return Fraction(1, 2)
    if p == 2:
        return Fraction(5, 7)
    if p == 3:
        return Fraction(2, 3)
    return {1: Fraction(0), 5: Fraction(24, p + 31),
            7: Fraction(24, p + 29), 11: Fraction(36, p + 49)}[p % 12]


def ss_cyclic_ratio(p: int, degree: int = 1) -> RatioReport:
    """Share of supersingular F-isomorphism classes that are cyclic, F = F_{p^degree}.

    Classes are orbits of (A, B) under (u^4 A, u^6 B), u in F^x, computed
    literally.  ``ratio`` counts each orbit once; ``weighted_ratio`` weights
    each orbit by its size (equivalently, counts Weierstrass equations, which
    is the 1/#Aut weighting up to a constant).  The closed form from
    :func:`vladut_ratio` is attached for comparison, never substituted.
    """
    if p < 5:
        raise CurveError("ratio enumeration needs p >= 5")
    if degree not in (1, 2):
        raise CurveError("ratio enumeration supports q = p or q = p^2")
    tower = build_tower(p, 1, degree)
    units = [x for x in tower.elements() if not tower.is_zero(x)]
    twists = {(tower.pow(u, 4), tower.pow(u, 6)) for u in units}
    seen: set[tuple[FElem, FElem]] = set()
    classes = cyclic = 0
    weight_total = weight_cyclic = 0
    for A in tower.elements():
        for B in tower.elements():
            if (A, B) in seen:
                continue
            orbit = {(tower.mul(c4, A), tower.mul(c6, B)) for c4, c6 in twists}
            seen |= orbit
            try:
                curve = Curve(tower, A, B)
            except CurveError:
                continue
            if curve.order_N % p != 1:
                continue
            classes += 1
            weight_total += len(orbit)
            if curve.group_info.cyclic:
                cyclic += 1
                weight_cyclic += len(orbit)
    ratio = Fraction(cyclic, classes) if classes else Fraction(0)
    weighted = Fraction(weight_cyclic, weight_total) if weight_total else Fraction(0)
    return RatioReport(tower.q, ratio, classes, cyclic, weighted, vladut_ratio(p, degree))


def curve_to_json(curve: Curve) -> str:
    return json.dumps(curve.to_dict())
