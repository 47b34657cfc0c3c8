"""Discrepancy of generator outputs and the Walsh / character-sum machinery
behind the bounds on it.

Point sets are stored exactly as integer numerators over ``den = p**a``.
"""

from __future__ import annotations

import cmath
import itertools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import numpy as np

from .curve import Point
from .ecgen import GeneratorConfig, measure_period, output_rows
from .field_tower import FElem, TowerField

HEFTER_CONSTANT = 2.43
DISCREPANCY_BUDGET = 5 * 10**7


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class PointSet:
    nums: np.ndarray  # (L, h) integer numerators
    den: int
    label: str = "custom"

    def __post_init__(self):
        nums = np.asarray(self.nums, dtype=np.int64)
        if nums.ndim != 2:
            raise ValueError("point set must be a 2-d array of numerators")
        if nums.size and (nums.min() < 0 or nums.max() >= self.den):
            raise ValueError("coordinates must lie in [0, 1)")
        object.__setattr__(self, "nums", nums)

    @property
    def L(self) -> int:
        return self.nums.shape[0]

    @property
    def dim(self) -> int:
        return self.nums.shape[1]

    def points(self) -> list[tuple[Fraction, ...]]:
        return [tuple(Fraction(int(v), self.den) for v in row) for row in self.nums]

    def to_csv(self) -> str:
        return "\n".join(",".join(repr(float(v) / self.den) for v in row) for row in self.nums) + "\n"

    @classmethod
    def from_fractions(cls, pts, den: int, label: str = "custom") -> "PointSet":
        nums = []
        for pt in pts:
            row = []
            for v in pt:
                v = Fraction(v)
                if den % v.denominator:
                    raise ValueError(f"{v} is not a multiple of 1/{den}")
                row.append(v.numerator * (den // v.denominator))
            nums.append(row)
        return cls(np.array(nums, dtype=np.int64).reshape(len(nums), -1), den, label)


# -- point sets from a generator run -------------------------------------------

def build_pointset(kind: str, cfg: GeneratorConfig, s: int | None = None) -> PointSet:
    """One of the sets M, N_s (overlapping windows) or Nt_s (stride-s windows).

    Windows containing the sentinel G(O) = (1,...,1) are discarded.  The
    run is read over one full cycle, starting after any pre-period.
    """
    if cfg.e != 1:
        warnings.warn("discrepancy bounds are only established for e = 1", stacklevel=2)
    info = measure_period(cfg)
    t, mu = info.t, info.pre_period
    den = cfg.denominator
    if kind == "M":
        rows = output_rows(cfg, mu, t)
        keep = ~np.all(rows == den, axis=1)
        return PointSet(rows[keep], den, "M")
    if kind not in ("N", "Nt"):
        raise ValueError(f"unknown point-set kind {kind!r}")
    if s is None or not 2 <= s <= t:
        raise ValueError(f"window length s = {s} outside [2, t = {t}]")
    if kind == "N":
        starts = np.arange(t)
    else:
        starts = np.arange(t // gcd(s, t)) * s
    length = int(starts[-1]) + s
    rows = output_rows(cfg, mu, length)
    sentinel = np.all(rows == den, axis=1)
    windows = starts[:, None] + np.arange(s)[None, :]
    keep = ~sentinel[windows].any(axis=1)
    nums = rows[windows[keep]].reshape(int(keep.sum()), s * rows.shape[1])
    return PointSet(nums, den, f"{kind}_{s}")


# -- exact extreme discrepancy -------------------------------------------------

def exact_discrepancy(ps: PointSet, budget: int = DISCREPANCY_BUDGET) -> Fraction:
    """sup over boxes prod [mu_i, nu_i) of |#(box)/L - vol(box)|, exactly.

    The excess count/L - vol is maximised by closed limit boxes spanned by
    point coordinates; the deficit vol - count/L by open limit boxes whose
    faces sit at point coordinates or at 0 / 1.  Both searches run over
    bitmasks of the points, pruned by simple upper bounds.
    """
    L, h, den = ps.L, ps.dim, ps.den
    if L == 0:
        raise ValueError("discrepancy of an empty point set")
    nums = ps.nums
    full = den**h
    by_value = []
    for k in range(h):
        col = nums[:, k]
        masks = {}
        for i, v in enumerate(col.tolist()):
            masks[v] = masks.get(v, 0) | (1 << i)
        by_value.append(masks)
    # cumulative masks: ge[k][v] = points with coord >= v, etc.
    ge, le = [], []
    for k in range(h):
        g = [0] * (den + 2)
        l_ = [0] * (den + 2)
        for v in range(den - 1, -1, -1):
            g[v] = g[v + 1] | by_value[k].get(v, 0)
        acc = 0
        for v in range(den):
            acc |= by_value[k].get(v, 0)
            l_[v] = acc
        ge.append(g)
        le.append(l_)
    all_mask = (1 << L) - 1
    nodes = 0
    den_pow = [den**(h - k) for k in range(h + 1)]

    def values_in(k, mask):
        return sorted(v for v, m in by_value[k].items() if m & mask)

    # excess: numerator count*den^h - L*prod(len), over L*den^h
    best_excess = 0

    def excess(k, mask, vol):
        nonlocal best_excess, nodes
        nodes += 1
        if nodes > budget:
            raise BudgetExceeded(f"discrepancy search budget {budget} exceeded")
        count = mask.bit_count()
        if k == h:
            val = count * full - L * vol
            if val > best_excess:
                best_excess = val
            return
        if count * full <= best_excess:
            return
        vals = values_in(k, mask)
        gek, lek = ge[k], le[k]
        for i, lo in enumerate(vals):
            lo_mask = mask & gek[lo]
            for hi in vals[i:]:
                sub = lo_mask & lek[hi]
                if sub:
                    excess(k + 1, sub, vol * (hi - lo))

    # deficit: numerator L*prod(len) - count*den^h
    best_deficit = 0

    def deficit(k, mask, vol):
        nonlocal best_deficit, nodes
        nodes += 1
        if nodes > budget:
            raise BudgetExceeded(f"discrepancy search budget {budget} exceeded")
        if k == h:
            val = L * vol - mask.bit_count() * full
            if val > best_deficit:
                best_deficit = val
            return
        if L * vol * den_pow[k] <= best_deficit:
            return
        vals = values_in(k, mask)
        gek, lek = ge[k], le[k]
        lows = sorted({0, *vals})
        highs = vals + [den]
        for lo in lows:
            # strictly above lo
            lo_mask = mask & gek[lo + 1]
            for hi in highs:
                if hi <= lo:
                    continue
                sub = lo_mask & ~gek[hi] if hi < den else lo_mask
                deficit(k + 1, sub, vol * (hi - lo))

    excess(0, all_mask, 1)
    deficit(0, all_mask, 1)
    return Fraction(max(best_excess, best_deficit), L * full)


def brute_force_discrepancy(ps: PointSet) -> Fraction:
    """Reference: every grid box [i/den, j/den) and every open/closed limit.

    Exponential in the dimension; meant for tiny test cases only.
    """

    L, h, den = ps.L, ps.dim, ps.den
    pts = ps.nums.tolist()
    best = Fraction(0)
    # endpoints on the half-grid: 2*c means c/den exactly, 2*c+1 means just above it
    ends = range(0, 2 * den + 1)
    intervals = [(lo, hi) for lo in ends for hi in ends if lo <= hi]
    for box in itertools.product(intervals, repeat=h):
        vol = Fraction(1)
        for lo, hi in box:
            vol *= Fraction(hi // 2 - lo // 2, den)
        inside = sum(all(lo <= 2 * c < hi for c, (lo, hi) in zip(pt, box)) for pt in pts)
        best = max(best, abs(Fraction(inside, L) - vol))
    return best


# -- Walsh functions -----------------------------------------------------------

def _digits_table(p: int, a: int) -> tuple[np.ndarray, np.ndarray]:
    n = np.arange(p**a)
    k_digits = np.stack([(n // p**i) % p for i in range(a)], axis=1)          # k(1..a), low first
    xi_digits = np.stack([(n // p**(a - 1 - i)) % p for i in range(a)], axis=1)  # xi(1..a), high first
    return k_digits, xi_digits


def walsh_phase_table(p: int, a: int) -> np.ndarray:
    """phase[k, x] = sum_i k(i) xi(i) mod p, for xi = x / p**a."""
    k_digits, xi_digits = _digits_table(p, a)
    return (k_digits @ xi_digits.T) % p


def walsh(k, xi, p: int, a: int) -> complex:
    """Base-p Walsh function w_k(xi); vectors k, xi give the product over coordinates."""
    ks = k if isinstance(k, (list, tuple)) else (k,)
    xis = xi if isinstance(xi, (list, tuple)) else (xi,)
    den = p**a
    phase = 0
    for kk, x in zip(ks, xis):
        x = Fraction(x)
        if den % x.denominator or not 0 <= x < 1:
            raise ValueError(f"{x} is not of the form j / {den} in [0, 1)")
        num = x.numerator * (den // x.denominator)
        for i in range(a):
            phase += ((kk // p**i) % p) * ((num // p**(a - 1 - i)) % p)
    return cmath.exp(2j * math.pi * (phase % p) / p)


def _pa(ps: PointSet, p: int) -> int:
    a = round(math.log(ps.den, p))
    if p**a != ps.den:
        raise ValueError(f"denominator {ps.den} is not a power of {p}")
    return a


def walsh_sum(k, ps: PointSet, p: int) -> complex:
    """S_L(w_k, ps): mean of w_k over the point set."""
    if ps.L == 0:
        raise ValueError("Walsh sum over an empty point set")
    table = walsh_phase_table(p, _pa(ps, p))
    phase = np.zeros(ps.L, dtype=np.int64)
    for j, kk in enumerate(k):
        phase += table[kk, ps.nums[:, j]]
    roots = np.exp(2j * np.pi * np.arange(p) / p)
    return complex(roots[phase % p].mean())


def walsh_sums(ps: PointSet, p: int, chunk: int = 1 << 22) -> np.ndarray:
    """S_L(w_k, ps) for every k in Delta_h, flattened with k^(1) slowest."""
    if ps.L == 0:
        raise ValueError("Walsh sums of an empty point set")
    a = _pa(ps, p)
    den, h, L = ps.den, ps.dim, ps.L
    table = walsh_phase_table(p, a)
    per_dim = [table[:, ps.nums[:, j]] for j in range(h)]  # each (den, L)
    roots = np.exp(2j * np.pi * np.arange(p) / p)
    # split dimensions: leading ones iterated, trailing ones broadcast
    tail = h
    while tail > 0 and den**(h - tail + 1) * L <= chunk:
        tail -= 1
    tail_phase = np.zeros((1, L), dtype=np.int64)
    for j in range(tail, h):
        tail_phase = (tail_phase[:, None, :] + per_dim[j][None, :, :]).reshape(-1, L) % p
    out = []
    for lead in itertools.product(range(den), repeat=tail):
        base = np.zeros(L, dtype=np.int64)
        for j, kk in enumerate(lead):
            base += per_dim[j][kk]
        out.append(roots[(tail_phase + base) % p].mean(axis=1))
    return np.concatenate(out)


def max_walsh_abs(ps: PointSet, p: int) -> float:
    """max over k in Delta*_h of |S_L(w_k, ps)|."""
    sums = walsh_sums(ps, p)
    return float(np.abs(sums[1:]).max()) if sums.size > 1 else 0.0


# -- bounds --------------------------------------------------------------------

def hefter_bound(B: float, h: int, p: int, a: int) -> float:
    """Discrepancy bound from a uniform Walsh-sum bound B over Delta*_h."""
    if B < 0:
        raise ValueError("B must be nonnegative")
    pa = p**a
    return 1 - (1 - 1 / pa) ** h + B * (HEFTER_CONSTANT * math.log(pa) + 1) ** h


def walsh_premise(kind: str, q: int, count: int, s: int = 1) -> float:
    """The per-k Walsh-sum bound B feeding each discrepancy estimate."""
    root_q = math.sqrt(q)
    if kind == "D":
        return 4 * root_q / count
    if kind == "D_s":
        return 6 * root_q * s / count
    if kind == "Dt_s":
        return 6 * root_q * s**3 / count
    raise ValueError(f"unknown bound kind {kind!r}")


def discrepancy_bound(kind: str, p: int, a: int, r: int, count: int, s: int = 1) -> float:
    """Right-hand side of the discrepancy estimate for M, N_s or Nt_s.

    ``count`` is t' for kind "D" and t'' for "D_s" and "Dt_s".
    """
    if count <= 0:
        raise ValueError("count must be positive")
    if kind in ("D_s", "Dt_s"):
        if p < 5:
            raise ValueError("windowed bounds assume p >= 5")
        if not s >= 2:
            raise ValueError("windowed bounds need s >= 2")
        if kind == "Dt_s" and gcd(s, p) != 1:
            raise ValueError("the stride bound assumes p >= 5 and gcd(s, p) = 1")
        h = 2 * r * s
    elif kind == "D":
        h = 2 * r
    else:
        raise ValueError(f"unknown bound kind {kind!r}")
    q = p**(a * r)
    return hefter_bound(walsh_premise(kind, q, count, s), h, p, a)


# -- character sums over the curve ---------------------------------------------

@dataclass(frozen=True)
class CharacterData:
    """Coefficients of f = sum_i eta_i * x(P_{n+i}) + etabar_i * y(P_{n+i})."""

    eta: tuple[FElem, ...]
    eta_bar: tuple[FElem, ...]

    @property
    def s(self) -> int:
        return len(self.eta)


def _dual_products(tower: TowerField) -> list[list[FElem]]:
    return [[tower.mul(lam, tower.from_k(kap)) for kap in tower.dual_a] for lam in tower.dual_b]


def character_data(tower: TowerField, k, s: int = 1) -> CharacterData:
    """eta / etabar per window from a Walsh index k in Delta*_{2rs}."""
    r, a, p = tower.r, tower.a, tower.p
    k = list(k)
    if len(k) != 2 * r * s:
        raise ValueError(f"index needs {2 * r * s} components")
    if not any(k):
        raise ValueError("the zero index is not in Delta*")
    if any(not 0 <= kk < p**a for kk in k):
        raise ValueError("index components must lie in [0, p**a)")
    basis = _dual_products(tower)

    def combine(block):
        acc = tower.zero()
        for j, kk in enumerate(block):
            for i in range(a):
                digit = (kk // p**i) % p
                if digit:
                    acc = tower.add(acc, tower.scale(digit, basis[j][i]))
        return acc

    eta, eta_bar = [], []
    for w in range(s):
        off = 2 * r * w
        eta.append(combine(k[off:off + r]))
        eta_bar.append(combine(k[off + r:off + 2 * r]))
    return CharacterData(tuple(eta), tuple(eta_bar))


@dataclass(frozen=True)
class CharSumReport:
    value: complex
    terms: int
    degree: int
    single_pole: bool
    bound: float
    stated_bound: float

    @property
    def magnitude(self) -> float:
        return abs(self.value)


def char_sum(cfg: GeneratorConfig, chars: CharacterData, stride: bool = False,
             t: int | None = None) -> CharSumReport:
    """Additive character sum of f over the orbit P_n = [n]Q + P0 (e = 1).

    Sums exp(2 pi i Tr(f) / p) over n in [0, t) (or [0, t/gcd(s,t)) with
    stride s), skipping windows that touch the point at infinity.  Reports
    the degree-based bound for f alongside the per-estimate bound
    4 sqrt(q), 6 s sqrt(q) or 6 s^3 sqrt(q) / gcd(s, t).
    """
    tower, curve = cfg.tower, cfg.curve
    if cfg.e != 1:
        raise ValueError("character sums are over the e = 1 orbit")
    s = chars.s
    nonzero = [not (tower.is_zero(x) and tower.is_zero(y)) for x, y in zip(chars.eta, chars.eta_bar)]
    if not any(nonzero):
        raise ValueError("f is identically zero")
    if t is None:
        t = curve.order(cfg.Q)
    count = t // gcd(s, t) if stride else t
    step = s if stride else 1
    trace = tower.trace_f_to_fp_linear
    roots = [cmath.exp(2j * math.pi * c / tower.p) for c in range(tower.p)]
    # orbit points indexed mod t
    orbit = []
    P = cfg.P0
    for _ in range(t):
        orbit.append(P)
        P = curve._add(P, cfg.Q)
    total = 0j
    terms = 0
    for n in range(count):
        window = [orbit[(n * step + i) % t] for i in range(s)]
        if any(R.is_infinity for R in window):
            continue
        acc = tower.zero()
        for R, x_c, y_c in zip(window, chars.eta, chars.eta_bar):
            acc = tower.add(acc, tower.add(tower.mul(x_c, R.x), tower.mul(y_c, R.y)))
        total += roots[trace(acc)]
        terms += 1
    poles = [3 if not tower.is_zero(y) else 2
             for (x, y), nz in zip(zip(chars.eta, chars.eta_bar), nonzero) if nz]
    degree = sum(poles)
    single_pole = len(poles) == 1 and not (stride and s > 1)
    root_q = math.sqrt(tower.q)
    if stride:
        degree *= s * s
    bound = (1 + degree) * root_q if single_pole else 2 * degree * root_q
    if stride:
        g = gcd(s, t)
        bound /= g
        stated = 6 * root_q * s**3 / g
    elif s > 1:
        stated = 6 * root_q * s
    else:
        stated = 4 * root_q
    return CharSumReport(total, terms, degree, single_pole, bound, stated)


def walsh_character_identity(cfg: GeneratorConfig, k, P: Point) -> tuple[complex, complex]:
    """Both sides of w_k(G(P)) = exp(2 pi i Tr(eta x(P) + etabar y(P)) / p)."""
    from .ecgen import output_numerators

    tower = cfg.tower
    nums = output_numerators(tower, P)
    lhs = walsh(list(k), [Fraction(n, tower.k_size) for n in nums], tower.p, tower.a)
    chars = character_data(tower, k, 1)
    arg = tower.add(tower.mul(chars.eta[0], P.x), tower.mul(chars.eta_bar[0], P.y))
    rhs = cmath.exp(2j * math.pi * tower.trace_f_to_fp(arg) / tower.p)
    return lhs, rhs


@dataclass(frozen=True)
class QualityReport:
    kind: str
    L: int
    discrepancy: Fraction
    bound: float
    max_walsh_abs: float
    walsh_premise: float
    hefter: float

    @property
    def holds(self) -> bool:
        return float(self.discrepancy) <= self.bound + 1e-12

    def to_dict(self) -> dict:
        return {"kind": self.kind, "L": self.L,
                "discrepancy": {"num": self.discrepancy.numerator, "den": self.discrepancy.denominator},
                "bound": self.bound, "maxWalshAbs": self.max_walsh_abs,
                "walshPremise": self.walsh_premise, "hefterWithMeasuredB": self.hefter,
                "holds": self.holds}


def quality_report(cfg: GeneratorConfig, kind: str = "D", s: int = 1,
                   budget: int = DISCREPANCY_BUDGET) -> QualityReport:
    """Exact discrepancy of M / N_s / Nt_s against its theoretical bound."""
    tower = cfg.tower
    info = measure_period(cfg)
    if kind == "D":
        ps = build_pointset("M", cfg)
        count = info.t_prime
    else:
        ps = build_pointset("N" if kind == "D_s" else "Nt", cfg, s)
        count = info.t_double_prime(s)
    D = exact_discrepancy(ps, budget)
    bound = discrepancy_bound(kind, tower.p, tower.a, tower.r, count, s)
    B = max_walsh_abs(ps, tower.p)
    return QualityReport(kind, ps.L, D, bound, B, walsh_premise(kind, tower.q, count, s),
                         hefter_bound(B, ps.dim, tower.p, tower.a))
