"""The elliptic-curve vector generator.

States follow P_{n+1} = [e](P_n) + Q.  Each state is mapped to a point of
[0,1]^{2r} by the output map G, and windows of ``s`` consecutive outputs are
assembled into the vectors u_n.  All outputs are exact: coordinates are kept
as integer numerators over the common denominator p**a (the sentinel value 1
appears as numerator p**a).
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np

from .arith import factorize, geometric_sum_mod
from .curve import INFINITY, TABLE_CAP, Curve, CurveError, Point
from .field_tower import TowerField

PERIOD_CAP = 10**6


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    """Parameters (curve, e, Q, P0) plus the assembly window s, dimension d and
    the 1-based coordinate injection pi."""

    curve: Curve
    e: int
    Q: Point
    P0: Point = INFINITY
    s: int = 1
    d: int | None = None
    pi: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.e == 0:
            raise ConfigError("e must be a nonzero integer")
        if self.s < 1:
            raise ConfigError("window length s must be >= 1")
        for name in ("Q", "P0"):
            if not self.curve.contains(getattr(self, name)):
                raise ConfigError(f"{name} is not on the curve")
        width = self.width
        d = width if self.d is None else self.d
        if not 1 <= d <= width:
            raise ConfigError(f"d = {d} must satisfy 1 <= d <= 2rs = {width}")
        pi = tuple(range(1, d + 1)) if self.pi is None else tuple(self.pi)
        if len(pi) != d:
            raise ConfigError("pi must list exactly d coordinates")
        if len(set(pi)) != d or not all(1 <= i <= width for i in pi):
            raise ConfigError(f"pi must be an injection into 1..{width}")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "pi", pi)

    @property
    def tower(self) -> TowerField:
        return self.curve.tower

    @property
    def width(self) -> int:
        return 2 * self.tower.r * self.s

    @property
    def denominator(self) -> int:
        return self.tower.k_size

    def to_dict(self) -> dict:
        f = self.tower
        return {"p": f.p, "a": f.a, "r": f.r, "curve": self.curve.to_dict(),
                "e": self.e, "Q": self.Q.to_dict(), "P0": self.P0.to_dict(),
                "s": self.s, "d": self.d, "pi": list(self.pi)}

    @classmethod
    def from_dict(cls, d: dict, tower: TowerField | None = None) -> "GeneratorConfig":
        from .field_tower import build_tower

        if tower is None:
            tower = build_tower(d["p"], d.get("a", 1), d.get("r", 1))
        curve = Curve.from_dict(tower, d["curve"])
        return cls(curve, d["e"], _point(tower, d["Q"]), _point(tower, d.get("P0", {"inf": True})),
                   d.get("s", 1), d.get("d"), tuple(d["pi"]) if d.get("pi") else None)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _point(tower: TowerField, v) -> Point:
    if isinstance(v, dict) and isinstance(v.get("x"), int):
        return Point(tower.element(v["x"]), tower.element(v["y"]))
    return Point.from_dict(v)


# -- state iteration ----------------------------------------------------------

def transition(cfg: GeneratorConfig, P: Point) -> Point:
    curve = cfg.curve
    return curve._add(curve.mul(cfg.e, P), cfg.Q)


@dataclass
class GeneratorState:
    n: int
    P: Point


def step(cfg: GeneratorConfig, state: GeneratorState) -> GeneratorState:
    return GeneratorState(state.n + 1, transition(cfg, state.P))


def jump_ahead(cfg: GeneratorConfig, n: int) -> Point:
    """P_n in O(log n) group operations.

    Coefficients are reduced mod N = #E(F), which annihilates every point.
    """
    if n < 0:
        raise ValueError("jump_ahead needs n >= 0")
    curve = cfg.curve
    N = curve.order_N
    if cfg.e == 1:
        return curve._add(curve.mul(n % N, cfg.Q), cfg.P0)
    e_pow, geo = geometric_sum_mod(cfg.e, n, N)
    return curve._add(curve.mul(geo, cfg.Q), curve.mul(e_pow, cfg.P0))


def iterate_points(cfg: GeneratorConfig, start: int = 0) -> Iterator[Point]:
    P = jump_ahead(cfg, start)
    while True:
        yield P
        P = transition(cfg, P)


# -- periods -------------------------------------------------------------------

@dataclass(frozen=True)
class PeriodInfo:
    """Cycle length ``t`` of (P_n), its pre-period, and whether the cycle
    passes through the point at infinity."""

    t: int
    pre_period: int
    visits_infinity: bool

    @property
    def t_prime(self) -> int:
        return self.t - 1 if self.visits_infinity else self.t

    def t_double_prime(self, s: int) -> int:
        if not 2 <= s <= self.t:
            raise ValueError(f"s = {s} outside [2, t = {self.t}]")
        return self.t - s if self.visits_infinity else self.t


def _cycle(successor, start, cap: int) -> tuple[int, int, list]:
    seen = {}
    orbit = []
    x = start
    while x not in seen:
        if len(orbit) >= cap:
            raise ConfigError(f"period search cap {cap} exceeded")
        seen[x] = len(orbit)
        orbit.append(x)
        x = successor(x)
    mu = seen[x]
    return mu, len(orbit) - mu, orbit[mu:]


def measure_period(cfg: GeneratorConfig, cap: int = PERIOD_CAP) -> PeriodInfo:
    """Simulate until a state repeats; report cycle length and pre-period."""
    curve = cfg.curve
    if curve.order_N <= TABLE_CAP:
        table = curve.table
        mul_e = table.mul_map(cfg.e)
        add_q = table.add[table.index[cfg.Q]]
        mu, t, cyc = _cycle(lambda i: add_q[mul_e[i]], table.index[cfg.P0], cap)
        return PeriodInfo(t, mu, 0 in cyc)
    mu, t, cyc = _cycle(lambda P: transition(cfg, P), cfg.P0, cap)
    return PeriodInfo(t, mu, any(P.is_infinity for P in cyc))


@dataclass(frozen=True)
class PredicateReport:
    cyclic: bool
    q_has_order_n: bool
    e_one_mod_primes: bool
    e_one_mod_four: bool

    @property
    def holds(self) -> bool:
        return self.cyclic and self.q_has_order_n and self.e_one_mod_primes and self.e_one_mod_four

    def __bool__(self) -> bool:
        return self.holds


def max_period_predicate(curve: Curve, e: int, Q: Point) -> PredicateReport:
    """The four conditions under which (P_n) has the maximum period N."""
    N = curve.order_N
    primes = factorize(N)
    return PredicateReport(
        cyclic=curve.group_info.cyclic,
        q_has_order_n=curve.order(Q) == N,
        e_one_mod_primes=all((e - 1) % ell == 0 for ell in primes),
        e_one_mod_four=N % 4 != 0 or (e - 1) % 4 == 0,
    )


# -- the output map G ----------------------------------------------------------

def output_numerators(tower: TowerField, P: Point) -> tuple[int, ...]:
    """p**a * G(P): digit-map numerators of the basis coordinates of x and y."""
    if P.is_infinity:
        return (tower.k_size,) * (2 * tower.r)
    phi = tower.phi_numerator
    return tuple(phi(c) for c in tower.coords_b(P.x)) + tuple(phi(c) for c in tower.coords_b(P.y))


def output_G(tower: TowerField, P: Point) -> tuple[Fraction, ...]:
    den = tower.k_size
    return tuple(Fraction(n, den) for n in output_numerators(tower, P))


def output_G_by_trace(tower: TowerField, P: Point) -> tuple[Fraction, ...]:
    """G(P) recomputed through absolute traces Tr_{F/F_p}(eta * lambda'_j * kappa'_i)."""
    if P.is_infinity:
        return (Fraction(1),) * (2 * tower.r)
    out = []
    for eta in (P.x, P.y):
        for lam in tower.dual_b:
            v = tower.mul(eta, lam)
            total = Fraction(0)
            for i, kap in enumerate(tower.dual_a, start=1):
                total += Fraction(tower.trace_f_to_fp(tower.mul(v, tower.from_k(kap))), tower.p**i)
            out.append(total)
    return tuple(out)


# -- vector assembly -----------------------------------------------------------

def output_rows(cfg: GeneratorConfig, start: int, length: int) -> np.ndarray:
    """Numerators of G(P_n) for start <= n < start + length, shape (length, 2r).

    Once a state repeats the remaining rows are filled periodically, so a long
    request on a short cycle costs one cycle of group operations.
    """
    width = 2 * cfg.tower.r
    rows = np.empty((length, width), dtype=np.int64)
    seen: dict[Point, int] = {}
    P = jump_ahead(cfg, start) if length else None
    for n in range(length):
        j = seen.get(P)
        if j is not None:
            rows[n:] = rows[j + (np.arange(n, length) - j) % (n - j)]
            break
        seen[P] = n
        rows[n] = output_numerators(cfg.tower, P)
        P = transition(cfg, P)
    return rows


def _emit_chunk(args) -> np.ndarray:
    cfg, offset, count = args
    s = cfg.s
    rows = output_rows(cfg, offset * s, count * s)
    flat = rows.reshape(count, s * rows.shape[1]) if count else np.empty((0, cfg.width), np.int64)
    return flat[:, [i - 1 for i in cfg.pi]]


def emit_numerators(cfg: GeneratorConfig, count: int, offset: int = 0,
                    workers: int = 1) -> np.ndarray:
    """Numerators (over p**a) of u_offset .. u_{offset+count-1}, shape (count, d).

    With ``workers > 1`` the index range is split into contiguous blocks,
    each started independently by jump-ahead; the result is identical.
    """
    if count < 0 or offset < 0:
        raise ValueError("count and offset must be nonnegative")
    if workers <= 1 or count < 2 * workers:
        return _emit_chunk((cfg, offset, count))
    bounds = [offset + count * k // workers for k in range(workers + 1)]
    jobs = [(cfg, lo, hi - lo) for lo, hi in zip(bounds, bounds[1:])]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_emit_chunk, jobs))
    return np.concatenate(parts, axis=0)


def emit_vectors(cfg: GeneratorConfig, count: int, offset: int = 0) -> list[tuple[Fraction, ...]]:
    den = cfg.denominator
    nums = emit_numerators(cfg, count, offset)
    return [tuple(Fraction(int(n), den) for n in row) for row in nums]


def emit_floats(cfg: GeneratorConfig, count: int, offset: int = 0, workers: int = 1) -> np.ndarray:
    return emit_numerators(cfg, count, offset, workers) / cfg.denominator


def find_max_period_config(curve: Curve, e: int = 1, **kwargs) -> GeneratorConfig:
    """Config with Q a generator of a cyclic curve (raises if none exists)."""
    Q = curve.generator()
    if Q is None:
        raise CurveError("curve is not cyclic over F")
    return GeneratorConfig(curve, e, Q, **kwargs)
