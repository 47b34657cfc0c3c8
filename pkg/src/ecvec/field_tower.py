"""Exact arithmetic in a finite-field tower F_p < K < F.

K = F_p[u]/(g) has degree ``a`` over F_p and F = K[v]/(h) has degree ``r``
over K, so |F| = p**(a*r).  Elements are plain tuples:

* a K element is a tuple of ``a`` residues (power basis of g, low first);
* an F element is a tuple of ``r`` K elements (power basis of h, low first).

The tower also carries the two bases used by the output map together with
their trace-dual bases.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterator, Sequence

from .arith import is_prime

KElem = tuple[int, ...]
FElem = tuple[KElem, ...]

LEVELS = ("F_over_K", "K_over_Fp", "F_over_Fp")


class FieldError(ValueError):
    """Invalid field construction or an undefined field operation."""


# -- polynomials over F_p: lists of residues, low degree first ---------------

def _trim(c: list) -> list:
    while c and not c[-1]:
        c.pop()
    return c


def _fp_divmod(num: Sequence[int], den: Sequence[int], p: int) -> tuple[list[int], list[int]]:
    num = _trim(list(num))
    den = _trim(list(den))
    if not den:
        raise ZeroDivisionError("polynomial division by zero")
    inv_lead = pow(den[-1], -1, p)
    quo = [0] * max(len(num) - len(den) + 1, 0)
    while len(num) >= len(den):
        shift = len(num) - len(den)
        c = num[-1] * inv_lead % p
        quo[shift] = c
        for i, d in enumerate(den):
            num[shift + i] = (num[shift + i] - c * d) % p
        _trim(num)
    return quo, num


def _monic_polys(base: Sequence, degree: int) -> Iterator[tuple]:
    """Monic polynomials of ``degree`` over ``base`` in lexicographic order.

    Coefficients are compared from the highest non-leading degree down, so
    for F_5 the quadratics run x^2, x^2+1, x^2+2, ..., x^2+x, x^2+x+1, ...
    """
    for high_first in itertools.product(base, repeat=degree):
        yield tuple(reversed(high_first))


# -- generic linear algebra over a field given by callbacks ------------------

def _invert_matrix(m: list[list], zero, one, add, sub, mul, inv) -> list[list]:
    n = len(m)
    aug = [list(row) + [one if i == j else zero for j in range(n)] for i, row in enumerate(m)]
    for col in range(n):
        pivot = next((i for i in range(col, n) if aug[i][col] != zero), None)
        if pivot is None:
            raise FieldError("singular matrix: input is not a basis")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        scale = inv(aug[col][col])
        aug[col] = [mul(scale, x) for x in aug[col]]
        for i in range(n):
            if i != col and aug[i][col] != zero:
                f = aug[i][col]
                aug[i] = [sub(x, mul(f, y)) for x, y in zip(aug[i], aug[col])]
    return [row[n:] for row in aug]


@dataclass(frozen=True)
class TowerField:
    p: int
    a: int
    r: int
    g: tuple[int, ...]
    h: tuple[KElem, ...]
    basis_a: tuple[KElem, ...] = field(default=())
    basis_b: tuple[FElem, ...] = field(default=())

    def __post_init__(self):
        if not self.basis_a:
            object.__setattr__(self, "basis_a", self.power_basis_a())
        if not self.basis_b:
            object.__setattr__(self, "basis_b", self.power_basis_b())
        if len(self.basis_a) != self.a or len(self.basis_b) != self.r:
            raise FieldError("basis has the wrong length")
        # dual bases double as the linear-independence check
        self.dual_a
        self.dual_b

    # -- sizes ----------------------------------------------------------------
    @property
    def m(self) -> int:
        return self.a * self.r

    @property
    def k_size(self) -> int:
        return self.p**self.a

    @property
    def q(self) -> int:
        return self.p**self.m

    # -- K = F_p[u]/(g) -------------------------------------------------------
    def k_zero(self) -> KElem:
        return (0,) * self.a

    def k_one(self) -> KElem:
        return (1,) + (0,) * (self.a - 1)

    def k_from_int(self, c: int) -> KElem:
        return (c % self.p,) + (0,) * (self.a - 1)

    def k_add(self, x: KElem, y: KElem) -> KElem:
        p = self.p
        return tuple((s + t) % p for s, t in zip(x, y))

    def k_sub(self, x: KElem, y: KElem) -> KElem:
        p = self.p
        return tuple((s - t) % p for s, t in zip(x, y))

    def k_neg(self, x: KElem) -> KElem:
        p = self.p
        return tuple(-s % p for s in x)

    def k_mul(self, x: KElem, y: KElem) -> KElem:
        p, a = self.p, self.a
        if a == 1:
            return (x[0] * y[0] % p,)
        prod = [0] * (2 * a - 1)
        for i, s in enumerate(x):
            if s:
                for j, t in enumerate(y):
                    prod[i + j] += s * t
        g = self.g
        for k in range(2 * a - 2, a - 1, -1):
            c = prod[k] % p
            if c:
                for i in range(a):
                    prod[k - a + i] -= c * g[i]
        return tuple(c % p for c in prod[:a])

    def k_inv(self, x: KElem) -> KElem:
        p = self.p
        if not any(x):
            raise ZeroDivisionError("inverse of zero in K")
        if self.a == 1:
            return (pow(x[0], -1, p),)
        # extended Euclid in F_p[u]
        r0, r1 = list(self.g), _trim(list(x))
        s0, s1 = [], [1]
        while len(r1) > 1:
            quo, rem = _fp_divmod(r0, r1, p)
            prod = [0] * (len(quo) + len(s1))
            for i, c in enumerate(quo):
                for j, d in enumerate(s1):
                    prod[i + j] += c * d
            s_new = [((s0[i] if i < len(s0) else 0) - (prod[i] if i < len(prod) else 0)) % p
                     for i in range(max(len(s0), len(prod)))]
            r0, r1, s0, s1 = r1, rem, s1, _trim(s_new)
        c = pow(r1[0], -1, p)
        out = [(v * c) % p for v in s1] + [0] * self.a
        return tuple(out[: self.a])

    def k_pow(self, x: KElem, n: int) -> KElem:
        if n < 0:
            x, n = self.k_inv(x), -n
        out = self.k_one()
        while n:
            if n & 1:
                out = self.k_mul(out, x)
            x = self.k_mul(x, x)
            n >>= 1
        return out

    def k_index(self, x: KElem) -> int:
        out = 0
        for c in reversed(x):
            out = out * self.p + c
        return out

    def k_element(self, idx: int) -> KElem:
        out = []
        for _ in range(self.a):
            idx, c = divmod(idx, self.p)
            out.append(c)
        return tuple(out)

    def k_elements(self) -> Iterator[KElem]:
        return (self.k_element(i) for i in range(self.k_size))

    # -- F = K[v]/(h) ---------------------------------------------------------
    def zero(self) -> FElem:
        return (self.k_zero(),) * self.r

    def one(self) -> FElem:
        return (self.k_one(),) + (self.k_zero(),) * (self.r - 1)

    def from_k(self, x: KElem) -> FElem:
        return (x,) + (self.k_zero(),) * (self.r - 1)

    def from_int(self, c: int) -> FElem:
        return self.from_k(self.k_from_int(c))

    def add(self, x: FElem, y: FElem) -> FElem:
        return tuple(self.k_add(s, t) for s, t in zip(x, y))

    def sub(self, x: FElem, y: FElem) -> FElem:
        return tuple(self.k_sub(s, t) for s, t in zip(x, y))

    def neg(self, x: FElem) -> FElem:
        return tuple(self.k_neg(s) for s in x)

    def mul(self, x: FElem, y: FElem) -> FElem:
        r = self.r
        if r == 1:
            return (self.k_mul(x[0], y[0]),)
        kz = self.k_zero()
        kmul, kadd, ksub = self.k_mul, self.k_add, self.k_sub
        prod = [kz] * (2 * r - 1)
        for i, s in enumerate(x):
            if any(s):
                for j, t in enumerate(y):
                    if any(t):
                        prod[i + j] = kadd(prod[i + j], kmul(s, t))
        h = self.h
        for k in range(2 * r - 2, r - 1, -1):
            c = prod[k]
            if any(c):
                for i in range(r):
                    prod[k - r + i] = ksub(prod[k - r + i], kmul(c, h[i]))
        return tuple(prod[:r])

    def scale(self, c: int, x: FElem) -> FElem:
        p = self.p
        return tuple(tuple(c * v % p for v in s) for s in x)

    def inv(self, x: FElem) -> FElem:
        if self.is_zero(x):
            raise ZeroDivisionError("inverse of zero in F")
        if self.r == 1:
            return (self.k_inv(x[0]),)
        # extended Euclid in K[v]
        kz = self.k_zero()
        r0, r1 = list(self.h), self._ktrim(list(x))
        s0, s1 = [], [self.k_one()]
        while len(r1) > 1:
            quo, rem = self._k_divmod(r0, r1)
            prod = [kz] * (len(quo) + len(s1))
            for i, c in enumerate(quo):
                for j, d in enumerate(s1):
                    prod[i + j] = self.k_add(prod[i + j], self.k_mul(c, d))
            n = max(len(s0), len(prod))
            s_new = [self.k_sub(s0[i] if i < len(s0) else kz, prod[i] if i < len(prod) else kz)
                     for i in range(n)]
            r0, r1, s0, s1 = r1, rem, s1, self._ktrim(s_new)
        c = self.k_inv(r1[0])
        out = [self.k_mul(v, c) for v in s1] + [kz] * self.r
        return tuple(out[: self.r])

    def div(self, x: FElem, y: FElem) -> FElem:
        return self.mul(x, self.inv(y))

    def pow(self, x: FElem, n: int) -> FElem:
        if n < 0:
            x, n = self.inv(x), -n
        out = self.one()
        while n:
            if n & 1:
                out = self.mul(out, x)
            x = self.mul(x, x)
            n >>= 1
        return out

    def is_zero(self, x: FElem) -> bool:
        return not any(any(s) for s in x)

    def index(self, x: FElem) -> int:
        out = 0
        for s in reversed(x):
            out = out * self.k_size + self.k_index(s)
        return out

    def element(self, idx: int) -> FElem:
        out = []
        for _ in range(self.r):
            idx, c = divmod(idx, self.k_size)
            out.append(self.k_element(c))
        return tuple(out)

    def elements(self) -> Iterator[FElem]:
        return (self.element(i) for i in range(self.q))

    def _ktrim(self, c: list) -> list:
        while c and not any(c[-1]):
            c.pop()
        return c

    def _k_divmod(self, num: list, den: list) -> tuple[list, list]:
        num = self._ktrim(list(num))
        inv_lead = self.k_inv(den[-1])
        quo = [self.k_zero()] * max(len(num) - len(den) + 1, 0)
        while len(num) >= len(den):
            shift = len(num) - len(den)
            c = self.k_mul(num[-1], inv_lead)
            quo[shift] = c
            for i, d in enumerate(den):
                num[shift + i] = self.k_sub(num[shift + i], self.k_mul(c, d))
            self._ktrim(num)
        return quo, num

    # -- square roots ---------------------------------------------------------
    @cached_property
    def square_roots(self) -> dict[FElem, list[FElem]]:
        """Map every square of F to its square roots (exhaustive; desk scale)."""
        roots: dict[FElem, list[FElem]] = {}
        for x in self.elements():
            roots.setdefault(self.mul(x, x), []).append(x)
        return roots

    def is_square(self, x: FElem) -> bool:
        if self.is_zero(x):
            return True
        return self.pow(x, (self.q - 1) // 2) == self.one()

    def sqrt(self, x: FElem) -> FElem | None:
        """A square root of ``x`` (Tonelli-Shanks), or None for non-squares."""
        if self.is_zero(x):
            return x
        if not self.is_square(x):
            return None
        q = self.q
        if q % 4 == 3:
            return self.pow(x, (q + 1) // 4)
        s, odd = 0, q - 1
        while odd % 2 == 0:
            odd //= 2
            s += 1
        z = next(self.element(i) for i in range(1, q) if not self.is_square(self.element(i)))
        c = self.pow(z, odd)
        root = self.pow(x, (odd + 1) // 2)
        t = self.pow(x, odd)
        one = self.one()
        while t != one:
            i, t2 = 0, t
            while t2 != one:
                t2 = self.mul(t2, t2)
                i += 1
            b = c
            for _ in range(s - i - 1):
                b = self.mul(b, b)
            root = self.mul(root, b)
            c = self.mul(b, b)
            t = self.mul(t, c)
            s = i
        return root

    # -- traces ---------------------------------------------------------------
    def trace_f_to_k(self, x: FElem) -> KElem:
        """Tr_{F/K}(x) = sum of x^((p^a)^i), i < r, by Frobenius powering."""
        total, conj = x, x
        for _ in range(self.r - 1):
            conj = self.pow(conj, self.k_size)
            total = self.add(total, conj)
        if any(any(c) for c in total[1:]):
            raise FieldError("trace did not land in K")
        return total[0]

    def trace_k_to_fp(self, x: KElem) -> int:
        """Tr_{K/F_p}(x) as an integer in 0..p-1."""
        total, conj = x, x
        for _ in range(self.a - 1):
            conj = self.k_pow(conj, self.p)
            total = self.k_add(total, conj)
        if any(total[1:]):
            raise FieldError("trace did not land in F_p")
        return total[0]

    def trace_f_to_fp(self, x: FElem) -> int:
        """Tr_{F/F_p}(x), summed directly over all m Frobenius conjugates."""
        total, conj = x, x
        for _ in range(self.m - 1):
            conj = self.pow(conj, self.p)
            total = self.add(total, conj)
        if any(any(c) for c in total[1:]) or any(total[0][1:]):
            raise FieldError("trace did not land in F_p")
        return total[0][0]

    @cached_property
    def _abs_trace_of_monomials(self) -> list[list[int]]:
        # Tr_{F/F_p}(u^i v^j), indexed [j][i]
        out = []
        for j in range(self.r):
            row = []
            for i in range(self.a):
                k = tuple(int(n == i) for n in range(self.a))
                x = tuple(k if n == j else self.k_zero() for n in range(self.r))
                row.append(self.trace_f_to_fp(x))
            out.append(row)
        return out

    def trace_f_to_fp_linear(self, x: FElem) -> int:
        """Tr_{F/F_p}(x) from precomputed traces of the monomials u^i v^j."""
        tab = self._abs_trace_of_monomials
        return sum(c * t for coeffs, row in zip(x, tab) for c, t in zip(coeffs, row)) % self.p

    def trace(self, level: str, x):
        if level == "F_over_K":
            return self.trace_f_to_k(x)
        if level == "K_over_Fp":
            return self.trace_k_to_fp(x)
        if level == "F_over_Fp":
            return self.trace_f_to_fp(x)
        raise ValueError(f"unknown trace level {level!r}; expected one of {LEVELS}")

    # -- bases ----------------------------------------------------------------
    def power_basis_a(self) -> tuple[KElem, ...]:
        return tuple(tuple(int(i == j) for j in range(self.a)) for i in range(self.a))

    def power_basis_b(self) -> tuple[FElem, ...]:
        kz, k1 = self.k_zero(), self.k_one()
        return tuple(tuple(k1 if i == j else kz for j in range(self.r)) for i in range(self.r))

    def dual_basis(self, basis: Sequence, level: str) -> tuple:
        """Dual of ``basis`` under the trace form of the given extension.

        ``level`` is "K_over_Fp" (basis of K over F_p) or "F_over_K".
        """
        if level == "K_over_Fp":
            p = self.p
            gram = [[self.trace_k_to_fp(self.k_mul(x, y)) for y in basis] for x in basis]
            coeffs = _invert_matrix(
                gram, 0, 1,
                lambda s, t: (s + t) % p, lambda s, t: (s - t) % p,
                lambda s, t: s * t % p, lambda s: pow(s, -1, p))
            return tuple(
                self._k_combine([coeffs[j][k] for j in range(len(basis))], basis)
                for k in range(len(basis)))
        if level == "F_over_K":
            gram = [[self.trace_f_to_k(self.mul(x, y)) for y in basis] for x in basis]
            coeffs = _invert_matrix(
                gram, self.k_zero(), self.k_one(),
                self.k_add, self.k_sub, self.k_mul, self.k_inv)
            out = []
            for k in range(len(basis)):
                acc = self.zero()
                for j, b in enumerate(basis):
                    acc = self.add(acc, self.mul(self.from_k(coeffs[j][k]), b))
                out.append(acc)
            return tuple(out)
        raise ValueError(f"dual_basis needs level K_over_Fp or F_over_K, got {level!r}")

    def _k_combine(self, coeffs: Sequence[int], basis: Sequence[KElem]) -> KElem:
        acc = [0] * self.a
        for c, b in zip(coeffs, basis):
            for i, v in enumerate(b):
                acc[i] += c * v
        return tuple(v % self.p for v in acc)

    @cached_property
    def dual_a(self) -> tuple[KElem, ...]:
        return self.dual_basis(self.basis_a, "K_over_Fp")

    @cached_property
    def dual_b(self) -> tuple[FElem, ...]:
        return self.dual_basis(self.basis_b, "F_over_K")

    @cached_property
    def _coord_matrix_a(self) -> list[list[int]] | None:
        # power coordinates -> basis_a coordinates; None means identity
        if self.basis_a == self.power_basis_a():
            return None
        p = self.p
        cols = [[b[i] for b in self.basis_a] for i in range(self.a)]
        return _invert_matrix(
            cols, 0, 1,
            lambda s, t: (s + t) % p, lambda s, t: (s - t) % p,
            lambda s, t: s * t % p, lambda s: pow(s, -1, p))

    @cached_property
    def _coord_matrix_b(self) -> list[list[KElem]] | None:
        if self.basis_b == self.power_basis_b():
            return None
        cols = [[b[i] for b in self.basis_b] for i in range(self.r)]
        return _invert_matrix(
            cols, self.k_zero(), self.k_one(),
            self.k_add, self.k_sub, self.k_mul, self.k_inv)

    def coords_a(self, x: KElem) -> tuple[int, ...]:
        """Coordinates of x in K with respect to basis_a (digits phi_i)."""
        mat = self._coord_matrix_a
        if mat is None:
            return x
        p = self.p
        return tuple(sum(row[i] * x[i] for i in range(self.a)) % p for row in mat)

    def coords_b(self, x: FElem) -> tuple[KElem, ...]:
        """K-coordinates of x in F with respect to basis_b."""
        mat = self._coord_matrix_b
        if mat is None:
            return x
        out = []
        for row in mat:
            acc = self.k_zero()
            for c, v in zip(row, x):
                acc = self.k_add(acc, self.k_mul(c, v))
            out.append(acc)
        return tuple(out)

    # -- the digit map --------------------------------------------------------
    def phi_numerator(self, x: KElem) -> int:
        """p**a * Phi(x), where Phi(x) = sum_i phi_i(x) / p**i."""
        out = 0
        for c in self.coords_a(x):
            out = out * self.p + c
        return out

    def phi(self, x: KElem) -> Fraction:
        return Fraction(self.phi_numerator(x), self.k_size)

    # -- serialisation --------------------------------------------------------
    def to_dict(self) -> dict:
        out = {"p": self.p, "a": self.a, "r": self.r,
               "g": list(self.g), "h": [list(c) for c in self.h]}
        if self.basis_a != self.power_basis_a():
            out["basis_a"] = [list(b) for b in self.basis_a]
        if self.basis_b != self.power_basis_b():
            out["basis_b"] = [[list(c) for c in b] for b in self.basis_b]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "TowerField":
        tower = cls(
            p=d["p"], a=d["a"], r=d["r"],
            g=tuple(d["g"]), h=tuple(tuple(c) for c in d["h"]),
            basis_a=tuple(tuple(b) for b in d.get("basis_a", ())),
            basis_b=tuple(tuple(tuple(c) for c in b) for b in d.get("basis_b", ())),
        )
        _check_moduli(tower)
        return tower


def _fp_irreducible(poly: Sequence[int], p: int) -> bool:
    deg = len(poly) - 1
    for d in range(1, deg // 2 + 1):
        for f in _monic_polys(range(p), d):
            _, rem = _fp_divmod(poly, list(f) + [1], p)
            if not rem:
                return False
    return True


def _k_irreducible(tower: TowerField, poly: Sequence[KElem]) -> bool:
    deg = len(poly) - 1
    ks = list(tower.k_elements())
    for d in range(1, deg // 2 + 1):
        for f in _monic_polys(ks, d):
            _, rem = tower._k_divmod(list(poly), list(f) + [tower.k_one()])
            if not rem:
                return False
    return True


def _check_moduli(tower: TowerField) -> None:
    p, a, r = tower.p, tower.a, tower.r
    if not is_prime(p):
        raise FieldError(f"p = {p} is not prime")
    if len(tower.g) != a + 1 or tower.g[-1] != 1 or not _fp_irreducible(tower.g, p):
        raise FieldError("g is not a monic irreducible polynomial of degree a over F_p")
    if len(tower.h) != r + 1 or tower.h[-1] != tower.k_one() or not _k_irreducible(tower, tower.h):
        raise FieldError("h is not a monic irreducible polynomial of degree r over K")


def smallest_irreducible_fp(p: int, degree: int) -> tuple[int, ...]:
    for low in _monic_polys(range(p), degree):
        poly = low + (1,)
        if _fp_irreducible(poly, p):
            return poly
    raise AssertionError("no irreducible polynomial found")  # impossible for prime p


def build_tower(p: int, a: int, r: int,
                basis_a: Sequence[KElem] | None = None,
                basis_b: Sequence[FElem] | None = None) -> TowerField:
    """Tower with the lexicographically smallest monic irreducible moduli.

    K-elements are ordered by their index sum c_i p^i when searching for h.
    Bases default to power bases; custom bases are validated by inverting
    their trace Gram matrices.
    """
    if not is_prime(p):
        raise FieldError(f"p = {p} is not prime")
    if a < 1 or r < 1:
        raise FieldError("a and r must be positive")
    g = smallest_irreducible_fp(p, a)
    # h is searched inside a provisional tower over K
    base = TowerField(p, a, 1, g, ((0,) * a, (1,) + (0,) * (a - 1)))
    ks = [base.k_element(i) for i in range(base.k_size)]
    for low in _monic_polys(ks, r):
        h = low + (base.k_one(),)
        if _k_irreducible(base, h):
            break
    else:  # pragma: no cover
        raise AssertionError("no irreducible polynomial found")
    return TowerField(p, a, r, g, h,
                      tuple(map(tuple, basis_a)) if basis_a else (),
                      tuple(tuple(map(tuple, b)) for b in basis_b) if basis_b else ())


def prime_field(p: int) -> TowerField:
    return build_tower(p, 1, 1)
