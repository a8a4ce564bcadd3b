"""Exact arithmetic in cyclotomic fields Q(zeta_n).

Values are stored as polynomials in zeta_n reduced modulo the n-th cyclotomic
polynomial, with Fraction coefficients, so equality is decidable and exact.
Arithmetic between values of different orders lifts both to the lcm order.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Iterable, Iterator


def _divisors(n: int) -> list[int]:
    divs = [d for d in range(1, n + 1) if n % d == 0]
    return divs


@lru_cache(maxsize=None)
def cyclotomic_polynomial(n: int) -> tuple[int, ...]:
    """Integer coefficients of Phi_n, constant term first, monic."""
    if n < 1:
        raise ValueError("order must be positive")
    if n == 1:
        return (-1, 1)
    # x^n - 1 divided by Phi_d for every proper divisor d of n.
    poly = [0] * (n + 1)
    poly[0] = -1
    poly[n] = 1
    for d in _divisors(n)[:-1]:
        poly = _poly_div_exact(poly, cyclotomic_polynomial(d))
    return tuple(poly)


def _poly_div_exact(num: list[int], den: tuple[int, ...]) -> list[int]:
    # Exact division of integer polynomials, den monic.
    num = list(num)
    dn = len(den) - 1
    out = [0] * (len(num) - dn)
    for i in range(len(num) - 1, dn - 1, -1):
        c = num[i]
        if c == 0:
            continue
        out[i - dn] = c
        for j, dj in enumerate(den):
            num[i - dn + j] -= c * dj
    if any(num):
        raise ArithmeticError("inexact polynomial division")
    return out


@lru_cache(maxsize=None)
def _root_forms(n: int) -> tuple[tuple[Fraction, ...], ...]:
    # Canonical coefficient tuple of zeta_n^k for each k, used for fast
    # root-multiple detection.
    forms = []
    for k in range(n):
        poly = [Fraction(0)] * n
        poly[k] = Fraction(1)
        forms.append(_reduce_mod_phi(poly, n))
    return tuple(forms)


def _reduce_mod_phi(poly: list[Fraction], n: int) -> tuple[Fraction, ...]:
    phi = cyclotomic_polynomial(n)
    deg = len(phi) - 1
    poly = list(poly)
    for i in range(len(poly) - 1, deg - 1, -1):
        c = poly[i]
        if c == 0:
            continue
        for j in range(len(phi)):
            poly[i - deg + j] -= c * phi[j]
    out = poly[:deg]
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


def _normalize_root(n: int, k: int) -> tuple[int, int, int]:
    """Return (order, exponent, sign) with zeta_n^k = sign * zeta_order^exponent
    and order minimal (never 2 mod 4, never even-reducible)."""
    k %= n
    g = gcd(k, n)
    n, k = n // g, k // g
    sign = 1
    while n % 4 == 2:
        # zeta_{2u}^k with u odd and k odd (k coprime to 2u): equals
        # (-1)^k * zeta_u^{k(u+1)/2}.
        u = n // 2
        if k % 2 == 1:
            sign = -sign
        k = (k * ((u + 1) // 2)) % u
        n = u
        g = gcd(k, n) if k else n
        n, k = (n // g, k // g) if g else (n, k)
        if n == 0:
            n = 1
    if n == 1:
        return 1, 0, sign
    return n, k % n, sign


@dataclass(frozen=True)
class Cyclo:
    """An element of Q(zeta_order), canonical modulo Phi_order."""

    order: int
    coeffs: tuple[Fraction, ...]

    # --- constructors -------------------------------------------------

    @staticmethod
    def zero() -> "Cyclo":
        return Cyclo(1, ())

    @staticmethod
    def one() -> "Cyclo":
        return Cyclo.rational(1)

    @staticmethod
    def rational(q) -> "Cyclo":
        q = Fraction(q)
        return Cyclo(1, (q,) if q else ())

    @staticmethod
    def root(n: int, k: int, coeff=1) -> "Cyclo":
        """coeff * zeta_n^k, normalized."""
        coeff = Fraction(coeff)
        if coeff == 0:
            return Cyclo.zero()
        m, j, sign = _normalize_root(n, k)
        if m == 1:
            return Cyclo.rational(sign * coeff)
        poly = [Fraction(0)] * m
        poly[j] = sign * coeff
        return Cyclo(m, _reduce_mod_phi(poly, m))

    @staticmethod
    def from_turns(turns: Fraction, coeff=1) -> "Cyclo":
        """coeff * exp(2*pi*i*turns) for rational turns."""
        turns = Fraction(turns)
        return Cyclo.root(turns.denominator, turns.numerator, coeff)

    @staticmethod
    def from_pairs(n: int, pairs: Iterable[tuple[int, Fraction]]) -> "Cyclo":
        """Sum of coeff * zeta_n^k over (k, coeff) pairs."""
        poly = [Fraction(0)] * max(n, 1)
        for k, c in pairs:
            poly[k % n] += Fraction(c)
        return Cyclo(n, _reduce_mod_phi(poly, n))._minimized()

    # --- canonicalization ---------------------------------------------

    def _minimized(self) -> "Cyclo":
        if not self.coeffs:
            return Cyclo(1, ())
        if len(self.coeffs) == 1:
            return Cyclo(1, self.coeffs)
        rm = self._as_root_multiple_raw()
        if rm is not None:
            q, k = rm
            return Cyclo.root(self.order, k, q)
        for m in _divisors(self.order)[:-1]:
            if m % 4 == 2:
                continue
            sol = _descend(self.order, m, self.coeffs)
            if sol is not None:
                return Cyclo(m, sol)
        return self

    def _as_root_multiple_raw(self):
        # Detect coeffs == q * (canonical form of zeta_order^k).
        forms = _root_forms(self.order)
        mine = self.coeffs
        lead = next((c for c in mine if c != 0), None)
        if lead is None:
            return Fraction(0), 0
        for k, form in enumerate(forms):
            if len(form) != len(mine):
                continue
            flead = next((c for c in form if c != 0), None)
            q = lead / flead
            if all(q * f == c for f, c in zip(form, mine)):
                return q, k
        return None

    # --- ring operations ------------------------------------------------

    def _lift(self, n: int) -> tuple[Fraction, ...]:
        # Coefficients of self as a length-n polynomial in zeta_n.
        step = n // self.order
        poly = [Fraction(0)] * n
        for i, c in enumerate(self.coeffs):
            poly[i * step] = c
        return _reduce_mod_phi(poly, n)

    def __add__(self, other) -> "Cyclo":
        other = _coerce(other)
        n = _lcm(self.order, other.order)
        a = list(self._lift(n)) if n != self.order else list(self.coeffs)
        b = other._lift(n) if n != other.order else other.coeffs
        out = [Fraction(0)] * max(len(a), len(b))
        for i, c in enumerate(a):
            out[i] += c
        for i, c in enumerate(b):
            out[i] += c
        while out and out[-1] == 0:
            out.pop()
        return Cyclo(n, tuple(out))._minimized()

    __radd__ = __add__

    def __neg__(self) -> "Cyclo":
        return Cyclo(self.order, tuple(-c for c in self.coeffs))

    def __sub__(self, other) -> "Cyclo":
        return self + (-_coerce(other))

    def __rsub__(self, other) -> "Cyclo":
        return _coerce(other) + (-self)

    def __mul__(self, other) -> "Cyclo":
        if isinstance(other, (int, Fraction)):
            q = Fraction(other)
            if q == 0:
                return Cyclo.zero()
            return Cyclo(self.order, tuple(c * q for c in self.coeffs))
        other = _coerce(other)
        n = _lcm(self.order, other.order)
        a = self._lift(n)
        b = other._lift(n)
        prod = [Fraction(0)] * (len(a) + len(b) - 1 if a and b else 1)
        for i, ca in enumerate(a):
            if ca == 0:
                continue
            for j, cb in enumerate(b):
                if cb:
                    prod[i + j] += ca * cb
        return Cyclo(n, _reduce_mod_phi(prod, n))._minimized()

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Cyclo":
        if isinstance(other, (int, Fraction)):
            return self * (Fraction(1) / Fraction(other))
        raise TypeError("division only by rational scalars")

    def conjugate(self) -> "Cyclo":
        n = self.order
        poly = [Fraction(0)] * n
        lifted = self._lift(n) if n > 1 else self.coeffs
        for i, c in enumerate(lifted):
            poly[(-i) % n] += c
        return Cyclo(n, _reduce_mod_phi(poly, n))._minimized()

    # --- predicates and export -------------------------------------------

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_rational(self) -> bool:
        return len(self.coeffs) <= 1

    def rational_value(self) -> Fraction:
        if not self.is_rational():
            raise ValueError("not rational")
        return self.coeffs[0] if self.coeffs else Fraction(0)

    def as_root_multiple(self):
        """(coeff, exponent, order) when self == coeff * zeta_order^exponent."""
        if not self.coeffs:
            return Fraction(0), 0, 1
        if len(self.coeffs) == 1:
            q = self.coeffs[0]
            return (q, 0, 1) if q > 0 else (q, 0, 1)
        rm = self._as_root_multiple_raw()
        if rm is None:
            return None
        q, k = rm
        return q, k, self.order

    def as_turns(self):
        """Turns t with self == exp(2*pi*i*t), or None if not a root of unity."""
        rm = self.as_root_multiple()
        if rm is None:
            return None
        q, k, n = rm
        if q == 1:
            return Fraction(k, n) % 1
        if q == -1:
            return (Fraction(k, n) + Fraction(1, 2)) % 1
        return None

    def export_terms(self) -> list[tuple[int, int, int]]:
        """Canonical [(num, den, exponent)] over the power basis of zeta_order."""
        return [(c.numerator, c.denominator, i) for i, c in enumerate(self.coeffs) if c]

    def to_complex(self) -> complex:
        z = cmath.exp(2j * cmath.pi / self.order)
        acc = 0j
        for i, c in enumerate(self.coeffs):
            acc += float(c) * z**i
        return acc

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Cyclo.rational(other)
        if not isinstance(other, Cyclo):
            return NotImplemented
        return self.order == other.order and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.order, self.coeffs))

    def __repr__(self) -> str:
        if self.is_zero():
            return "Cyclo(0)"
        terms = []
        for i, c in enumerate(self.coeffs):
            if c == 0:
                continue
            if i == 0:
                terms.append(str(c))
            else:
                terms.append(f"{c}*w{self.order}^{i}")
        return "Cyclo(" + " + ".join(terms) + ")"


def _coerce(v) -> Cyclo:
    if isinstance(v, Cyclo):
        return v
    if isinstance(v, (int, Fraction)):
        return Cyclo.rational(v)
    raise TypeError(f"cannot coerce {type(v)!r} to Cyclo")


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


@lru_cache(maxsize=None)
def _descend_matrix(n: int, m: int):
    # Columns: canonical Q(zeta_n) coordinates of zeta_m^j, j < deg Phi_m.
    deg_m = len(cyclotomic_polynomial(m)) - 1
    deg_n = len(cyclotomic_polynomial(n)) - 1
    cols = []
    step = n // m
    for j in range(deg_m):
        poly = [Fraction(0)] * n
        poly[(j * step) % n] = Fraction(1)
        form = _reduce_mod_phi(poly, n)
        cols.append(tuple(form) + (Fraction(0),) * (deg_n - len(form)))
    return cols, deg_n


def _descend(n: int, m: int, coeffs: tuple[Fraction, ...]):
    """Solve self = sum c_j zeta_m^j if possible; return canonical coeffs in
    Q(zeta_m) or None."""
    cols, deg_n = _descend_matrix(n, m)
    target = list(coeffs) + [Fraction(0)] * (deg_n - len(coeffs))
    # Gaussian elimination on the (deg_n x len(cols)) system.
    rows = [list(col) for col in cols]  # rows[j][i]: coordinate i of basis j
    ncols = len(rows)
    aug = [[rows[j][i] for j in range(ncols)] + [target[i]] for i in range(deg_n)]
    piv_cols = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, deg_n) if aug[i][c] != 0), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        inv = 1 / aug[r][c]
        aug[r] = [v * inv for v in aug[r]]
        for i in range(deg_n):
            if i != r and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [v - f * w for v, w in zip(aug[i], aug[r])]
        piv_cols.append(c)
        r += 1
        if r == deg_n:
            break
    # Consistency: rows beyond rank must have zero RHS.
    for i in range(r, deg_n):
        if aug[i][ncols] != 0:
            return None
    sol = [Fraction(0)] * ncols
    for i, c in enumerate(piv_cols):
        sol[c] = aug[i][ncols]
    out = list(sol)
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


def cyclo_sum(values: Iterator["Cyclo"]) -> Cyclo:
    acc = Cyclo.zero()
    for v in values:
        acc = acc + v
    return acc
