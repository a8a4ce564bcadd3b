"""Qudit Weyl operators and exact finite sums of them.

Site s carries a Z_{d_s} qudit (mixed dimensions allowed).  The operator
basis is phase * prod_s X_s^{x_s} Z_s^{z_s}, written with X before Z at
every site; Z X = omega_d X Z with omega_d = exp(2*pi*i/d).  Phases are
rational turns, so every operator phase is an exact root of unity and sums
of operators carry exact cyclotomic coefficients.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Iterator, Mapping, Optional, Sequence

import numpy as np

from .cyclo import Cyclo


class SiteSystem:
    """An ordered collection of qudit sites with per-site dimensions."""

    def __init__(self, sites: Sequence[tuple[object, int]]):
        labels = tuple(lbl for lbl, _ in sites)
        dims = tuple(int(d) for _, d in sites)
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate site labels")
        if any(d < 2 for d in dims):
            raise ValueError("site dimensions must be >= 2")
        self.labels = labels
        self.dims = np.array(dims, dtype=np.int64)
        self.index = {lbl: i for i, lbl in enumerate(labels)}
        self.den = lcm(*dims) if dims else 1
        self.den_over = self.den // self.dims
        self.nsites = len(labels)

    @staticmethod
    def uniform(labels: Sequence[object], d: int) -> "SiteSystem":
        return SiteSystem([(lbl, d) for lbl in labels])

    def dim_of(self, label) -> int:
        return int(self.dims[self.index[label]])

    def indices_of(self, labels: Iterable[object]) -> np.ndarray:
        return np.array(sorted(self.index[l] for l in labels), dtype=np.int64)

    def __eq__(self, other):
        return (
            isinstance(other, SiteSystem)
            and self.labels == other.labels
            and self.dims.tolist() == other.dims.tolist()
        )

    def __hash__(self):
        return hash((self.labels, tuple(self.dims.tolist())))

    def __repr__(self):
        return f"SiteSystem({self.nsites} sites, den={self.den})"


def _norm_turns(t: Fraction) -> Fraction:
    return t - (t.numerator // t.denominator)


class WeylOp:
    """phase * prod_s X_s^{x_s} Z_s^{z_s} on a fixed SiteSystem."""

    __slots__ = ("system", "x", "z", "phase")

    def __init__(self, system: SiteSystem, x: np.ndarray, z: np.ndarray,
                 phase: Fraction = Fraction(0)):
        self.system = system
        self.x = np.asarray(x, dtype=np.int64) % system.dims
        self.z = np.asarray(z, dtype=np.int64) % system.dims
        self.phase = _norm_turns(Fraction(phase))

    @staticmethod
    def identity(system: SiteSystem) -> "WeylOp":
        n = system.nsites
        return WeylOp(system, np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64))

    @staticmethod
    def from_sites(system: SiteSystem, assign: Mapping[object, tuple[int, int]],
                   phase: Fraction = Fraction(0)) -> "WeylOp":
        x = np.zeros(system.nsites, dtype=np.int64)
        z = np.zeros(system.nsites, dtype=np.int64)
        for lbl, (ex, ez) in assign.items():
            i = system.index[lbl]
            x[i], z[i] = ex, ez
        return WeylOp(system, x, z, phase)

    # -- algebra ----------------------------------------------------------

    def __mul__(self, other: "WeylOp") -> "WeylOp":
        if self.system is not other.system and self.system != other.system:
            raise ValueError("operators live on different systems")
        sysm = self.system
        cross = int(np.dot(self.z * other.x, sysm.den_over))
        phase = self.phase + other.phase + Fraction(cross, sysm.den)
        return WeylOp(sysm, self.x + other.x, self.z + other.z, phase)

    def inverse(self) -> "WeylOp":
        sysm = self.system
        cross = int(np.dot(self.z * self.x, sysm.den_over))
        return WeylOp(sysm, -self.x, -self.z, -self.phase + Fraction(cross, sysm.den))

    def dagger(self) -> "WeylOp":
        # Weyl operators are unitary, so the adjoint equals the inverse.
        return self.inverse()

    def __pow__(self, k: int) -> "WeylOp":
        if k < 0:
            return self.inverse() ** (-k)
        sysm = self.system
        cross = int(np.dot(self.z * self.x, sysm.den_over))
        phase = k * self.phase + Fraction(k * (k - 1) // 2 * cross, sysm.den)
        return WeylOp(sysm, k * self.x, k * self.z, phase)

    def commutation_exponent(self, other: "WeylOp") -> int:
        """c with self * other == omega_den^c * other * self."""
        sysm = self.system
        val = int(np.dot(self.z * other.x - other.z * self.x, sysm.den_over))
        return val % sysm.den

    def commutes(self, other: "WeylOp") -> bool:
        return self.commutation_exponent(other) == 0

    # -- structure --------------------------------------------------------

    @property
    def support(self) -> tuple:
        mask = (self.x != 0) | (self.z != 0)
        return tuple(self.system.labels[i] for i in np.nonzero(mask)[0])

    def restricted(self, labels: Iterable[object], keep_phase: bool = True) -> "WeylOp":
        """Tensor factor on `labels` (exponents elsewhere dropped)."""
        keep = np.zeros(self.system.nsites, dtype=bool)
        for lbl in labels:
            keep[self.system.index[lbl]] = True
        return WeylOp(
            self.system,
            np.where(keep, self.x, 0),
            np.where(keep, self.z, 0),
            self.phase if keep_phase else Fraction(0),
        )

    def site_exponents(self, label) -> tuple[int, int]:
        i = self.system.index[label]
        return int(self.x[i]), int(self.z[i])

    def with_phase(self, phase: Fraction) -> "WeylOp":
        return WeylOp(self.system, self.x, self.z, phase)

    def is_scalar(self) -> bool:
        return not (self.x.any() or self.z.any())

    def is_identity(self) -> bool:
        return self.is_scalar() and self.phase == 0

    def phase_cyclo(self) -> Cyclo:
        return Cyclo.from_turns(self.phase)

    def order(self) -> int:
        """Smallest k >= 1 with self**k equal to the identity."""
        dims = self.system.dims
        g = np.gcd(np.gcd(self.x, self.z), dims)
        n = int(np.lcm.reduce(dims // g)) if len(dims) else 1
        residual = (self ** n).phase
        return n * residual.denominator

    def key(self) -> tuple[bytes, bytes]:
        return (self.x.tobytes(), self.z.tobytes())

    def __eq__(self, other):
        return (
            isinstance(other, WeylOp)
            and self.system == other.system
            and self.phase == other.phase
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
        )

    def __hash__(self):
        return hash((self.phase, self.key()))

    def __repr__(self):
        parts = []
        for lbl in self.support:
            ex, ez = self.site_exponents(lbl)
            frag = ""
            if ex:
                frag += f"X{ex}"
            if ez:
                frag += f"Z{ez}"
            parts.append(f"{frag}@{lbl}")
        body = " ".join(parts) if parts else "I"
        return f"WeylOp({self.phase} turns; {body})"


class WeylSum:
    """Finite sum of Weyl operators with exact cyclotomic coefficients.

    Terms are kept canonical: every operator phase is folded into its
    coefficient, so keys are bare exponent patterns.
    """

    def __init__(self, system: SiteSystem):
        self.system = system
        self._terms: dict[tuple[bytes, bytes], tuple[Cyclo, np.ndarray, np.ndarray]] = {}

    @staticmethod
    def from_ops(system: SiteSystem,
                 pairs: Iterable[tuple[Cyclo | Fraction | int, WeylOp]]) -> "WeylSum":
        out = WeylSum(system)
        for coeff, op in pairs:
            out.add_term(coeff, op)
        return out

    @staticmethod
    def from_op(op: WeylOp) -> "WeylSum":
        return WeylSum.from_ops(op.system, [(1, op)])

    def add_term(self, coeff, op: WeylOp) -> None:
        c = coeff if isinstance(coeff, Cyclo) else Cyclo.rational(Fraction(coeff))
        c = c * op.phase_cyclo()
        if c.is_zero():
            return
        k = op.key()
        if k in self._terms:
            old, x, z = self._terms[k]
            tot = old + c
            if tot.is_zero():
                del self._terms[k]
            else:
                self._terms[k] = (tot, x, z)
        else:
            self._terms[k] = (c, op.x.copy(), op.z.copy())

    def terms(self) -> Iterator[tuple[Cyclo, WeylOp]]:
        for coeff, x, z in self._terms.values():
            yield coeff, WeylOp(self.system, x, z)

    def num_terms(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, op: WeylOp) -> Cyclo:
        """Coefficient of the exponent pattern of op (op phase divided out)."""
        ent = self._terms.get(op.key())
        if ent is None:
            return Cyclo.zero()
        return ent[0] * Cyclo.from_turns(-op.phase)

    def __add__(self, other: "WeylSum") -> "WeylSum":
        out = WeylSum(self.system)
        for coeff, x, z in self._terms.values():
            out.add_term(coeff, WeylOp(self.system, x, z))
        for coeff, x, z in other._terms.values():
            out.add_term(coeff, WeylOp(self.system, x, z))
        return out

    def __sub__(self, other: "WeylSum") -> "WeylSum":
        return self + other.scaled(-1)

    def scaled(self, coeff) -> "WeylSum":
        c = coeff if isinstance(coeff, Cyclo) else Cyclo.rational(Fraction(coeff))
        out = WeylSum(self.system)
        for old, x, z in self._terms.values():
            out.add_term(old * c, WeylOp(self.system, x, z))
        return out

    def __mul__(self, other: "WeylSum | WeylOp") -> "WeylSum":
        if isinstance(other, WeylOp):
            other = WeylSum.from_op(other)
        out = WeylSum(self.system)
        for c1, op1 in self.terms():
            for c2, op2 in other.terms():
                out.add_term(c1 * c2, op1 * op2)
        return out

    def __rmul__(self, other: WeylOp) -> "WeylSum":
        return WeylSum.from_op(other) * self

    def dagger(self) -> "WeylSum":
        out = WeylSum(self.system)
        for coeff, x, z in self._terms.values():
            out.add_term(coeff.conjugate(), WeylOp(self.system, x, z).dagger())
        return out

    def support(self) -> tuple:
        mask = np.zeros(self.system.nsites, dtype=bool)
        for _, x, z in self._terms.values():
            mask |= (x != 0) | (z != 0)
        return tuple(self.system.labels[i] for i in np.nonzero(mask)[0])

    def __eq__(self, other):
        if not isinstance(other, WeylSum) or self.system != other.system:
            return False
        return (self - other).is_zero()

    def __repr__(self):
        return f"WeylSum({self.num_terms()} terms)"


def group_power_products(gens: Sequence[WeylOp], coeffs: Sequence[int]) -> WeylOp:
    """prod_i gens[i]**coeffs[i] in index order (exact phases)."""
    if not gens:
        raise ValueError("empty generator list")
    out = WeylOp.identity(gens[0].system)
    for g, c in zip(gens, coeffs):
        c = int(c)
        if c:
            out = out * (g ** c)
    return out
