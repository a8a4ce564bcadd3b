"""Annulus logical algebras for stabilizer models.

Commutant groups on a region, the null subgroup of term products landing on
the annulus, the abelian quotient with a phase-coherent operator section,
characters and fundamental projectors, the vacuum character, and thickness
stability.  All arithmetic is exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Iterable, Optional, Sequence

import numpy as np

from .cyclo import Cyclo
from .lattice import AnnulusSpec
from .ringlinalg import (
    AbelianGroupStructure,
    SpanSolver,
    kernel_mod,
    quotient_structure,
)
from .weyl import WeylOp, WeylSum


class NonCommutativeQuotient(ValueError):
    """Quotient classes with nonvanishing pairing: outside abelian scope."""


class PhaseIncoherence(ValueError):
    """No root-of-unity rescale makes the quotient section exact."""


class NoVacuum(ValueError):
    pass


class MultipleVacua(ValueError):
    pass


# ---------------------------------------------------------------------------
# Exponent-vector encoding: [x_0, z_0, x_1, z_1, ...] over sorted region labels
# ---------------------------------------------------------------------------


def _sorted_labels(system, region: Iterable) -> list:
    return sorted(region, key=lambda l: system.index[l])


def _coord_moduli(system, labels: Sequence) -> list[int]:
    out = []
    for l in labels:
        d = int(system.dims[system.index[l]])
        out.extend((d, d))
    return out


def _op_vector(op: WeylOp, labels: Sequence) -> list[int]:
    idx = op.system.index
    vec = []
    for l in labels:
        i = idx[l]
        vec.extend((int(op.x[i]), int(op.z[i])))
    return vec


def _op_from_vector(system, labels: Sequence, vec: Sequence[int]) -> WeylOp:
    assign = {}
    for k, l in enumerate(labels):
        ex, ez = int(vec[2 * k]), int(vec[2 * k + 1])
        if ex or ez:
            assign[l] = (ex, ez)
    return WeylOp.from_sites(system, assign)


def _power_product(ops: Sequence[WeylOp], coeffs: Sequence[int]) -> WeylOp:
    """The literal operator product prod_i ops[i]**coeffs[i] (exact phases)."""
    if not ops:
        raise ValueError("empty product")
    out = WeylOp.identity(ops[0].system)
    for g, c in zip(ops, coeffs):
        c = int(c)
        if c:
            out = out * g**c
    return out


# ---------------------------------------------------------------------------
# Commutant groups
# ---------------------------------------------------------------------------


@dataclass
class CommutantGroup:
    """All Weyl operators on a region commuting with every model term,
    given by an independent generating set (phases aside)."""

    model: object
    region: tuple
    generators: list[WeylOp]
    moduli: list[int] = field(repr=False)
    _span: Optional[SpanSolver] = field(default=None, repr=False)

    @property
    def lcm_modulus(self) -> int:
        M = 1
        for m in self.moduli:
            M = M * m // gcd(M, m)
        return M

    def _solver(self) -> SpanSolver:
        if self._span is None:
            M = self.lcm_modulus
            scaled = [
                [v * (M // m) % M for v, m in zip(_op_vector(g, self.region), self.moduli)]
                for g in self.generators
            ]
            self._span = SpanSolver(scaled, len(self.moduli), M)
        return self._span

    def contains(self, op: WeylOp) -> bool:
        """Exponent-level membership (phases ignored)."""
        if not set(op.support) <= set(self.region):
            return False
        M = self.lcm_modulus
        target = [
            v * (M // m) % M for v, m in zip(_op_vector(op, self.region), self.moduli)
        ]
        if not self.generators:
            return not any(target)
        return self._solver().contains(target)


def commutant_on_region(model, region: Iterable) -> CommutantGroup:
    """Complete generating set of Weyl operators supported on the region that
    commute with every Hamiltonian term (kernel of the symplectic pairing)."""
    system = model.system
    labels = _sorted_labels(system, region)
    if not labels:
        raise ValueError("region must be nonempty")
    moduli = _coord_moduli(system, labels)
    M = 1
    for m in moduli:
        M = M * m // gcd(M, m)
    region_set = set(labels)
    rows = []
    for term in model.terms:
        g = term.generator
        if not (set(g.support) & region_set):
            continue
        row = []
        for l in labels:
            i = system.index[l]
            d = int(system.dims[i])
            s = M // d
            row.append((-int(g.z[i])) * s % M)
            row.append(int(g.x[i]) * s % M)
        rows.append(row)
    if not rows:
        gens = []
        for k, m in enumerate(moduli):
            vec = [0] * len(moduli)
            vec[k] = 1
            gens.append(tuple(vec))
    else:
        gens = kernel_mod(rows, moduli)
    ops = [_op_from_vector(system, labels, v) for v in gens]
    return CommutantGroup(model, tuple(labels), ops, moduli)


# ---------------------------------------------------------------------------
# Null subgroup: term products landing on the inner region
# ---------------------------------------------------------------------------


def null_generators(model, inner: Iterable, outer: Iterable) -> list[WeylOp]:
    """Generators of the subgroup of products of term generators supported on
    `outer` whose total support lands inside `inner` (exact phases kept)."""
    system = model.system
    inner_set = set(inner)
    outer_set = set(outer)
    if not inner_set <= outer_set:
        raise ValueError("inner region must lie inside outer region")
    terms = [
        t.generator for t in model.terms if set(t.generator.support) <= outer_set
    ]
    if not terms:
        return []
    strip = _sorted_labels(system, outer_set - inner_set)
    N = 1
    for l in outer_set:
        d = int(system.dims[system.index[l]])
        N = N * d // gcd(N, d)
    if not strip:
        coeff_gens = [tuple(1 if i == j else 0 for i in range(len(terms)))
                      for j in range(len(terms))]
    else:
        rows = []
        for l in strip:
            i = system.index[l]
            d = int(system.dims[i])
            s = N // d
            rows.append([int(g.x[i]) * s % N for g in terms])
            rows.append([int(g.z[i]) * s % N for g in terms])
        coeff_gens = kernel_mod(rows, N)
    out = []
    for c in coeff_gens:
        op = _power_product(terms, c)
        if not set(op.support) <= inner_set:
            raise AssertionError("null generator leaks outside the inner region")
        if op.x.any() or op.z.any():
            out.append(op)
    return out


# ---------------------------------------------------------------------------
# Logical algebra
# ---------------------------------------------------------------------------


@dataclass
class LogicalAlgebra:
    """Quotient of the annulus commutant by the null subgroup, with a
    phase-coherent operator section, characters, and fundamental projectors."""

    model: object
    spec: AnnulusSpec
    region: tuple
    quotient: AbelianGroupStructure
    representatives: list[WeylOp]
    null_gens: list[WeylOp]
    moduli: list[int] = field(repr=False)
    vacuum: Optional[int] = None
    _section_cache: dict = field(default_factory=dict, repr=False)
    _class_solver: Optional[SpanSolver] = field(default=None, repr=False)
    _null_solver: Optional[SpanSolver] = field(default=None, repr=False)
    _projectors: Optional[list[WeylSum]] = field(default=None, repr=False)

    # -- structure -----------------------------------------------------------

    @property
    def invariant_factors(self) -> tuple[int, ...]:
        return self.quotient.invariant_factors

    @property
    def order(self) -> int:
        return self.quotient.order

    @property
    def characters(self) -> list[tuple[int, ...]]:
        """Character exponent tuples, lexicographic."""
        return self.quotient.elements()

    def character_value(self, chi: tuple[int, ...], e: tuple[int, ...]) -> Cyclo:
        turns = Fraction(0)
        for c, k, f in zip(chi, e, self.invariant_factors):
            turns += Fraction(int(c) * int(k), f)
        return Cyclo.from_turns(turns)

    # -- section -------------------------------------------------------------

    def section(self, e: Sequence[int]) -> WeylOp:
        """U(e) = prod_i rep_i^{e_i} with e_i reduced mod the factors."""
        key = tuple(
            int(k) % f for k, f in zip(e, self.invariant_factors)
        )
        op = self._section_cache.get(key)
        if op is None:
            if any(key):
                op = _power_product(self.representatives, key)
            else:
                op = WeylOp.identity(self.model.system)
            self._section_cache[key] = op
        return op

    @property
    def lcm_modulus(self) -> int:
        M = 1
        for m in self.moduli:
            M = M * m // gcd(M, m)
        return M

    def _scaled(self, vec: Sequence[int]) -> list[int]:
        M = self.lcm_modulus
        return [v * (M // m) % M for v, m in zip(vec, self.moduli)]

    def _get_class_solver(self) -> SpanSolver:
        if self._class_solver is None:
            cols = [
                self._scaled(_op_vector(r, self.region)) for r in self.representatives
            ] + [self._scaled(_op_vector(ng, self.region)) for ng in self.null_gens]
            self._class_solver = SpanSolver(cols, len(self.moduli), self.lcm_modulus)
        return self._class_solver

    def _get_null_solver(self) -> SpanSolver:
        if self._null_solver is None:
            cols = [self._scaled(_op_vector(ng, self.region)) for ng in self.null_gens]
            self._null_solver = SpanSolver(cols, len(self.moduli), self.lcm_modulus)
        return self._null_solver

    def class_coordinates(self, op: WeylOp) -> tuple[int, ...]:
        """Quotient coordinates of a commutant operator's class."""
        if not set(op.support) <= set(self.region):
            raise ValueError("operator leaves the annulus")
        target = self._scaled(_op_vector(op, self.region))
        coeffs = self._get_class_solver().solve_coeffs(target)
        if coeffs is None:
            raise ValueError("operator not in the commutant span")
        k = len(self.representatives)
        return tuple(
            int(c) % f for c, f in zip(coeffs[:k], self.invariant_factors)
        )

    def null_product_matching(self, op: WeylOp) -> WeylOp:
        """The literal null product with the same exponents as op."""
        target = self._scaled(_op_vector(op, self.region))
        if not self.null_gens:
            if any(target):
                raise ValueError("operator is not null")
            return WeylOp.identity(self.model.system)
        coeffs = self._get_null_solver().solve_coeffs(target)
        if coeffs is None:
            raise ValueError("operator is not null")
        return _power_product(self.null_gens, coeffs)

    def reduce_mod_null(self, s: WeylSum | WeylOp) -> WeylSum:
        """Canonical form modulo the null ideal: every term is rewritten as a
        scalar times a section operator (null factors replaced by 1)."""
        if isinstance(s, WeylOp):
            s = WeylSum.from_op(s)
        out = WeylSum(self.model.system)
        for coeff, op in s.terms():
            e = self.class_coordinates(op)
            u = self.section(e)
            residual = op * u.inverse()
            n = self.null_product_matching(residual)
            gamma = residual.phase - n.phase
            out.add_term(coeff * Cyclo.from_turns(gamma), u)
        return out

    # -- projectors ----------------------------------------------------------

    def projectors(self) -> list[WeylSum]:
        """Fundamental projectors, one per character (lexicographic order)."""
        if self._projectors is None:
            elements = self.quotient.elements()
            norm = Cyclo.rational(Fraction(1, self.order))
            out = []
            for chi in self.characters:
                s = WeylSum(self.model.system)
                for e in elements:
                    coeff = norm * self.character_value(chi, e).conjugate()
                    s.add_term(coeff, self.section(e))
                out.append(s)
            self._projectors = out
        return self._projectors

    def projector(self, index: int) -> WeylSum:
        return self.projectors()[index]

    def to_json(self) -> dict:
        return {
            "invariant_factors": list(self.invariant_factors),
            "order": self.order,
            "annulus": {
                "center": list(self.spec.center),
                "r_ann": self.spec.r_ann,
                "t": self.spec.t,
            },
            "representatives": [self.model._op_to_json(r) for r in self.representatives],
            "null_generator_count": len(self.null_gens),
            "characters": [list(c) for c in self.characters],
            "vacuum": self.vacuum,
        }


def logical_quotient(
    model, spec: AnnulusSpec, fatten: Optional[int] = None
) -> LogicalAlgebra:
    """Logical algebra of the thickness-t annulus: commutant modulo the null
    subgroup of (t + w)-annulus term products, with exact section.

    `fatten` overrides the default outer margin w (the interaction range).
    It must stay below r_ann - t or the outer band degenerates into a disk,
    which would wrongly cancel the winding classes; margins smaller than w
    can only shrink the certified null subgroup, never corrupt it."""
    system = model.system
    w = model.interaction_range if fatten is None else int(fatten)
    if spec.t + w >= spec.r_ann:
        raise ValueError(
            f"outer margin {w} fills the annulus hole (t={spec.t}, "
            f"r_ann={spec.r_ann}); pass fatten < r_ann - t"
        )
    inner = model.annulus_labels(spec)
    outer_spec = AnnulusSpec(spec.center, spec.r_ann, spec.t + w)
    outer = model.annulus_labels(outer_spec)
    comm = commutant_on_region(model, inner)
    nulls = null_generators(model, inner, outer)
    labels = list(comm.region)
    moduli = comm.moduli
    quotient = quotient_structure(
        [_op_vector(g, labels) for g in comm.generators],
        [_op_vector(n, labels) for n in nulls],
        moduli,
    )
    algebra = LogicalAlgebra(
        model=model,
        spec=spec,
        region=tuple(labels),
        quotient=quotient,
        representatives=[],
        null_gens=nulls,
        moduli=moduli,
    )
    # Pairing of quotient classes must vanish (well-defined: null generators
    # commute exactly with every commutant element).
    raw = [_op_from_vector(system, labels, v) for v in quotient.generator_map]
    for i, a in enumerate(raw):
        for b in raw[i + 1 :]:
            c = a.commutation_exponent(b)
            if c:
                raise NonCommutativeQuotient(
                    f"quotient classes fail to commute (exponent {c})"
                )
    # Phase coherence: rescale each representative so rep^f equals the literal
    # null product with the same exponents.
    reps = []
    for op, f in zip(raw, quotient.invariant_factors):
        power = op**f
        try:
            n = algebra.null_product_matching(power)
        except ValueError as exc:
            raise PhaseIncoherence(str(exc)) from exc
        gamma = power.phase - n.phase
        reps.append(op.with_phase(op.phase - gamma / f))
    algebra.representatives = reps
    algebra._section_cache.clear()
    algebra._class_solver = None
    return algebra


# ---------------------------------------------------------------------------
# Vacuum
# ---------------------------------------------------------------------------


def vacuum_label(state, algebra: LogicalAlgebra) -> int:
    """Index of the unique character with <psi| pi_chi |psi> = 1."""
    from .model import expectation

    turns = []
    for rep, f in zip(algebra.representatives, algebra.invariant_factors):
        val = expectation(state, rep)
        t = val.as_turns()
        if t is None:
            raise NoVacuum(
                "representative has vanishing expectation; state does not fix "
                "a unique character"
            )
        c = t * f
        if c.denominator != 1:
            raise NoVacuum("representative expectation incompatible with order")
        turns.append(int(c) % f)
    chi = tuple(turns)
    try:
        idx = algebra.characters.index(chi)
    except ValueError as exc:  # pragma: no cover - structurally impossible
        raise NoVacuum("stabilizer phases do not form a character") from exc
    algebra.vacuum = idx
    return idx


# ---------------------------------------------------------------------------
# Stability across thicknesses
# ---------------------------------------------------------------------------


def check_stability(model, spec: AnnulusSpec, t1: int, t2: int) -> dict:
    """Does thickening t1 -> t2 induce an isomorphism of logical algebras?"""
    if not 0 < t1 <= t2:
        raise ValueError("need 0 < t1 <= t2")
    a1 = logical_quotient(model, AnnulusSpec(spec.center, spec.r_ann, t1))
    a2 = logical_quotient(model, AnnulusSpec(spec.center, spec.r_ann, t2))
    images = [a2.class_coordinates(rep) for rep in a1.representatives]
    f2 = a2.invariant_factors
    if images and any(images):
        img_struct = quotient_structure(images, [], list(f2) or [1])
        image_order = img_struct.order
    else:
        image_order = 1
    injective = image_order == a1.order
    surjective = image_order == a2.order
    report = {
        "t1": t1,
        "t2": t2,
        "order_t1": a1.order,
        "order_t2": a2.order,
        "invariant_factors_t1": list(a1.invariant_factors),
        "invariant_factors_t2": list(a2.invariant_factors),
        "image_order": image_order,
        "injective": injective,
        "surjective": surjective,
        "isomorphism": injective and surjective,
    }
    if not injective:
        for e in a1.quotient.elements():
            if not any(e):
                continue
            img = tuple(
                sum(int(ei) * int(im[j]) for ei, im in zip(e, images)) % f
                for j, f in enumerate(f2)
            ) if f2 else ()
            if not any(img):
                report["kernel_witness"] = list(e)
                break
    if not surjective and f2:
        M = 1
        for f in f2:
            M = M * f // gcd(M, f)
        scaled = [
            [int(v) * (M // f) % M for v, f in zip(im, f2)] for im in images
        ]
        span = SpanSolver(scaled, len(f2), M)
        for chi in a2.quotient.elements():
            tgt = [int(v) * (M // f) % M for v, f in zip(chi, f2)]
            if any(tgt) and not span.contains(tgt):
                report["missing_class_witness"] = list(chi)
                break
    return report
