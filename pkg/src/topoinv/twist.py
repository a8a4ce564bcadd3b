"""Twist product and pairing across a separating cut, assembly of the S-tilde
matrix from fundamental projectors, Verlinde fusion coefficients, and blind
reconstruction of the underlying abelian group.

The twist product reverses the operator order on one side of a cut: for Weyl
terms p (left) and q (right), p infty q = omega^c * p * q where c is the
commutation exponent of the two restrictions to the M' side.  All values are
exact cyclotomics; floats appear only in exports.
"""

from __future__ import annotations

import csv
import itertools
import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, isqrt
from typing import Iterable, Optional, Sequence

import numpy as np

from .commutant import LogicalAlgebra, logical_quotient, vacuum_label
from .cyclo import Cyclo
from .lattice import AnnulusSpec
from .model import StabilizerState
from .ringlinalg import HowellSolver, quotient_structure
from .weyl import WeylOp, WeylSum, group_power_products


class NonGroupLikeFusion(ValueError):
    """Fusion coefficients outside {0,1}: the input is not a group-like S̃."""


class GroupReconstructionError(ValueError):
    """The label fusion does not form (or does not determine) an abelian G x G."""


# ---------------------------------------------------------------------------
# Cuts and side assignment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CutAssignment:
    """Explicit M / M' split of the site labels, for geometries without an
    annulus pair (chains, product states, spheres)."""

    m_labels: frozenset

    def side_of_cut(self, label) -> str:
        return "M" if label in self.m_labels else "Mp"


def _side_lookup(pair, positions):
    """label -> 'M' | 'Mp' from whatever geometry the pair carries."""
    if positions is not None and hasattr(pair, "side_of_position"):
        return lambda lbl: pair.side_of_position(positions[lbl])
    return pair.side_of_cut


def _in_annulus(lattice, pos, spec) -> bool:
    lo, hi = 2 * (spec.r_ann - spec.t), 2 * (spec.r_ann + spec.t)
    return lo <= lattice.point_distance(pos, spec.center) <= hi


def _check_annulus_support(op: WeylOp, pair, positions, which: str) -> None:
    lattice = getattr(pair, "lattice", None)
    spec = getattr(pair, which, None)
    if lattice is None or spec is None:
        return
    if positions is None:
        positions = {l: lattice.position(l) for l in op.support}
    for lbl in op.support:
        if not _in_annulus(lattice, positions[lbl], spec):
            raise ValueError(
                f"operator leaves the {which} annulus at site {lbl!r}"
            )


# ---------------------------------------------------------------------------
# Twist product and pairing
# ---------------------------------------------------------------------------


def _as_sum(P) -> WeylSum:
    return WeylSum.from_op(P) if isinstance(P, WeylOp) else P


def twist_op_product(p: WeylOp, q: WeylOp, pair, positions=None) -> WeylOp:
    """p infty q for single Weyl operators: the plain product corrected by the
    reversed order on the M' side of the cut."""
    side = _side_lookup(pair, positions)
    p_mp = p.restricted([l for l in p.support if side(l) == "Mp"], keep_phase=False)
    q_mp = q.restricted([l for l in q.support if side(l) == "Mp"], keep_phase=False)
    c = q_mp.commutation_exponent(p_mp)
    prod = p * q
    return prod.with_phase(prod.phase + Fraction(c, p.system.den))


def twist_product(P, Q, pair, positions=None, enforce_support=True) -> WeylSum:
    """Bilinear extension of the twisted term product.  P must live on the
    left annulus and Q on the right when the pair carries that geometry."""
    P, Q = _as_sum(P), _as_sum(Q)
    out = WeylSum(P.system)
    q_terms = list(Q.terms())
    for cp, p in P.terms():
        if enforce_support:
            _check_annulus_support(p, pair, positions, "left")
        for cq, q in q_terms:
            if enforce_support:
                _check_annulus_support(q, pair, positions, "right")
            out.add_term(cp * cq, twist_op_product(p, q, pair, positions))
    return out


def twist_pairing(state: StabilizerState, P, Q, pair, enforce_support=True) -> Cyclo:
    """<psi| P infty Q |psi> as an exact cyclotomic."""
    prod = twist_product(
        P, Q, pair, positions=state.model.positions, enforce_support=enforce_support
    )
    acc = Cyclo.zero()
    for coeff, op in prod.terms():
        acc = acc + coeff * state.expectation(op)
    return acc


# ---------------------------------------------------------------------------
# Region-restricted expectation engine
# ---------------------------------------------------------------------------


class _RegionSolver:
    """Membership solver over the stabilizer generators supported inside a
    fixed region, reused across many expectation queries.

    Any operator whose scaled exponent pattern lies in the span of the
    region's generators is a stabilizer-group element; its expectation is the
    phase mismatch.  With complete=False a failed regional solve falls back
    to the state's own (escalating) solver, so the restriction is a speedup,
    not a claim.  complete=True asserts the region is cleanable: every group
    element supported inside it is a product of generators supported inside
    it (true for fattened filled disks of the annuli, and trivially when the
    region is the whole system).  Then a failed solve on an operator that
    commutes with every generator certifies expectation zero.
    """

    def __init__(self, state: StabilizerState, region: Iterable, complete: bool = False):
        self.state = state
        self.complete = complete
        sysm = state.model.system
        self.system = sysm
        region_set = set(region)
        self.idx = np.array(
            sorted(sysm.index[l] for l in region_set), dtype=np.int64
        )
        self.outside = np.ones(sysm.nsites, dtype=bool)
        self.outside[self.idx] = False
        self.gens = [
            g
            for g in state.generators
            if g.support and set(g.support) <= region_set
        ]
        n = 2 * len(self.idx)
        if self.gens:
            mat = np.array([self._pattern(g) for g in self.gens]).T
        else:
            mat = np.zeros((n, 0), dtype=np.int64)
        self.solver = HowellSolver(mat, sysm.den)
        state._prepare()

    def _pattern(self, op: WeylOp) -> np.ndarray:
        sysm = self.system
        xs = (op.x * sysm.den_over)[self.idx]
        zs = (op.z * sysm.den_over)[self.idx]
        return np.concatenate([xs, zs]) % sysm.den

    def expectation(self, op: WeylOp) -> Cyclo:
        if (op.x[self.outside].any()) or (op.z[self.outside].any()):
            return self.state.expectation(op)
        if not self.state._commutes_with_all(op):
            return Cyclo.zero()
        coeffs = self.solver.solve(self._pattern(op))
        if coeffs is None:
            if self.complete:
                return Cyclo.zero()
            return self.state.expectation(op)
        nz = [(g, int(c)) for g, c in zip(self.gens, coeffs) if c]
        if nz:
            prod = group_power_products([g for g, _ in nz], [c for _, c in nz])
        else:
            prod = WeylOp.identity(self.system)
        if not (np.array_equal(prod.x, op.x) and np.array_equal(prod.z, op.z)):
            raise AssertionError("regional membership certificate mismatch")
        return Cyclo.from_turns(op.phase - prod.phase)


# ---------------------------------------------------------------------------
# S-tilde
# ---------------------------------------------------------------------------


def _ckey(c: Cyclo):
    return (c.order, tuple(c.export_terms()))


@dataclass
class STilde:
    """Matrix of twist pairings of the fundamental projectors of two annulus
    logical algebras, with exact cyclotomic entries."""

    left_labels: list[tuple[int, ...]]
    right_labels: list[tuple[int, ...]]
    vacuum_left: int
    vacuum_right: int
    entries: list[list[Cyclo]]
    provenance: dict = field(default_factory=dict)

    @property
    def n_left(self) -> int:
        return len(self.left_labels)

    @property
    def n_right(self) -> int:
        return len(self.right_labels)

    def entry(self, i: int, j: int) -> Cyclo:
        return self.entries[i][j]

    def is_square(self) -> bool:
        return self.n_left == self.n_right

    def float_matrix(self) -> np.ndarray:
        return np.array(
            [[c.to_complex() for c in row] for row in self.entries],
            dtype=np.complex128,
        )

    def validate(self) -> None:
        vv = self.entries[self.vacuum_left][self.vacuum_right]
        if not (vv.is_rational() and vv.rational_value() > 0):
            raise ValueError("vacuum-vacuum entry must be a positive rational")
        mods = np.abs(self.float_matrix())
        if mods.max() > 1 + 1e-9:
            raise ValueError("entry modulus exceeds 1")

    def s_matrix(self) -> list[list[Cyclo]]:
        """Derived S view: S = D * S-tilde for abelian inputs, where all
        quantum dimensions are 1 and D = sqrt(order)."""
        if not self.is_square():
            raise ValueError("derived S view requires a square matrix")
        d_tot = isqrt(self.n_left)
        if d_tot * d_tot != self.n_left:
            raise ValueError("order is not a perfect square")
        scale = Cyclo.rational(d_tot)
        return [[scale * c for c in row] for row in self.entries]

    # -- serialization ------------------------------------------------------

    @staticmethod
    def _entry_json(c: Cyclo) -> dict:
        rm = c.as_root_multiple()
        if rm is not None:
            coeff, k, n = rm
            return {
                "coeff": [coeff.numerator, coeff.denominator],
                "root_exponent": k,
                "root_order": n,
            }
        return {
            "order": c.order,
            "terms": [[num, den, e] for num, den, e in c.export_terms()],
        }

    @staticmethod
    def _entry_from_json(obj: dict) -> Cyclo:
        if "coeff" in obj:
            num, den = obj["coeff"]
            return Cyclo.root(
                int(obj["root_order"]), int(obj["root_exponent"]), Fraction(num, den)
            )
        acc = Cyclo.zero()
        for num, den, e in obj["terms"]:
            acc = acc + Cyclo.root(int(obj["order"]), int(e), Fraction(num, den))
        return acc

    def to_json(self) -> dict:
        return {
            "left_labels": [list(l) for l in self.left_labels],
            "right_labels": [list(l) for l in self.right_labels],
            "vacuum_left": self.vacuum_left,
            "vacuum_right": self.vacuum_right,
            "entries": [[self._entry_json(c) for c in row] for row in self.entries],
            "float_entries": [
                [[z.real, z.imag] for z in map(complex, row)]
                for row in self.float_matrix().tolist()
            ],
            "provenance": self.provenance,
        }

    @staticmethod
    def from_json(data: dict) -> "STilde":
        return STilde(
            [tuple(l) for l in data["left_labels"]],
            [tuple(l) for l in data["right_labels"]],
            int(data["vacuum_left"]),
            int(data["vacuum_right"]),
            [[STilde._entry_from_json(o) for o in row] for row in data["entries"]],
            dict(data.get("provenance", {})),
        )

    def to_csv(self, fh) -> None:
        writer = csv.writer(fh)
        writer.writerow([""] + ["|".join(map(str, l)) for l in self.right_labels])
        for lbl, row in zip(self.left_labels, self.entries):
            writer.writerow(
                ["|".join(map(str, lbl))]
                + [f"{c.to_complex():.12g}" for c in row]
            )


def stilde_matrix(
    state: StabilizerState,
    algebra_L: LogicalAlgebra,
    algebra_R: LogicalAlgebra,
    pair,
    verify_representatives: int = 0,
) -> STilde:
    """S-tilde[a, b] = <psi| pi_a^(L) infty pi_b^(R) |psi>, assembled from the
    pairwise section expectations instead of the quadratically larger
    projector products.

    With U_L(e), U_R(f) the section operators, every entry is the double
    character transform of V[e, f] = <U_L(e) infty U_R(f)>; V is computed once
    and each transform is an integer histogram of root exponents.
    """
    model = state.model
    sysm = model.system
    positions = model.positions
    if algebra_L.vacuum is None:
        vacuum_label(state, algebra_L)
    if algebra_R.vacuum is None:
        vacuum_label(state, algebra_R)

    elems_L = algebra_L.quotient.elements()
    elems_R = algebra_R.quotient.elements()
    secs_L = [algebra_L.section(e) for e in elems_L]
    secs_R = [algebra_R.section(e) for e in elems_R]

    side = _side_lookup(pair, positions)
    den = sysm.den

    def mp_part(op: WeylOp) -> WeylOp:
        return op.restricted(
            [l for l in op.support if side(l) == "Mp"], keep_phase=False
        )

    reps_L_mp = [mp_part(r) for r in algebra_L.representatives]
    reps_R_mp = [mp_part(r) for r in algebra_R.representatives]
    corr = np.array(
        [[q.commutation_exponent(p) for p in reps_L_mp] for q in reps_R_mp],
        dtype=np.int64,
    )

    w = model.interaction_range
    centers = [algebra_L.spec.center, algebra_R.spec.center]
    reach = max(
        algebra_L.spec.r_ann + algebra_L.spec.t,
        algebra_R.spec.r_ann + algebra_R.spec.t,
    )
    # The complete-mode solver needs a cleanable region.  Fattened disks stay
    # contractible only while their radius is under half the torus; past that
    # they wrap, so fall back to the whole system (always complete).
    torus_L = getattr(model.geometry, "L", None)
    if torus_L is not None and 2 * (reach + w) >= torus_L:
        region = frozenset(model.positions)
    else:
        region = model.labels_within(centers, 2 * (reach + w))
    solver = _RegionSolver(state, region, complete=True)

    # V[e, f] as turns (None = exactly zero), twist correction included
    nL, nR = len(elems_L), len(elems_R)
    v_turns: list[list[Optional[Fraction]]] = [[None] * nR for _ in range(nL)]
    for ei, e in enumerate(elems_L):
        for fi, f in enumerate(elems_R):
            val = solver.expectation(secs_L[ei] * secs_R[fi])
            t = val.as_turns()
            if t is None and not val.is_zero():
                raise AssertionError("section expectation is not a root of unity")
            if t is not None:
                c = int(np.dot(np.array(f), corr @ np.array(e))) % den
                v_turns[ei][fi] = (t + Fraction(c, den)) % 1

    # character turn tables
    def chi_turns(factors, chis, elems):
        return [
            [
                sum(
                    (Fraction(int(c) * int(k), fct) for c, k, fct in zip(chi, e, factors)),
                    start=Fraction(0),
                )
                % 1
                for e in elems
            ]
            for chi in chis
        ]

    chis_L = algebra_L.characters
    chis_R = algebra_R.characters
    chiT_L = chi_turns(algebra_L.invariant_factors, chis_L, elems_L)
    chiT_R = chi_turns(algebra_R.invariant_factors, chis_R, elems_R)

    # common denominator so sums become integer histograms
    N = 1
    for row in v_turns:
        for t in row:
            if t is not None:
                N = N * t.denominator // gcd(N, t.denominator)
    for table in (chiT_L, chiT_R):
        for row in table:
            for t in row:
                N = N * t.denominator // gcd(N, t.denominator)

    nz = [(ei, fi) for ei in range(nL) for fi in range(nR) if v_turns[ei][fi] is not None]
    ei_arr = np.array([ei for ei, _ in nz], dtype=np.int64)
    fi_arr = np.array([fi for _, fi in nz], dtype=np.int64)
    v_arr = np.array([int(v_turns[ei][fi] * N) for ei, fi in nz], dtype=np.int64)
    chiI_L = np.array([[int(t * N) for t in row] for row in chiT_L], dtype=np.int64)
    chiI_R = np.array([[int(t * N) for t in row] for row in chiT_R], dtype=np.int64)

    norm = Fraction(1, nL * nR)
    entries: list[list[Cyclo]] = []
    for a in range(nL):
        row_out = []
        va = v_arr - chiI_L[a][ei_arr]
        for b in range(nR):
            hist = np.bincount((va - chiI_R[b][fi_arr]) % N, minlength=N)
            row_out.append(
                Cyclo.from_pairs(
                    N,
                    [(k, norm * int(c)) for k, c in enumerate(hist) if c],
                )
            )
        entries.append(row_out)

    out = STilde(
        left_labels=list(chis_L),
        right_labels=list(chis_R),
        vacuum_left=algebra_L.vacuum,
        vacuum_right=algebra_R.vacuum,
        entries=entries,
        provenance={
            "group_label": model.group_label,
            "left": {
                "center": list(algebra_L.spec.center),
                "r_ann": algebra_L.spec.r_ann,
                "t": algebra_L.spec.t,
                "invariant_factors": list(algebra_L.invariant_factors),
            },
            "right": {
                "center": list(algebra_R.spec.center),
                "r_ann": algebra_R.spec.r_ann,
                "t": algebra_R.spec.t,
                "invariant_factors": list(algebra_R.invariant_factors),
            },
            "cut_y": getattr(pair, "cut_y", None),
            "diamond_distance": getattr(pair, "diamond_distance", None),
        },
    )
    out.validate()

    if verify_representatives:
        _verify_null_shifts(state, algebra_L, algebra_R, pair, out,
                            verify_representatives, solver)
    return out


def _verify_null_shifts(state, algebra_L, algebra_R, pair, s: STilde, k: int,
                        solver: Optional[_RegionSolver] = None) -> None:
    """Representative independence: multiplying a projector by a null product
    (trivial on the ground state) leaves the recomputed entries unchanged."""
    if not algebra_L.null_gens:
        return
    expect = solver.expectation if solver is not None else state.expectation
    rng = np.random.default_rng(k)
    for _ in range(k):
        a = int(rng.integers(s.n_left))
        b = int(rng.integers(s.n_right))
        nudge = algebra_L.null_gens[int(rng.integers(len(algebra_L.null_gens)))]
        shifted = WeylSum(state.model.system)
        for coeff, op in algebra_L.projector(a).terms():
            shifted.add_term(coeff, op * nudge)
        prod = twist_product(shifted, algebra_R.projector(b), pair,
                             positions=state.model.positions,
                             enforce_support=False)
        lhs = Cyclo.zero()
        for coeff, op in prod.terms():
            lhs = lhs + coeff * expect(op)
        if not (lhs - s.entry(a, b)).is_zero():
            raise AssertionError("null-shifted projector changed an entry")


def stilde_for_model(
    model,
    pair,
    logical_turns: Sequence[Fraction] = (),
    thickness: Optional[int] = None,
    fatten: Optional[int] = None,
    verify_representatives: int = 0,
) -> tuple[STilde, StabilizerState, LogicalAlgebra, LogicalAlgebra]:
    """End-to-end S-tilde for a model across an annulus pair.

    `thickness` overrides the annulus thickness of both specs (the centers and
    radii stay those of the pair); `fatten` is forwarded to the quotients."""
    specL, specR = pair.left, pair.right
    if thickness is not None:
        specL = AnnulusSpec(specL.center, specL.r_ann, thickness)
        specR = AnnulusSpec(specR.center, specR.r_ann, thickness)
    state = StabilizerState(model, logical_turns)
    algebra_L = logical_quotient(model, specL, fatten=fatten)
    algebra_R = logical_quotient(model, specR, fatten=fatten)
    s = stilde_matrix(state, algebra_L, algebra_R, pair,
                      verify_representatives=verify_representatives)
    return s, state, algebra_L, algebra_R


# ---------------------------------------------------------------------------
# Verlinde fusion
# ---------------------------------------------------------------------------


@dataclass
class FusionTensor:
    """N[c][a][b] fusion multiplicities; {0,1}-valued for group-like inputs."""

    size: int
    tensor: list[list[list[Fraction]]]  # indexed [c][a][b]
    table: list[list[int]]  # table[a][b] = the unique c with N = 1

    def value(self, c: int, a: int, b: int) -> Fraction:
        return self.tensor[c][a][b]

    def fuse(self, a: int, b: int) -> int:
        return self.table[a][b]


def verlinde_fusion(s: STilde, normalization: Optional[int] = None) -> FusionTensor:
    """N^c_{ab} = |Q|^2 sum_p S[a,p] S[b,p] conj(S[c,p]), exactly.

    Entries must come out in {0,1} with exactly one 1 per (a,b); anything else
    raises NonGroupLikeFusion.
    """
    if not s.is_square():
        raise NonGroupLikeFusion("S-tilde is not square")
    n = s.n_left
    norm = Fraction(normalization if normalization is not None else n * n)

    # (rational coefficient, root turns) per entry when monomial, else None
    rm_table: list[list[Optional[tuple[Fraction, Fraction]]]] = []
    for row in s.entries:
        rrow = []
        for c in row:
            rm = c.as_root_multiple()
            rrow.append(None if rm is None else (rm[0], Fraction(rm[1], rm[2]) % 1))
        rm_table.append(rrow)
    fast = all(rm is not None for rrow in rm_table for rm in rrow)

    tensor = [[[Fraction(0)] * n for _ in range(n)] for _ in range(n)]
    table = [[-1] * n for _ in range(n)]

    if fast:
        # all entries are rational multiples of roots; the triple sums become
        # integer histograms of root exponents, assembled with numpy
        D = Lden = 1
        for rrow in rm_table:
            for q, t in rrow:
                D = D * t.denominator // gcd(D, t.denominator)
                Lden = Lden * q.denominator // gcd(Lden, q.denominator)
        T = np.array(
            [[int(t * D) for _, t in rrow] for rrow in rm_table], dtype=np.int64
        )
        W = np.array(
            [[int(q * Lden) for q, _ in rrow] for rrow in rm_table], dtype=np.int64
        )
        scale = norm / Fraction(Lden) ** 3
        offs = (np.arange(n)[:, None, None] * n + np.arange(n)[None, :, None]) * D
        for a in range(n):
            idx = (T[a][None, None, :] + T[:, None, :] - T[None, :, :]) % D
            w = W[a][None, None, :] * W[:, None, :] * W[None, :, :]
            acc = np.zeros(n * n * D, dtype=np.int64)
            np.add.at(acc, (offs + idx).ravel(), w.ravel())
            acc = acc.reshape(n, n, D)
            for b in range(n):
                for c in range(n):
                    h = acc[b, c]
                    nzk = np.nonzero(h)[0]
                    if nzk.size == 0 or (
                        D > 1 and nzk.size == D and (h == h[0]).all()
                    ):
                        q = Fraction(0)
                    elif nzk.size == 1:
                        k = int(nzk[0])
                        q = Fraction(int(h[k])) * scale
                        if 2 * k % D:
                            raise NonGroupLikeFusion(
                                f"N^{c}_{a}{b} is irrational"
                            )
                        if k:
                            q = -q
                    else:
                        val = Cyclo.from_pairs(
                            D, [(int(k), Fraction(int(h[k]))) for k in nzk]
                        ) * Cyclo.rational(scale)
                        if not val.is_rational():
                            raise NonGroupLikeFusion(
                                f"N^{c}_{a}{b} is irrational: {val!r}"
                            )
                        q = val.rational_value()
                    _record_fusion(tensor, table, a, b, c, q)
            for b in range(n):
                if table[a][b] == -1:
                    raise NonGroupLikeFusion(f"no fusion outcome for ({a},{b})")
        return FusionTensor(n, tensor, table)

    for a in range(n):
        for b in range(n):
            for c in range(n):
                acc = Cyclo.zero()
                for p in range(n):
                    acc = acc + (
                        s.entry(a, p) * s.entry(b, p) * s.entry(c, p).conjugate()
                    )
                val = acc * Cyclo.rational(norm)
                if not val.is_rational():
                    raise NonGroupLikeFusion(
                        f"N^{c}_{a}{b} is irrational: {val!r}"
                    )
                q = val.rational_value()
                _record_fusion(tensor, table, a, b, c, q)
            if table[a][b] == -1:
                raise NonGroupLikeFusion(f"no fusion outcome for ({a},{b})")
    return FusionTensor(n, tensor, table)


def _record_fusion(tensor, table, a: int, b: int, c: int, q: Fraction) -> None:
    if q not in (0, 1):
        raise NonGroupLikeFusion(f"N^{c}_{a}{b} = {q} is not 0/1")
    tensor[c][a][b] = q
    if q == 1:
        if table[a][b] != -1:
            raise NonGroupLikeFusion(f"multiple fusion outcomes for ({a},{b})")
        table[a][b] = c


# ---------------------------------------------------------------------------
# Blind group reconstruction
# ---------------------------------------------------------------------------


@dataclass
class GroupReconstruction:
    identity_label: int
    label_group_factors: tuple[int, ...]  # invariant factors of G x G
    group_factors: tuple[int, ...]  # invariant factors of G
    fusion: FusionTensor

    def describe(self) -> str:
        if not self.group_factors:
            return "Z_1"
        return "x".join(f"Z_{f}" for f in self.group_factors)


def reconstruct_group(
    s: STilde, fusion: Optional[FusionTensor] = None
) -> GroupReconstruction:
    """Recover G from an unsorted S-tilde via the fusion of its labels.

    The labels form an abelian group isomorphic to G x G; its invariant
    factors pair up (f, f) and halving them yields G.  No model metadata is
    consulted.
    """
    fus = fusion if fusion is not None else verlinde_fusion(s)
    n = fus.size

    idents = [
        e for e in range(n) if all(fus.fuse(e, b) == b for b in range(n))
    ]
    if len(idents) != 1:
        raise GroupReconstructionError(
            f"fusion has {len(idents)} identity labels"
        )
    ident = idents[0]

    for a in range(n):
        for b in range(a, n):
            if fus.fuse(a, b) != fus.fuse(b, a):
                raise GroupReconstructionError("fusion is not commutative")
    for a in range(n):
        for b in range(n):
            for c in range(n):
                if fus.fuse(fus.fuse(a, b), c) != fus.fuse(a, fus.fuse(b, c)):
                    raise GroupReconstructionError("fusion is not associative")
    for a in range(n):
        if not any(fus.fuse(a, b) == ident for b in range(n)):
            raise GroupReconstructionError(f"label {a} has no inverse")

    # exponent of the group
    mu = 1
    for a in range(n):
        k, cur = 1, a
        while cur != ident:
            cur = fus.fuse(cur, a)
            k += 1
            if k > n:
                raise GroupReconstructionError("non-terminating power chain")
        mu = mu * k // gcd(mu, k)
    if mu == 1:
        return GroupReconstruction(ident, (), (), fus)

    relations = [[0] * n]
    relations[0][ident] = 1
    for a in range(n):
        for b in range(a, n):
            row = [0] * n
            row[a] += 1
            row[b] += 1
            row[fus.fuse(a, b)] -= 1
            if any(row):
                relations.append([v % mu for v in row])
    basis = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    structure = quotient_structure(basis, relations, [mu] * n)
    factors = tuple(f for f in structure.invariant_factors if f > 1)

    if len(factors) % 2:
        raise GroupReconstructionError(
            f"invariant factors {factors} do not pair up"
        )
    half = []
    for i in range(0, len(factors), 2):
        if factors[i] != factors[i + 1]:
            raise GroupReconstructionError(
                f"invariant factors {factors} do not pair up"
            )
        half.append(factors[i])
    return GroupReconstruction(ident, factors, tuple(half), fus)


# ---------------------------------------------------------------------------
# Permutation equivalence
# ---------------------------------------------------------------------------


def stilde_match(s1: STilde, s2: STilde) -> Optional[tuple[list[int], list[int]]]:
    """Row and column permutations (fixing the vacua) mapping s1 onto s2
    exactly, or None.  Returns (sigma, tau) with
    s1[i][j] == s2[sigma[i]][tau[j]].

    Row assignments propagate into per-column candidate sets: after mapping
    row i to i', column j can only map to columns j' with matching entries in
    those rows.  A single row with pairwise-distinct entries (common in
    character tables) pins every column at once, so the search stays shallow
    even when all rows share one entry multiset."""
    if s1.n_left != s2.n_left or s1.n_right != s2.n_right:
        return None
    n, m = s1.n_left, s1.n_right

    ids: dict = {}

    def intern(c: Cyclo) -> int:
        k = _ckey(c)
        return ids.setdefault(k, len(ids))

    k1 = np.array([[intern(c) for c in row] for row in s1.entries], dtype=np.int64)
    k2 = np.array([[intern(c) for c in row] for row in s2.entries], dtype=np.int64)

    def multiset(vals) -> tuple:
        return tuple(sorted(Counter(vals.tolist()).items()))

    rowkey1 = [multiset(k1[i]) for i in range(n)]
    rowkey2 = [multiset(k2[i]) for i in range(n)]
    if sorted(rowkey1) != sorted(rowkey2):
        return None

    cand_row: list[list[int]] = []
    for i in range(n):
        cand = [i2 for i2 in range(n) if rowkey2[i2] == rowkey1[i]]
        if i == s1.vacuum_left:
            cand = [i2 for i2 in cand if i2 == s2.vacuum_left]
        else:
            cand = [i2 for i2 in cand if i2 != s2.vacuum_left]
        if not cand:
            return None
        cand_row.append(cand)

    colkey1 = [multiset(k1[:, j]) for j in range(m)]
    colkey2 = [multiset(k2[:, j]) for j in range(m)]
    cols = np.zeros((m, m), dtype=bool)
    for j in range(m):
        for j2 in range(m):
            cols[j, j2] = colkey1[j] == colkey2[j2]
    cols[s1.vacuum_right, :] = False
    cols[:, s2.vacuum_right] = False
    cols[s1.vacuum_right, s2.vacuum_right] = True

    def viable(c: np.ndarray) -> bool:
        return bool(c.any(axis=1).all() and c.any(axis=0).all())

    if not viable(cols):
        return None

    # Rows with many distinct entries prune columns hardest; try them early.
    order = sorted(
        range(n), key=lambda i: (len(cand_row[i]), -len(set(k1[i].tolist())))
    )
    sigma = [-1] * n
    used = [False] * n

    def column_matching(c: np.ndarray) -> Optional[list[int]]:
        match_to = [-1] * m

        def augment(j: int, seen: list[bool]) -> bool:
            for j2 in np.nonzero(c[j])[0]:
                if seen[j2]:
                    continue
                seen[j2] = True
                if match_to[j2] < 0 or augment(match_to[j2], seen):
                    match_to[j2] = j
                    return True
            return False

        for j in range(m):
            if not augment(j, [False] * m):
                return None
        tau = [-1] * m
        for j2, j in enumerate(match_to):
            tau[j] = j2
        return tau

    def extend(pos: int, c: np.ndarray) -> Optional[list[int]]:
        if pos == n:
            return column_matching(c)
        i = order[pos]
        for i2 in cand_row[i]:
            if used[i2]:
                continue
            pruned = c & (k1[i][:, None] == k2[i2][None, :])
            if not viable(pruned):
                continue
            sigma[i] = i2
            used[i2] = True
            tau = extend(pos + 1, pruned)
            if tau is not None:
                return tau
            used[i2] = False
            sigma[i] = -1
        return None

    tau = extend(0, cols)
    if tau is None:
        return None
    return list(sigma), tau


def stilde_equivalent(s1: STilde, s2: STilde) -> bool:
    """True iff vacuum-fixing row/column permutations map s1 to s2 exactly."""
    return stilde_match(s1, s2) is not None


# ---------------------------------------------------------------------------
# Closed form for layered cyclic models
# ---------------------------------------------------------------------------


def closed_form_stilde(factors: Sequence[int]) -> STilde:
    """Analytic S-tilde for a stack of cyclic layers: per layer d the matrix
    (1/d^2) omega_d^{a_z b_x + a_x b_z} over labels (a_x, a_z), tensored in
    layer order."""
    factors = [int(d) for d in factors]
    layer_labels = [list(itertools.product(range(d), repeat=2)) for d in factors]
    labels = [
        tuple(v for pair in combo for v in pair)
        for combo in itertools.product(*layer_labels)
    ]
    total = 1
    for d in factors:
        total *= d * d
    norm = Fraction(1, total)
    entries = []
    for a in labels:
        row = []
        for b in labels:
            t = Fraction(0)
            for li, d in enumerate(factors):
                ax, az = a[2 * li], a[2 * li + 1]
                bx, bz = b[2 * li], b[2 * li + 1]
                t += Fraction(az * bx + ax * bz, d)
            row.append(Cyclo.from_turns(t % 1, norm))
        entries.append(row)
    return STilde(
        left_labels=labels,
        right_labels=list(labels),
        vacuum_left=0,
        vacuum_right=0,
        entries=entries,
        provenance={"closed_form": factors},
    )
