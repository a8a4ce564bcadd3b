"""Dense state-vector reference implementation.

Deliberately naive cross-validation of the symbolic pipeline on instances of
total dimension <= 2**20 amplitudes.  Weyl operators act as permutation plus
phase maps (no operator matrices are materialized), so the cap binds on the
state alone.  Every sampled check embeds its seed and sample count.
"""

from __future__ import annotations

import math
from typing import Iterable, Optional, Sequence

import numpy as np

from .weyl import SiteSystem, WeylOp, WeylSum

DENSE_CAP = 2**20


class DenseSpace:
    """Index arithmetic for a product basis over a SiteSystem."""

    _cache: dict = {}

    def __init__(self, system: SiteSystem):
        self.system = system
        dims = system.dims.tolist()
        self.dim = 1
        for d in dims:
            self.dim *= d
        if self.dim > DENSE_CAP:
            raise ValueError(
                f"total dimension {self.dim} exceeds dense cap {DENSE_CAP}"
            )
        self.dims = np.array(dims, dtype=np.int64)
        strides = np.ones(len(dims), dtype=np.int64)
        for i in range(len(dims) - 2, -1, -1):
            strides[i] = strides[i + 1] * dims[i + 1]
        self.strides = strides
        self._digit_cols: dict[int, np.ndarray] = {}

    @staticmethod
    def of(system: SiteSystem) -> "DenseSpace":
        sp = DenseSpace._cache.get(system)
        if sp is None:
            sp = DenseSpace(system)
            DenseSpace._cache[system] = sp
        return sp

    def digit(self, site_idx: int) -> np.ndarray:
        col = self._digit_cols.get(site_idx)
        if col is None:
            col = (
                np.arange(self.dim, dtype=np.int64) // self.strides[site_idx]
            ) % self.dims[site_idx]
            self._digit_cols[site_idx] = col
        return col

    def codes(self, site_indices: Sequence[int]) -> tuple[np.ndarray, np.ndarray, int]:
        """(code_in, code_out, dim_in): joint digit codes over the given sites
        and over the complement; (code_in, code_out) is a bijection on indices."""
        inside = list(site_indices)
        dim_in = 1
        code_in = np.zeros(self.dim, dtype=np.int64)
        for s in inside:
            code_in = code_in * self.dims[s] + self.digit(s)
            dim_in *= int(self.dims[s])
        outside = [s for s in range(len(self.dims)) if s not in set(inside)]
        code_out = np.zeros(self.dim, dtype=np.int64)
        for s in outside:
            code_out = code_out * self.dims[s] + self.digit(s)
        return code_in, code_out, dim_in


def apply_weyl(vec: np.ndarray, op: WeylOp) -> np.ndarray:
    """phase * X^x Z^z acting on the amplitude vector (Z first, then X)."""
    space = DenseSpace.of(op.system)
    sysm = op.system
    out_phase = np.zeros(space.dim, dtype=np.int64)
    support = np.nonzero((op.x != 0) | (op.z != 0))[0]
    for s in support:
        z = int(op.z[s])
        if z:
            out_phase += z * int(sysm.den_over[s]) * space.digit(int(s))
    table = np.exp(2j * np.pi * np.arange(sysm.den) / sysm.den)
    amp = vec * table[out_phase % sysm.den]
    if op.phase:
        amp = amp * np.exp(2j * np.pi * float(op.phase))
    dest = np.arange(space.dim, dtype=np.int64)
    delta = np.zeros(space.dim, dtype=np.int64)
    for s in support:
        x = int(op.x[s])
        if x:
            dig = space.digit(int(s))
            delta += (((dig + x) % space.dims[s]) - dig) * space.strides[s]
    out = np.empty_like(vec)
    out[dest + delta] = amp
    return out


def apply_weyl_sum(vec: np.ndarray, s: WeylSum) -> np.ndarray:
    out = np.zeros_like(vec)
    for coeff, op in s.terms():
        out += complex(coeff.to_complex()) * apply_weyl(vec, op)
    return out


def apply_operator(vec: np.ndarray, op) -> np.ndarray:
    if isinstance(op, WeylOp):
        return apply_weyl(vec, op)
    return apply_weyl_sum(vec, op)


def apply_projector(vec: np.ndarray, gen: WeylOp) -> np.ndarray:
    n = gen.order()
    acc = vec.copy()
    cur = vec
    for _ in range(n - 1):
        cur = apply_weyl(cur, gen)
        acc += cur
    return acc / n


class DenseState:
    """Normalized amplitude vector over the product basis of a SiteSystem."""

    def __init__(self, system: SiteSystem, vec: np.ndarray):
        self.system = system
        self.space = DenseSpace.of(system)
        n = np.linalg.norm(vec)
        if n < 1e-12:
            raise ValueError("cannot normalize a null vector")
        self.vec = np.asarray(vec, dtype=np.complex128) / n

    def expectation(self, op) -> complex:
        return complex(np.vdot(self.vec, apply_operator(self.vec, op)))

    def reduced_density(self, labels: Iterable) -> np.ndarray:
        return reduced_density(self.system, self.vec, labels)


def reduced_density(system: SiteSystem, vec: np.ndarray, labels: Iterable) -> np.ndarray:
    space = DenseSpace.of(system)
    idx = [system.index[l] for l in labels]
    code_in, code_out, dim_in = space.codes(idx)
    dim_out = space.dim // dim_in
    M = np.zeros((dim_in, dim_out), dtype=np.complex128)
    M[code_in, code_out] = vec
    return M @ M.conj().T


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    w = np.linalg.eigvalsh(rho - sigma)
    return 0.5 * float(np.abs(w).sum())


def dense_ground_state(model_or_state, seed: int = 11, tries: int = 6) -> DenseState:
    """Joint +1 eigenvector of all term projectors (and, for a StabilizerState,
    its phased logical generators), by sequential projector application to
    seeded starting vectors.  Raises if the joint eigenspace is empty."""
    from .model import StabilizerModel, StabilizerState

    if isinstance(model_or_state, StabilizerState):
        gens = model_or_state.generators
        system = model_or_state.model.system
    elif isinstance(model_or_state, StabilizerModel):
        gens = [t.generator for t in model_or_state.terms]
        system = model_or_state.system
    else:
        raise TypeError("expected StabilizerModel or StabilizerState")
    space = DenseSpace.of(system)
    rng = np.random.default_rng(seed)
    starts = [np.ones(space.dim, dtype=np.complex128)]
    for _ in range(tries - 1):
        starts.append(
            rng.standard_normal(space.dim) + 1j * rng.standard_normal(space.dim)
        )
    for start in starts:
        v = start.astype(np.complex128)
        for g in gens:
            v = apply_projector(v, g)
            if np.linalg.norm(v) < 1e-9:
                break
        else:
            if np.linalg.norm(v) >= 1e-9:
                st = DenseState(system, v)
                devs = [abs(st.expectation(g) - 1.0) for g in gens]
                if max(devs, default=0.0) < 1e-8:
                    return st
    raise ValueError("frustrated model: joint +1 eigenspace is empty")


def ground_space_dimension(model_or_state) -> int:
    """Rank of the product of all term projectors (dense, exact to 1e-8)."""
    from .model import StabilizerModel, StabilizerState

    if isinstance(model_or_state, StabilizerState):
        gens = model_or_state.generators
        system = model_or_state.model.system
    else:
        gens = [t.generator for t in model_or_state.terms]
        system = model_or_state.system
    space = DenseSpace.of(system)
    if space.dim > 4096:
        raise ValueError("ground_space_dimension limited to dimension 4096")
    mat = np.eye(space.dim, dtype=np.complex128)
    for g in gens:
        for c in range(space.dim):
            mat[:, c] = apply_projector(mat[:, c], g)
    return int(round(float(np.real(np.trace(mat)))))


def dense_twist_pairing(state: DenseState, P, Q, cut, positions: dict) -> complex:
    """Literal twisted product: on M the order is P then Q, on M_prime the
    order is reversed; evaluated term by term via restricted factors."""
    system = state.system
    m_sites = [l for l in system.labels if cut.side_of_position(positions[l]) == "M"]
    mp_sites = [l for l in system.labels if l not in set(m_sites)]
    P = WeylSum.from_op(P) if isinstance(P, WeylOp) else P
    Q = WeylSum.from_op(Q) if isinstance(Q, WeylOp) else Q
    total = 0.0 + 0.0j
    for cp, p in P.terms():
        p_m = p.restricted(m_sites, keep_phase=True)
        p_mp = p.restricted(mp_sites, keep_phase=False)
        for cq, q in Q.terms():
            q_m = q.restricted(m_sites, keep_phase=True)
            q_mp = q.restricted(mp_sites, keep_phase=False)
            v = apply_weyl(state.vec, p_mp)
            v = apply_weyl(v, q_mp)
            v = apply_weyl(v, q_m)
            v = apply_weyl(v, p_m)
            total += complex(cp.to_complex()) * complex(cq.to_complex()) * complex(
                np.vdot(state.vec, v)
            )
    return total


def _haar_unitary(n: int, rng) -> np.ndarray:
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _apply_local_unitary(space: DenseSpace, vec: np.ndarray, sites: list[int],
                         u: np.ndarray) -> np.ndarray:
    code_in, code_out, dim_in = space.codes(sites)
    M = np.zeros((dim_in, space.dim // dim_in), dtype=np.complex128)
    M[code_in, code_out] = vec
    M = u @ M
    out = np.empty_like(vec)
    out[:] = M[code_in, code_out]
    return out


def _scramble_outside(state: DenseState, rng, outside_idx: list[int]) -> np.ndarray:
    """Random low-depth unitary supported on the given sites."""
    vec = state.vec
    space = state.space
    if not outside_idx:
        return vec.copy()
    total = 1
    for s in outside_idx:
        total *= int(space.dims[s])
    if total <= 1024:
        return _apply_local_unitary(space, vec, outside_idx, _haar_unitary(total, rng))
    order = list(outside_idx)
    rng.shuffle(order)
    for layer in range(2):
        k = 0
        while k + 1 < len(order):
            pair = [order[k], order[k + 1]]
            dloc = int(space.dims[pair[0]] * space.dims[pair[1]])
            vec = _apply_local_unitary(space, vec, pair, _haar_unitary(dloc, rng))
            k += 2
        if len(order) % 2:
            s = order[-1]
            vec = _apply_local_unitary(
                space, vec, [s], _haar_unitary(int(space.dims[s]), rng)
            )
        rng.shuffle(order)
    return vec


def _disk_centers(model) -> list[tuple[int, int]]:
    """Candidate disk centers: every doubled point, so balls around vertices
    and plaquette centers are included alongside site-centered ones."""
    from .lattice import TorusLattice

    if isinstance(model.geometry, TorusLattice):
        n = 2 * model.geometry.L
        return [(x, y) for x in range(n) for y in range(n)]
    xs = [p[0] for p in model.positions.values()]
    ys = [p[1] for p in model.positions.values()]
    return [
        (x, y)
        for x in range(min(xs), max(xs) + 1)
        for y in range(min(ys), max(ys) + 1)
    ]


def dense_invisibility_check(
    state, op, r: int, t: int, samples: int = 3, seed: int = 0,
    max_centers: Optional[int] = None,
) -> dict:
    """For every disk A of radius r with B its t-fattening: scramble B^c with
    sampled unitaries, and require rho_A(O|phi>) proportional to rho_A(|phi>)
    up to trace distance 1e-10 after trace normalization.  Balls that could
    host a winding cycle are not disks and are skipped."""
    from .lattice import TorusLattice
    from .model import StabilizerState

    if isinstance(state, StabilizerState):
        model = state.model
        dstate = dense_ground_state(state)
    else:
        raise TypeError("dense_invisibility_check expects a StabilizerState")
    system = model.system
    space = dstate.space
    rng = np.random.default_rng(seed)
    torus = model.geometry if isinstance(model.geometry, TorusLattice) else None
    centers = []
    seen = set()
    for c in _disk_centers(model):
        A = model.labels_within([c], 2 * r)
        if not A or A in seen:
            continue
        seen.add(A)
        if torus is not None and torus.positions_wrap(
            [model.positions[l] for l in A]
        ):
            continue
        centers.append((c, A))
    if max_centers is not None and len(centers) > max_centers:
        sel = rng.choice(len(centers), size=max_centers, replace=False)
        centers = [centers[i] for i in sorted(sel)]
    worst = 0.0
    worst_disk = None
    opsum = WeylSum.from_op(op) if isinstance(op, WeylOp) else op
    for c, A in centers:
        B = model.labels_within([c], 2 * (r + t))
        outside_idx = [system.index[l] for l in system.labels if l not in B]
        probes = [dstate.vec.copy()]
        for _ in range(samples):
            probes.append(_scramble_outside(dstate, rng, outside_idx))
        for probe in probes:
            w = apply_weyl_sum(probe, opsum)
            sigma = reduced_density(system, w, A)
            tr = float(np.real(np.trace(sigma)))
            if tr < 1e-13:
                continue
            rho = reduced_density(system, probe, A)
            dev = trace_distance(sigma / tr, rho / np.real(np.trace(rho)))
            if dev > worst:
                worst = dev
                worst_disk = c
    return {
        "pass": bool(worst <= 1e-10),
        "worst_deviation": float(worst),
        "worst_disk_center": repr(worst_disk),
        "samples": samples,
        "seed": seed,
        "radius": r,
        "thickness": t,
    }


def dense_lto_check(
    model, radii: Optional[Sequence[int]] = None, samples: int = 4, seed: int = 7
) -> dict:
    """Local topological order at dense scale: for every non-wrapping disk D,
    every state in the image of P_D (product of term projectors meeting D)
    must have the ground state's reduced density matrix on D.

    Disks are balls of doubled radius R (half lattice steps) around each site,
    by default up to half the system; balls that can host a winding cycle are
    excluded (they are not disks of the surface)."""
    from .lattice import TorusLattice

    dstate = dense_ground_state(model)
    system = model.system
    space = dstate.space
    rng = np.random.default_rng(seed)
    torus = model.geometry if isinstance(model.geometry, TorusLattice) else None
    if radii is None:
        if torus is not None:
            rmax = torus.L
        else:
            xs = [p[0] for p in model.positions.values()]
            ys = [p[1] for p in model.positions.values()]
            extent = max(max(xs) - min(xs), max(ys) - min(ys))
            rmax = max(1, extent // 2)
        radii = list(range(1, rmax + 1))
    disks = []
    seen = set()
    for c in _disk_centers(model):
        for r in radii:
            D = model.labels_within([c], r)
            if not D or D in seen:
                continue
            seen.add(D)
            if torus is not None and torus.positions_wrap(
                [model.positions[l] for l in D]
            ):
                continue
            disks.append((c, r, D))
    worst = 0.0
    violating = None
    for c, r, D in disks:
        terms = [t for t in model.terms if set(t.support) & D]
        rho_ref = reduced_density(system, dstate.vec, D)
        rho_ref = rho_ref / np.real(np.trace(rho_ref))
        probes = [np.ones(space.dim, dtype=np.complex128)]
        probes.append(
            rng.standard_normal((space.dim,)) + 1j * rng.standard_normal((space.dim,))
        )
        for _ in range(samples - 2):
            probes.append(
                rng.standard_normal((space.dim,)) + 1j * rng.standard_normal((space.dim,))
            )
        basis = np.zeros(space.dim, dtype=np.complex128)
        basis[-1] = 1.0
        probes.append(basis)
        for probe in probes:
            v = probe
            for term in terms:
                v = apply_projector(v, term.generator)
            if np.linalg.norm(v) < 1e-9:
                continue
            rho = reduced_density(system, v, D)
            rho = rho / np.real(np.trace(rho))
            dev = trace_distance(rho, rho_ref)
            if dev > worst:
                worst = dev
                if dev > 1e-10:
                    violating = {"center": list(c), "radius": r}
    return {
        "pass": bool(worst <= 1e-10),
        "worst_deviation": float(worst),
        "violating_disk": violating,
        "samples": samples,
        "seed": seed,
        "radii": list(radii),
    }
