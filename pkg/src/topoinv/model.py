"""Commuting-projector Pauli stabilizer models and their stabilizer states.

Every Hamiltonian term is the projector average (1/n) sum_k g^k of a single
Weyl generator g with g^n = +I exactly.  A model optionally carries logical
generators (homologically nontrivial loop representatives on the torus) whose
phases select one stabilizer state from the degenerate ground space.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .cyclo import Cyclo
from .lattice import AnnulusSpec, PointGeometry, TorusLattice
from .ringlinalg import HowellSolver
from .weyl import SiteSystem, WeylOp, group_power_products


@dataclass(frozen=True)
class ProjectorTerm:
    """Hamiltonian term h = (1/order) sum_{k<order} generator^k."""

    name: str
    generator: WeylOp

    @property
    def order(self) -> int:
        return self.generator.order()

    @property
    def support(self) -> tuple:
        return self.generator.support


def _label_to_json(label):
    if isinstance(label, tuple):
        return ["t"] + [_label_to_json(x) for x in label]
    return label


def _label_from_json(obj):
    if isinstance(obj, list):
        if obj and obj[0] == "t":
            return tuple(_label_from_json(x) for x in obj[1:])
        return tuple(_label_from_json(x) for x in obj)
    return obj


class StabilizerModel:
    """A commuting set of projector terms on a site system with geometry."""

    def __init__(
        self,
        system: SiteSystem,
        geometry,
        positions: dict,
        terms: Sequence[ProjectorTerm],
        logical_generators: Sequence[WeylOp] = (),
        group_label: Optional[str] = None,
    ):
        self.system = system
        self.geometry = geometry
        self.positions = dict(positions)
        self.terms = list(terms)
        self.logical_generators = list(logical_generators)
        self.group_label = group_label
        if set(self.positions) != set(system.labels):
            raise ValueError("positions must cover exactly the system sites")

    # -- geometry ----------------------------------------------------------

    def point_distance(self, p, q) -> int:
        return self.geometry.point_distance(p, q)

    def label_distance(self, a, b) -> int:
        return self.point_distance(self.positions[a], self.positions[b])

    def labels_within(self, points: Iterable[tuple[int, int]], doubled: int) -> frozenset:
        pts = list(points)
        return frozenset(
            lbl
            for lbl, pos in self.positions.items()
            if any(self.point_distance(pos, p) <= doubled for p in pts)
        )

    def annulus_labels(self, spec: AnnulusSpec) -> frozenset:
        lo, hi = 2 * (spec.r_ann - spec.t), 2 * (spec.r_ann + spec.t)
        return frozenset(
            lbl
            for lbl, pos in self.positions.items()
            if lo <= self.point_distance(pos, spec.center) <= hi
        )

    def disk_labels(self, center: tuple[int, int], radius: int) -> frozenset:
        return frozenset(
            lbl
            for lbl, pos in self.positions.items()
            if self.point_distance(pos, center) <= 2 * radius
        )

    def support_diameter(self, op: WeylOp) -> int:
        pts = [self.positions[l] for l in op.support]
        if len(pts) <= 1:
            return 0
        return max(
            self.point_distance(p, q) for i, p in enumerate(pts) for q in pts[i + 1 :]
        )

    @property
    def interaction_range(self) -> int:
        """Max term support diameter in lattice units (site extent included)."""
        if not self.terms:
            return 0
        return max(
            (self.support_diameter(t.generator) + 2) // 2 for t in self.terms
        )

    # -- serialization -----------------------------------------------------

    def _op_to_json(self, op: WeylOp) -> dict:
        sites = {}
        for lbl in op.support:
            ex, ez = op.site_exponents(lbl)
            sites[json.dumps(_label_to_json(lbl))] = [ex, ez]
        return {"phase_turns": str(op.phase), "sites": sites}

    def _op_from_json(self, obj: dict) -> WeylOp:
        assign = {}
        for key, (ex, ez) in obj["sites"].items():
            assign[_label_from_json(json.loads(key))] = (int(ex), int(ez))
        return WeylOp.from_sites(self.system, assign, Fraction(obj["phase_turns"]))

    def to_json(self) -> dict:
        if isinstance(self.geometry, TorusLattice):
            geom = {"type": "torus", "L": self.geometry.L}
        else:
            geom = {
                "type": "points",
                "positions": {
                    json.dumps(_label_to_json(l)): list(p)
                    for l, p in self.positions.items()
                },
            }
        return {
            "geometry": geom,
            "sites": [
                [json.dumps(_label_to_json(l)), int(d)]
                for l, d in zip(self.system.labels, self.system.dims.tolist())
            ],
            "positions": {
                json.dumps(_label_to_json(l)): list(p) for l, p in self.positions.items()
            },
            "terms": [
                {"name": t.name, "generator": self._op_to_json(t.generator)}
                for t in self.terms
            ],
            "logical_generators": [self._op_to_json(g) for g in self.logical_generators],
            "group_label": self.group_label,
        }

    @staticmethod
    def from_json(obj: dict) -> "StabilizerModel":
        labels_dims = [
            (_label_from_json(json.loads(key)), int(d)) for key, d in obj["sites"]
        ]
        system = SiteSystem(labels_dims)
        if obj["geometry"]["type"] == "torus":
            geometry = TorusLattice(obj["geometry"]["L"])
        else:
            geometry = PointGeometry(
                {
                    _label_from_json(json.loads(k)): tuple(v)
                    for k, v in obj["geometry"]["positions"].items()
                }
            )
        positions = {
            _label_from_json(json.loads(k)): tuple(v)
            for k, v in obj["positions"].items()
        }
        model = StabilizerModel(system, geometry, positions, [], [], obj.get("group_label"))
        model.terms = [
            ProjectorTerm(t["name"], model._op_from_json(t["generator"]))
            for t in obj["terms"]
        ]
        model.logical_generators = [
            model._op_from_json(g) for g in obj["logical_generators"]
        ]
        return model


class StabilizerState:
    """A stabilizer state: model terms at +1 plus phased logical generators."""

    def __init__(self, model: StabilizerModel, logical_turns: Sequence[Fraction] = ()):
        self.model = model
        turns = list(logical_turns) + [Fraction(0)] * (
            len(model.logical_generators) - len(logical_turns)
        )
        self.logical_turns = [Fraction(t) for t in turns]
        for g, t in zip(model.logical_generators, self.logical_turns):
            if (t * g.order()).denominator != 1:
                raise ValueError("logical phase incompatible with generator order")
        self._gens: list[WeylOp] = [t.generator for t in model.terms] + [
            g.with_phase(g.phase - t)
            for g, t in zip(model.logical_generators, self.logical_turns)
        ]
        self._exp_cache: dict = {}
        self._local_solvers: dict = {}
        self._full_solver = None
        self._prepared = False

    @property
    def generators(self) -> list[WeylOp]:
        """Generators g_i with g_i |psi> = |psi|."""
        return list(self._gens)

    def _prepare(self) -> None:
        if self._prepared:
            return
        sysm = self.model.system
        k = len(self._gens)
        n = sysm.nsites
        self._Gx = np.zeros((k, n), dtype=np.int64)
        self._Gz = np.zeros((k, n), dtype=np.int64)
        for i, g in enumerate(self._gens):
            self._Gx[i] = g.x
            self._Gz[i] = g.z
        self._Gx_s = self._Gx * sysm.den_over
        self._Gz_s = self._Gz * sysm.den_over
        pos = np.array([self.model.positions[l] for l in sysm.labels], dtype=np.int64)
        self._pos = pos
        self._gen_sites = [np.nonzero((self._Gx[i] != 0) | (self._Gz[i] != 0))[0]
                           for i in range(k)]
        self._prepared = True

    def _commutes_with_all(self, op: WeylOp) -> bool:
        sysm = self.model.system
        xs = op.x * sysm.den_over
        zs = op.z * sysm.den_over
        c = (self._Gz @ xs - self._Gx @ zs) % sysm.den
        return not c.any()

    def _region_indices(self, support_idx: np.ndarray, reach: int) -> np.ndarray:
        geom = self.model.geometry
        pos = self._pos
        sup = pos[support_idx]
        n = pos.shape[0]
        mask = np.zeros(n, dtype=bool)
        if isinstance(geom, TorusLattice):
            period = 2 * geom.L
            for p in sup:
                dx = np.abs((pos[:, 0] - p[0]) % period)
                dx = np.minimum(dx, period - dx)
                dy = np.abs((pos[:, 1] - p[1]) % period)
                dy = np.minimum(dy, period - dy)
                mask |= (dx + dy) <= reach
        else:
            for p in sup:
                mask |= (np.abs(pos[:, 0] - p[0]) + np.abs(pos[:, 1] - p[1])) <= reach
        return np.nonzero(mask)[0]

    def _solve_membership(self, op: WeylOp):
        """Coefficients over self._gens expressing op's exponent pattern."""
        sysm = self.model.system
        support_idx = np.nonzero((op.x != 0) | (op.z != 0))[0]
        if len(support_idx) == 0:
            return []
        reaches = [8, 24, 64]
        for reach in reaches:
            region = self._region_indices(support_idx, reach)
            key = (reach, support_idx.tobytes())
            cached = self._local_solvers.get(key)
            if cached is None:
                in_region = np.zeros(sysm.nsites, dtype=bool)
                in_region[region] = True
                gen_ids = [
                    i
                    for i, sites in enumerate(self._gen_sites)
                    if len(sites) and in_region[sites].all()
                ]
                if not gen_ids:
                    cached = (None, [])
                else:
                    rows = np.vstack(
                        [self._Gx_s[gen_ids][:, region].T, self._Gz_s[gen_ids][:, region].T]
                    )
                    cached = (HowellSolver(rows % sysm.den, sysm.den), gen_ids)
                self._local_solvers[key] = cached
            solver, gen_ids = cached
            if solver is None:
                continue
            b = np.concatenate(
                [(op.x * sysm.den_over)[region], (op.z * sysm.den_over)[region]]
            ) % sysm.den
            sol = solver.solve(b)
            if sol is not None:
                return [(gen_ids[j], int(c)) for j, c in enumerate(sol) if c]
        if self._full_solver is None:
            rows = np.vstack([self._Gx_s.T, self._Gz_s.T]) % sysm.den
            self._full_solver = HowellSolver(rows, sysm.den)
        b = np.concatenate([op.x * sysm.den_over, op.z * sysm.den_over]) % sysm.den
        sol = self._full_solver.solve(b)
        if sol is None:
            return None
        return [(i, int(c)) for i, c in enumerate(sol) if c]

    def expectation(self, op: WeylOp) -> Cyclo:
        """<psi| op |psi>: exact root of unity if op is a phased group member,
        else exactly zero (normalized trace over the stabilized subspace)."""
        self._prepare()
        key = (op.key(), op.phase)
        hit = self._exp_cache.get(key)
        if hit is not None:
            return hit
        if not self._commutes_with_all(op):
            val = Cyclo.zero()
        else:
            combo = self._solve_membership(op)
            if combo is None:
                val = Cyclo.zero()
            else:
                if combo:
                    ids, coeffs = zip(*combo)
                    prod = group_power_products([self._gens[i] for i in ids], coeffs)
                else:
                    prod = WeylOp.identity(self.model.system)
                if not (
                    np.array_equal(prod.x, op.x) and np.array_equal(prod.z, op.z)
                ):
                    raise AssertionError("membership certificate mismatch")
                val = Cyclo.from_turns(op.phase - prod.phase)
        self._exp_cache[key] = val
        return val


def expectation(state: StabilizerState, op: WeylOp) -> Cyclo:
    return state.expectation(op)


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def build_toric_code(lattice: TorusLattice, d: int) -> StabilizerModel:
    """Z_d toric code on the torus: X-type vertex terms, Z-type plaquette
    terms (oriented exponents so all pairs commute for every d), plus two
    Z-type winding loop representatives completing a maximal group."""
    if d < 2:
        raise ValueError("qudit dimension must be >= 2")
    system = SiteSystem.uniform(lattice.sites, d)
    positions = {s: lattice.position(s) for s in lattice.sites}
    L = lattice.L
    terms = []
    for j in range(L):
        for i in range(L):
            vertex = {
                ("h", i, j): (1, 0),
                ("v", i, j): (1, 0),
                ("h", (i - 1) % L, j): (-1, 0),
                ("v", i, (j - 1) % L): (-1, 0),
            }
            terms.append(
                ProjectorTerm(f"A_v({i},{j})", WeylOp.from_sites(system, vertex))
            )
            plaq = {
                ("h", i, j): (0, 1),
                ("v", (i + 1) % L, j): (0, 1),
                ("h", i, (j + 1) % L): (0, -1),
                ("v", i, j): (0, -1),
            }
            terms.append(
                ProjectorTerm(f"B_p({i},{j})", WeylOp.from_sites(system, plaq))
            )
    z_row = WeylOp.from_sites(system, {("h", i, 0): (0, 1) for i in range(L)})
    z_col = WeylOp.from_sites(system, {("v", 0, j): (0, 1) for j in range(L)})
    return StabilizerModel(
        system, lattice, positions, terms, [z_row, z_col], group_label=f"Z_{d}"
    )


def build_toric_patch(width: int, height: int, d: int = 2) -> StabilizerModel:
    """Planar surface-code patch with open boundary: full plaquettes plus
    stars trimmed to existing edges.  Every edge sits in exactly two stars
    with opposite exponents, so the patch has a unique ground state."""
    if width < 1 or height < 1 or d < 2:
        raise ValueError("need width, height >= 1 and d >= 2")
    sites: list = []
    positions: dict = {}
    for j in range(height + 1):
        for i in range(width):
            sites.append(("h", i, j))
            positions[("h", i, j)] = (2 * i + 1, 2 * j)
    for j in range(height):
        for i in range(width + 1):
            sites.append(("v", i, j))
            positions[("v", i, j)] = (2 * i, 2 * j + 1)
    system = SiteSystem.uniform(sites, d)
    present = set(sites)
    terms = []
    for j in range(height + 1):
        for i in range(width + 1):
            star = {}
            for lbl, e in (
                (("h", i, j), 1),
                (("v", i, j), 1),
                (("h", i - 1, j), -1),
                (("v", i, j - 1), -1),
            ):
                if lbl in present:
                    star[lbl] = (e, 0)
            if star:
                terms.append(
                    ProjectorTerm(f"A_v({i},{j})", WeylOp.from_sites(system, star))
                )
    for j in range(height):
        for i in range(width):
            plaq = {
                ("h", i, j): (0, 1),
                ("v", i + 1, j): (0, 1),
                ("h", i, j + 1): (0, -1),
                ("v", i, j): (0, -1),
            }
            terms.append(
                ProjectorTerm(f"B_p({i},{j})", WeylOp.from_sites(system, plaq))
            )
    geom = PointGeometry(positions)
    return StabilizerModel(system, geom, positions, terms, [], group_label="Z_1")


def build_trivial_model(lattice: TorusLattice, d: int = 2) -> StabilizerModel:
    """Single-site Z projector on every edge: unique product ground state."""
    system = SiteSystem.uniform(lattice.sites, d)
    positions = {s: lattice.position(s) for s in lattice.sites}
    terms = [
        ProjectorTerm(f"Z{s}", WeylOp.from_sites(system, {s: (0, 1)}))
        for s in lattice.sites
    ]
    return StabilizerModel(system, lattice, positions, terms, [], group_label="Z_1")


def build_ising_chain(n: int, pinned: bool = True) -> StabilizerModel:
    """Open Z_2 Ising chain: ZZ terms, optionally pinned by a single-site Z
    projector at the left end (a longitudinal field selecting |0...0>)."""
    if n < 3:
        raise ValueError("chain needs n >= 3")
    geom = PointGeometry.chain(n)
    system = SiteSystem.uniform(list(range(n)), 2)
    positions = {i: geom.position(i) for i in range(n)}
    terms = [
        ProjectorTerm(
            f"ZZ({i})", WeylOp.from_sites(system, {i: (0, 1), i + 1: (0, 1)})
        )
        for i in range(n - 1)
    ]
    if pinned:
        terms.append(ProjectorTerm("Z(0)", WeylOp.from_sites(system, {0: (0, 1)})))
    return StabilizerModel(system, geom, positions, terms, [], group_label="Z_1")


def build_ghz_chain(n: int) -> StabilizerModel:
    """GHZ state as a stabilizer model: ZZ pairs plus the global X string."""
    if n < 2 or n % 2:
        raise ValueError("GHZ chain needs even n >= 2")
    geom = PointGeometry.chain(n)
    system = SiteSystem.uniform(list(range(n)), 2)
    positions = {i: geom.position(i) for i in range(n)}
    terms = [
        ProjectorTerm(
            f"ZZ({i})", WeylOp.from_sites(system, {i: (0, 1), i + 1: (0, 1)})
        )
        for i in range(n - 1)
    ]
    xs = WeylOp.from_sites(system, {i: (1, 0) for i in range(n)})
    terms.append(ProjectorTerm("X_all", xs))
    return StabilizerModel(system, geom, positions, terms, [], group_label="GHZ")


def build_product_state(dims: Sequence[int], seed: int = 0) -> StabilizerModel:
    """Product stabilizer state: one random single-site generator per site."""
    rng = np.random.default_rng(seed)
    labels = list(range(len(dims)))
    geom = PointGeometry.chain(len(dims))
    system = SiteSystem([(i, d) for i, d in zip(labels, dims)])
    positions = {i: geom.position(i) for i in labels}
    terms = []
    for i, d in zip(labels, dims):
        while True:
            ex, ez = int(rng.integers(0, d)), int(rng.integers(0, d))
            g = np.gcd(np.gcd(ex, ez), d)
            if g == 1 or (d == 1):
                break
        terms.append(
            ProjectorTerm(f"S({i})", WeylOp.from_sites(system, {i: (ex, ez)}))
        )
    return StabilizerModel(system, geom, positions, terms, [], group_label="product")


def stack_models(m1: StabilizerModel, m2: StabilizerModel) -> StabilizerModel:
    """Disjoint-union stack of two models over the same geometry."""
    if type(m1.geometry) is not type(m2.geometry):
        raise ValueError("mismatched geometries")
    if isinstance(m1.geometry, TorusLattice) and m1.geometry.L != m2.geometry.L:
        raise ValueError("mismatched lattice sizes")
    sites = [((0, l), int(d)) for l, d in zip(m1.system.labels, m1.system.dims)]
    sites += [((1, l), int(d)) for l, d in zip(m2.system.labels, m2.system.dims)]
    system = SiteSystem(sites)
    positions = {(0, l): p for l, p in m1.positions.items()}
    positions.update({(1, l): p for l, p in m2.positions.items()})

    def lift(op: WeylOp, layer: int, src: StabilizerModel) -> WeylOp:
        assign = {}
        for lbl in op.support:
            assign[(layer, lbl)] = op.site_exponents(lbl)
        return WeylOp.from_sites(system, assign, op.phase)

    terms = [
        ProjectorTerm(f"L0:{t.name}", lift(t.generator, 0, m1)) for t in m1.terms
    ] + [ProjectorTerm(f"L1:{t.name}", lift(t.generator, 1, m2)) for t in m2.terms]
    logicals = [lift(g, 0, m1) for g in m1.logical_generators] + [
        lift(g, 1, m2) for g in m2.logical_generators
    ]
    label = None
    if m1.group_label and m2.group_label:
        label = f"{m1.group_label}x{m2.group_label}"
    return StabilizerModel(system, m1.geometry, positions, terms, logicals, label)


def add_trivial_ancillas(
    model: StabilizerModel,
    count: int,
    positions: Optional[Sequence[tuple[int, int]]] = None,
    dim: int = 2,
) -> StabilizerModel:
    """Append `count` fresh qudits pinned to |0> by rank-1 Z-projector terms."""
    if count == 0:
        return model
    if positions is None:
        positions = [(0, 0)] * count
    sites = list(zip(model.system.labels, (int(d) for d in model.system.dims)))
    anc_labels = [("anc", k) for k in range(count)]
    sites += [(l, dim) for l in anc_labels]
    system = SiteSystem(sites)
    new_positions = dict(model.positions)
    for l, p in zip(anc_labels, positions):
        new_positions[l] = tuple(p)

    def lift(op: WeylOp) -> WeylOp:
        assign = {lbl: op.site_exponents(lbl) for lbl in op.support}
        return WeylOp.from_sites(system, assign, op.phase)

    terms = [ProjectorTerm(t.name, lift(t.generator)) for t in model.terms]
    for l in anc_labels:
        terms.append(
            ProjectorTerm(f"anc{l[1]}", WeylOp.from_sites(system, {l: (0, 1)}))
        )
    logicals = [lift(g) for g in model.logical_generators]
    return StabilizerModel(
        system, model.geometry, new_positions, terms, logicals, model.group_label
    )


# ---------------------------------------------------------------------------
# Checking
# ---------------------------------------------------------------------------


def check_model(model: StabilizerModel, oracle_cap: int = 2**20) -> dict:
    """Report {commuting, projector_property, frustration_free,
    lto_small_instance} with exact checks on the first three."""
    sysm = model.system
    gens = [t.generator for t in model.terms] + list(model.logical_generators)
    k = len(gens)
    Gx = np.array([g.x for g in gens], dtype=np.int64)
    Gz = np.array([g.z for g in gens], dtype=np.int64)
    C = (Gz * sysm.den_over) @ Gx.T - Gx @ (Gz * sysm.den_over).T
    commuting = not (C % sysm.den).any()

    projector_ok = True
    for g in gens:
        dims = sysm.dims
        gg = np.gcd(np.gcd(g.x, g.z), dims)
        n = int(np.lcm.reduce(dims // gg)) if len(dims) else 1
        if (g**n).phase != 0:
            projector_ok = False
            break

    frustration_free = projector_ok and commuting
    if frustration_free:
        rows = np.vstack([(Gx * sysm.den_over).T, (Gz * sysm.den_over).T]) % sysm.den
        relations = HowellSolver(rows, sysm.den).kernel()
        for rel in relations:
            prod = group_power_products(gens, [int(c) for c in rel])
            if prod.phase != 0:
                frustration_free = False
                break

    total_dim = 1
    for d in sysm.dims.tolist():
        total_dim *= d
        if total_dim > oracle_cap:
            break
    lto = None
    if total_dim <= oracle_cap:
        from .oracle import dense_lto_check

        lto = dense_lto_check(model)["pass"]
    return {
        "commuting": bool(commuting),
        "projector_property": bool(projector_ok),
        "frustration_free": bool(frustration_free),
        "lto_small_instance": lto,
    }
