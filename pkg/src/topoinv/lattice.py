"""Periodic square-lattice geometry: regions, annuli, and the two-annulus
configuration with a separating cut.

Edge sites are addressed as ("h", i, j) or ("v", i, j).  Internally every
position is stored in doubled integer coordinates (vertex (2i, 2j),
horizontal edge (2i+1, 2j), vertical edge (2i, 2j+1)) so that midpoints are
exact; all distances returned by this module are doubled taxicab distances
(two lattice units = one plaquette width... one lattice unit = 2 doubled).
Radii and thicknesses are given in lattice units.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

Site = tuple  # ("h"|"v", i, j)
Region = frozenset


class TorusLattice:
    """L x L periodic square lattice with one qudit per edge (2 L^2 sites)."""

    def __init__(self, L: int):
        if L < 3:
            raise ValueError("torus size must satisfy L >= 3")
        self.L = L
        self.sites: list[Site] = []
        for j in range(L):
            for i in range(L):
                self.sites.append(("h", i, j))
                self.sites.append(("v", i, j))
        self._pos = {s: self.position(s) for s in self.sites}

    def position(self, site: Site) -> tuple[int, int]:
        kind, i, j = site
        if kind == "h":
            return (2 * i + 1) % (2 * self.L), (2 * j) % (2 * self.L)
        if kind == "v":
            return (2 * i) % (2 * self.L), (2 * j + 1) % (2 * self.L)
        raise ValueError(f"unknown site kind {kind!r}")

    def wrap_delta(self, a: int, b: int) -> int:
        period = 2 * self.L
        d = (a - b) % period
        return min(d, period - d)

    def point_distance(self, p: tuple[int, int], q: tuple[int, int]) -> int:
        return self.wrap_delta(p[0], q[0]) + self.wrap_delta(p[1], q[1])

    def distance(self, a: Site, b: Site) -> int:
        return self.point_distance(self._pos[a], self._pos[b])

    def site_point_distance(self, site: Site, point: tuple[int, int]) -> int:
        return self.point_distance(self._pos[site], point)

    def region_distance(self, A: Iterable[Site], B: Iterable[Site]) -> int:
        pa = [self._pos[s] for s in A]
        pb = [self._pos[s] for s in B]
        return min(self.point_distance(p, q) for p in pa for q in pb)

    def disk(self, center: tuple[int, int], radius: int) -> Region:
        """Sites within doubled distance 2*radius of a doubled-coord point."""
        return frozenset(
            s for s in self.sites if self.site_point_distance(s, center) <= 2 * radius
        )

    def annulus_sites(self, center: tuple[int, int], r_ann: int, t: int) -> Region:
        lo, hi = 2 * (r_ann - t), 2 * (r_ann + t)
        return frozenset(
            s
            for s in self.sites
            if lo <= self.site_point_distance(s, center) <= hi
        )

    def fatten(self, region: Iterable[Site], extra: int) -> Region:
        """All sites within doubled distance 2*extra of the region."""
        pts = [self._pos[s] for s in region]
        out = set(region)
        for s in self.sites:
            ps = self._pos[s]
            if any(self.point_distance(ps, p) <= 2 * extra for p in pts):
                out.add(s)
        return frozenset(out)

    def positions_wrap(self, points: Iterable[tuple[int, int]]) -> bool:
        """True if the point set can host a cycle winding the torus.

        BFS with unwrapped steps between adjacent points (distance <= 2);
        a revisit whose accumulated lift disagrees with the stored one
        certifies a non-contractible loop through the set."""
        pts = list(dict.fromkeys(points))
        period = 2 * self.L
        lift: dict[int, tuple[int, int]] = {}

        def step(a: int, b: int) -> int:
            d = (b - a) % period
            return d if d <= period - d else d - period

        for start in range(len(pts)):
            if start in lift:
                continue
            lift[start] = pts[start]
            frontier = [start]
            while frontier:
                i = frontier.pop()
                for j in range(len(pts)):
                    dx = step(pts[i][0], pts[j][0])
                    dy = step(pts[i][1], pts[j][1])
                    if i == j or abs(dx) + abs(dy) > 2:
                        continue
                    cand = (lift[i][0] + dx, lift[i][1] + dy)
                    if j not in lift:
                        lift[j] = cand
                        frontier.append(j)
                    elif lift[j] != cand:
                        return True
        return False

    def region_wraps(self, region: Iterable[Site]) -> bool:
        return self.positions_wrap([self._pos[s] for s in region])

    def components(self, region: Iterable[Site]) -> list[Region]:
        """Connected components; sites within doubled distance 2 are adjacent."""
        remaining = set(region)
        comps = []
        while remaining:
            seed = next(iter(remaining))
            comp = {seed}
            frontier = [seed]
            remaining.discard(seed)
            while frontier:
                cur = frontier.pop()
                near = [
                    s
                    for s in remaining
                    if self.point_distance(self._pos[cur], self._pos[s]) <= 2
                ]
                for s in near:
                    remaining.discard(s)
                    comp.add(s)
                    frontier.append(s)
            comps.append(frozenset(comp))
        return comps


def build_torus(L: int) -> TorusLattice:
    return TorusLattice(L)


@dataclass(frozen=True)
class LineCut:
    """Straight cut splitting positions into M (above/right) and M' sides.

    axis 0 cuts by x, axis 1 by y; offset is a doubled coordinate.  On a
    torus pass period = 2L and the M side is the half-open band of length
    period/2 after the cut."""

    axis: int
    offset: int
    period: Optional[int] = None

    def side_of_position(self, pos: tuple[int, int]) -> str:
        v = pos[self.axis]
        if self.period is None:
            return "M" if v > self.offset else "Mp"
        r = (v - self.offset) % self.period
        return "M" if 0 < r <= self.period // 2 else "Mp"


@dataclass(frozen=True)
class AnnulusSpec:
    """Annulus of radius r_ann and thickness t around a doubled-coord center."""

    center: tuple[int, int]
    r_ann: int
    t: int

    def region(self, lattice: TorusLattice) -> Region:
        if self.t >= self.r_ann:
            raise ValueError("annulus requires t < r_ann")
        if 2 * (self.r_ann + self.t) >= lattice.L:
            raise ValueError("annulus would wrap the torus")
        return lattice.annulus_sites(self.center, self.r_ann, self.t)


@dataclass(frozen=True)
class AnnulusPair:
    """Two same-radius annuli meeting in two diamonds, plus a separating cut.

    The cut is the horizontal circle y = cut_y (doubled); M is the half-torus
    strictly above it and M_prime the complement.  C_u lies in M and C_d in
    M_prime.
    """

    lattice: TorusLattice = field(repr=False)
    left: AnnulusSpec
    right: AnnulusSpec
    C_u: Region = field(repr=False)
    C_d: Region = field(repr=False)
    cut_y: int
    diamond_distance: int

    @property
    def left_region(self) -> Region:
        return self.left.region(self.lattice)

    @property
    def right_region(self) -> Region:
        return self.right.region(self.lattice)

    def side_of_position(self, pos: tuple[int, int]) -> str:
        """'M' for the half-torus above the cut, 'Mp' below (cut row included)."""
        r = (pos[1] - self.cut_y) % (2 * self.lattice.L)
        return "M" if 0 < r <= self.lattice.L else "Mp"

    def side_of_cut(self, site: Site) -> str:
        return self.side_of_position(self.lattice.position(site))

    def region_M(self) -> Region:
        return frozenset(s for s in self.lattice.sites if self.side_of_cut(s) == "M")

    def with_cut(self, cut_y: int) -> "AnnulusPair":
        moved = AnnulusPair(
            self.lattice, self.left, self.right, self.C_u, self.C_d,
            cut_y % (2 * self.lattice.L), self.diamond_distance,
        )
        for s in moved.C_u:
            if moved.side_of_cut(s) != "M":
                raise ValueError("moved cut no longer separates the diamonds")
        for s in moved.C_d:
            if moved.side_of_cut(s) != "Mp":
                raise ValueError("moved cut no longer separates the diamonds")
        return moved


def make_annulus_pair(
    lattice: TorusLattice, r_ann: int, t: int, separation: int
) -> AnnulusPair:
    """Place two radius-r_ann annuli side by side so they intersect in exactly
    two diamonds C_u, C_d with doubled distance dist(C_u, C_d) >= separation.

    The half center distance is chosen as large as possible (centers separated
    by a distance comparable to the radius) subject to the two-component and
    separation requirements.
    """
    if t >= r_ann:
        raise ValueError("annulus requires t < r_ann")
    if 2 * (r_ann + t) >= lattice.L:
        raise ValueError("annuli would wrap the torus")
    cy = 2 * (lattice.L // 2)
    cx = 2 * (lattice.L // 2)
    last_error = "annuli do not intersect in exactly two components"
    for a in range(r_ann - t - 1, t, -1):
        left = AnnulusSpec((cx - 2 * a, cy), r_ann, t)
        right = AnnulusSpec((cx + 2 * a, cy), r_ann, t)
        inter = left.region(lattice) & right.region(lattice)
        if not inter:
            continue
        comps = lattice.components(inter)
        if len(comps) != 2:
            last_error = (
                f"annuli intersect in {len(comps)} component(s) at half-distance {a}"
            )
            continue
        def mean_y(comp):
            ys = [((lattice.position(s)[1] - cy) % (2 * lattice.L)) for s in comp]
            ys = [y if y <= lattice.L else y - 2 * lattice.L for y in ys]
            return sum(ys) / len(ys)
        comps.sort(key=mean_y, reverse=True)
        C_u, C_d = comps
        if mean_y(C_u) <= 0 or mean_y(C_d) >= 0:
            last_error = "intersection components are not vertically separated"
            continue
        d = lattice.region_distance(C_u, C_d)
        if d < separation:
            last_error = f"diamond distance {d} below requested separation {separation}"
            continue
        pair = AnnulusPair(lattice, left, right, C_u, C_d, cy, d)
        if any(pair.side_of_cut(s) != "M" for s in C_u) or any(
            pair.side_of_cut(s) != "Mp" for s in C_d
        ):
            last_error = "cut through the center row fails to separate the diamonds"
            continue
        return pair
    raise ValueError(last_error)


def validate_geometry(
    pair: AnnulusPair, circuit_range: int, interaction_range: int
) -> dict:
    """Check the geometric preconditions for invariance certification.

    Strict mode evaluates the literal inequalities (R < dist(C_u,C_d)/10 and
    1200 w < 60 t < r_ann < L); desk-scale mode checks the containment facts
    those inequalities are meant to guarantee on small lattices: fattened
    annuli still meet in exactly two components, and no operator of the given
    ranges can touch both diamonds or both sides of the cut boundary pair.
    Distances are doubled units; ranges are lattice units.
    """
    lat = pair.lattice
    R, w = int(circuit_range), int(interaction_range)
    d = pair.diamond_distance
    r_ann, t = pair.left.r_ann, pair.left.t

    strict_range = R < d / 20  # d is doubled; lattice-unit inequality R < dist/10
    strict_theorem = (1200 * w < 60 * t) and (60 * t < r_ann) and (r_ann < lat.L)

    # Pair-level fattening: conjugated annulus supports grow by R only.  The
    # interaction range w enters through reach checks, not annulus thickness.
    grown = t + R
    desk_two_components = False
    desk_no_wrap = 2 * (r_ann + grown) < lat.L
    if desk_no_wrap and grown < r_ann:
        fat_left = lat.annulus_sites(pair.left.center, r_ann, grown)
        fat_right = lat.annulus_sites(pair.right.center, r_ann, grown)
        comps = lat.components(fat_left & fat_right)
        desk_two_components = len(comps) == 2
    desk_reach = 2 * (R + w) < d
    desk_cut_clear = True
    far_y = (pair.cut_y + lat.L) % (2 * lat.L)
    for spec in (pair.left, pair.right):
        reach = 2 * (spec.r_ann + spec.t + R + w)
        gap = lat.wrap_delta(spec.center[1], far_y)
        if gap <= reach:
            desk_cut_clear = False
    report = {
        "diamond_distance": d,
        "circuit_range": R,
        "interaction_range": w,
        "r_ann": r_ann,
        "t": t,
        "L": lat.L,
        "strict": {
            "range_restriction": bool(strict_range),
            "theorem_invariant": bool(strict_theorem),
        },
        "desk_scale": {
            "two_components_after_fattening": bool(desk_two_components),
            "no_wrap_after_fattening": bool(desk_no_wrap),
            "operators_reach_one_diamond": bool(desk_reach),
            "far_cut_boundary_clear": bool(desk_cut_clear),
        },
    }
    report["strict"]["pass"] = all(report["strict"].values())
    report["desk_scale"]["pass"] = all(report["desk_scale"].values())
    report["pass"] = report["strict"]["pass"] or report["desk_scale"]["pass"]
    return report


class PointGeometry:
    """Finite site set with explicit doubled-coordinate positions and taxicab
    metric, for scenarios that are not torus lattices (chains, point pairs)."""

    def __init__(self, positions: dict):
        self.sites = list(positions)
        self._pos = {s: (int(p[0]), int(p[1])) for s, p in positions.items()}

    @staticmethod
    def chain(n: int, spacing: int = 2) -> "PointGeometry":
        return PointGeometry({i: (spacing * i, 0) for i in range(n)})

    def position(self, site):
        return self._pos[site]

    def point_distance(self, p, q) -> int:
        return abs(p[0] - q[0]) + abs(p[1] - q[1])

    def distance(self, a, b) -> int:
        return self.point_distance(self._pos[a], self._pos[b])

    def region_distance(self, A, B) -> int:
        return min(self.distance(a, b) for a in A for b in B)

    def disk(self, center: tuple[int, int], radius: int) -> Region:
        return frozenset(
            s
            for s in self.sites
            if self.point_distance(self._pos[s], center) <= 2 * radius
        )
