"""Exact linear algebra over Z and Z_m with composite m handled soundly.

Composite moduli are never row-reduced directly.  Systems mod m are split
into prime-power parts (Z_{p^k} is a local ring, so minimal-valuation
pivoting gives an exact Smith decomposition there), solved per part, and
recombined by the Chinese remainder theorem.  Smith normal form over Z is
kept in exact arbitrary-precision integers for invariant-factor
computations.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Optional, Sequence

import numpy as np


# ---------------------------------------------------------------------------
# Integer matrices and Smith normal form over Z
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntMatrix:
    """Dense matrix of exact (arbitrary precision) integers."""

    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.entries:
            width = len(self.entries[0])
            if any(len(r) != width for r in self.entries):
                raise ValueError("ragged rows")

    @staticmethod
    def from_rows(rows: Iterable[Iterable[int]]) -> "IntMatrix":
        return IntMatrix(tuple(tuple(int(x) for x in r) for r in rows))

    @staticmethod
    def identity(n: int) -> "IntMatrix":
        return IntMatrix(tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)))

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0]) if self.entries else 0

    def mul(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise ValueError("dimension mismatch")
        ot = list(zip(*other.entries)) if other.entries else []
        return IntMatrix(
            tuple(
                tuple(sum(a * b for a, b in zip(row, col)) for col in ot)
                for row in self.entries
            )
        )

    def transpose(self) -> "IntMatrix":
        return IntMatrix(tuple(zip(*self.entries)) if self.entries else ())

    def det(self) -> int:
        # Bareiss fraction-free elimination; matrix must be square.
        if self.rows != self.cols:
            raise ValueError("determinant of non-square matrix")
        n = self.rows
        if n == 0:
            return 1
        m = [list(r) for r in self.entries]
        sign = 1
        prev = 1
        for t in range(n - 1):
            if m[t][t] == 0:
                piv = next((i for i in range(t + 1, n) if m[i][t] != 0), None)
                if piv is None:
                    return 0
                m[t], m[piv] = m[piv], m[t]
                sign = -sign
            for i in range(t + 1, n):
                for j in range(t + 1, n):
                    m[i][j] = (m[i][j] * m[t][t] - m[i][t] * m[t][j]) // prev
                m[i][t] = 0
            prev = m[t][t]
        return sign * m[n - 1][n - 1]


@dataclass(frozen=True)
class SmithDecomposition:
    """U @ A @ V == D with U, V unimodular and D diagonal, d1 | d2 | ..."""

    U: IntMatrix
    D: IntMatrix
    V: IntMatrix

    @property
    def diagonal(self) -> tuple[int, ...]:
        n = min(self.D.rows, self.D.cols)
        return tuple(self.D.entries[i][i] for i in range(n))


def smith_normal_form(A: IntMatrix | Sequence[Sequence[int]]) -> SmithDecomposition:
    """Exact Smith normal form over Z with transforms."""
    if not isinstance(A, IntMatrix):
        A = IntMatrix.from_rows(A)
    m, n = A.rows, A.cols
    if m == 0 or n == 0:
        raise ValueError("matrix must be nonempty")
    M = [list(r) for r in A.entries]
    U = [[1 if i == j else 0 for j in range(m)] for i in range(m)]
    V = [[1 if i == j else 0 for j in range(n)] for i in range(n)]

    def row_sub(i, t, f):
        M[i] = [a - f * b for a, b in zip(M[i], M[t])]
        U[i] = [a - f * b for a, b in zip(U[i], U[t])]

    def col_sub(j, t, f):
        for row in M:
            row[j] -= f * row[t]
        for row in V:
            row[j] -= f * row[t]

    t = 0
    while t < min(m, n):
        # Locate the smallest-magnitude nonzero entry of the submatrix.
        best = None
        for i in range(t, m):
            for j in range(t, n):
                v = M[i][j]
                if v and (best is None or abs(v) < abs(best[0])):
                    best = (v, i, j)
        if best is None:
            break
        _, bi, bj = best
        if bi != t:
            M[t], M[bi] = M[bi], M[t]
            U[t], U[bi] = U[bi], U[t]
        if bj != t:
            for row in M:
                row[t], row[bj] = row[bj], row[t]
            for row in V:
                row[t], row[bj] = row[bj], row[t]

        while True:
            # Clear column t; remainders become new (smaller) pivots.
            dirty = False
            for i in range(m):
                if i != t and M[i][t]:
                    f = M[i][t] // M[t][t]
                    row_sub(i, t, f)
                    if M[i][t]:
                        M[t], M[i] = M[i], M[t]
                        U[t], U[i] = U[i], U[t]
                        dirty = True
                        break
            if dirty:
                continue
            for j in range(n):
                if j != t and M[t][j]:
                    f = M[t][j] // M[t][t]
                    col_sub(j, t, f)
                    if M[t][j]:
                        for row in M:
                            row[t], row[j] = row[j], row[t]
                        for row in V:
                            row[t], row[j] = row[j], row[t]
                        dirty = True
                        break
            if dirty:
                continue
            # Divisibility sweep over the remaining submatrix.
            piv = M[t][t]
            offender = None
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if M[i][j] % piv:
                        offender = i
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            row_add = M[offender]
            M[t] = [a + b for a, b in zip(M[t], row_add)]
            U[t] = [a + b for a, b in zip(U[t], U[offender])]
        if M[t][t] < 0:
            M[t] = [-a for a in M[t]]
            U[t] = [-a for a in U[t]]
        t += 1

    return SmithDecomposition(
        U=IntMatrix.from_rows(U), D=IntMatrix.from_rows(M), V=IntMatrix.from_rows(V)
    )


def int_matrix_inverse(A: IntMatrix) -> IntMatrix:
    """Exact inverse of a unimodular integer matrix."""
    n = A.rows
    if n != A.cols:
        raise ValueError("not square")
    aug = [[Fraction(x) for x in row] + [Fraction(1 if i == j else 0) for j in range(n)]
           for i, row in enumerate(A.entries)]
    for c in range(n):
        piv = next((i for i in range(c, n) if aug[i][c] != 0), None)
        if piv is None:
            raise ValueError("singular matrix")
        aug[c], aug[piv] = aug[piv], aug[c]
        inv = 1 / aug[c][c]
        aug[c] = [v * inv for v in aug[c]]
        for i in range(n):
            if i != c and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [v - f * w for v, w in zip(aug[i], aug[c])]
    out = []
    for row in aug:
        vals = row[n:]
        if any(v.denominator != 1 for v in vals):
            raise ValueError("matrix is not unimodular")
        out.append([int(v) for v in vals])
    return IntMatrix.from_rows(out)


# ---------------------------------------------------------------------------
# Prime-power Smith solving and CRT recombination
# ---------------------------------------------------------------------------


def factor_prime_powers(m: int) -> list[tuple[int, int, int]]:
    """m -> [(p, k, p**k)] by trial division."""
    if m < 2:
        raise ValueError("modulus must be >= 2")
    out = []
    rest = m
    p = 2
    while p * p <= rest:
        if rest % p == 0:
            k = 0
            while rest % p == 0:
                rest //= p
                k += 1
            out.append((p, k, p**k))
        p += 1
    if rest > 1:
        out.append((rest, 1, rest))
    return out


class PrimePowerSmith:
    """Smith decomposition of an integer matrix over Z_{p^k}.

    Z_{p^k} is local, so picking a minimal p-valuation pivot makes every
    elimination step exact.  Provides solving, kernels, and canonical coset
    residues for the column span / row action of A.
    """

    def __init__(self, A: np.ndarray, p: int, k: int):
        self.p, self.k, self.q = p, k, p**k
        q = self.q
        M = np.array(A, dtype=np.int64) % q
        m, n = M.shape
        U = np.eye(m, dtype=np.int64)
        Ui = np.eye(m, dtype=np.int64)
        V = np.eye(n, dtype=np.int64)
        diag: list[int] = []
        t = 0
        while t < min(m, n):
            sub = M[t:, t:]
            nz = sub != 0
            if not nz.any():
                break
            val = np.zeros_like(sub)
            work = sub.copy()
            mask = nz.copy()
            for _ in range(k):
                div = mask & (work % p == 0) & (work != 0)
                val[div] += 1
                work[div] //= p
                mask = div
            val = np.where(nz, val, k + 1)
            flat = np.argmin(val)
            bi, bj = np.unravel_index(flat, val.shape)
            bi, bj = bi + t, bj + t
            v = int(val[bi - t, bj - t])
            if bi != t:
                M[[t, bi]] = M[[bi, t]]
                U[[t, bi]] = U[[bi, t]]
                Ui[:, [t, bi]] = Ui[:, [bi, t]]
            if bj != t:
                M[:, [t, bj]] = M[:, [bj, t]]
                V[:, [t, bj]] = V[:, [bj, t]]
            unit = int(M[t, t]) // p**v
            uinv = pow(unit, -1, q)
            M[t] = M[t] * uinv % q
            U[t] = U[t] * uinv % q
            Ui[:, t] = Ui[:, t] * unit % q
            piv = p**v
            if t + 1 < m:
                f = M[t + 1 :, t] // piv
                if f.any():
                    M[t + 1 :] = (M[t + 1 :] - f[:, None] * M[t]) % q
                    U[t + 1 :] = (U[t + 1 :] - f[:, None] * U[t]) % q
                    Ui[:, t] = (Ui[:, t] + Ui[:, t + 1 :] @ f) % q
            if t + 1 < n:
                g = M[t, t + 1 :] // piv
                if g.any():
                    M[:, t + 1 :] = (M[:, t + 1 :] - np.outer(M[:, t], g)) % q
                    V[:, t + 1 :] = (V[:, t + 1 :] - np.outer(V[:, t], g)) % q
            diag.append(v)
            t += 1
        self.diag = diag
        self.U, self.Ui, self.V = U, Ui, V
        self.shape = (m, n)

    def solve(self, b: np.ndarray) -> Optional[np.ndarray]:
        """x with A x == b (mod p^k), or None."""
        m, n = self.shape
        q, p = self.q, self.p
        y = (self.U @ (np.asarray(b, dtype=np.int64) % q)) % q
        x_y = np.zeros(n, dtype=np.int64)
        for i, v in enumerate(self.diag):
            d = p**v
            if y[i] % d:
                return None
            x_y[i] = y[i] // d
        if any(y[i] % q for i in range(len(self.diag), m)):
            return None
        return (self.V @ x_y) % q

    def residue(self, b: np.ndarray) -> tuple[tuple[int, ...], np.ndarray]:
        """Canonical coset representative of b modulo the column span of A.

        Returns (hashable key, representative vector); two vectors share a key
        iff they differ by an element of the span.
        """
        q, p = self.q, self.p
        m = self.shape[0]
        y = (self.U @ (np.asarray(b, dtype=np.int64) % q)) % q
        y_red = y.copy()
        for i, v in enumerate(self.diag):
            y_red[i] %= p**v
        key = tuple(int(t) for t in y_red)
        return key, (self.Ui @ y_red) % q

    def kernel(self) -> list[np.ndarray]:
        """Independent generators of {x : A x == 0 (mod p^k)} in Z_{p^k}^n."""
        n = self.shape[1]
        q, p, k = self.q, self.p, self.k
        gens = []
        for i, v in enumerate(self.diag):
            if v > 0:
                gens.append((self.V[:, i] * p ** (k - v)) % q)
        for i in range(len(self.diag), n):
            gens.append(self.V[:, i] % q)
        return gens


class ZModSolver:
    """Solving A x == b (mod m) for composite m via CRT of prime-power parts."""

    def __init__(self, A: np.ndarray | Sequence[Sequence[int]], m: int):
        self.m = m
        A = np.asarray(A, dtype=np.int64)
        if A.ndim != 2:
            raise ValueError("matrix must be 2-dimensional")
        self.shape = A.shape
        self.parts = []
        for p, k, q in factor_prime_powers(m):
            lift = (m // q) * pow(m // q, -1, q) % m
            self.parts.append((PrimePowerSmith(A % q, p, k), q, lift))

    def solve(self, b) -> Optional[np.ndarray]:
        b = np.asarray(b, dtype=np.int64)
        acc = np.zeros(self.shape[1], dtype=np.int64)
        for smith, q, lift in self.parts:
            x = smith.solve(b % q)
            if x is None:
                return None
            acc = (acc + x * lift) % self.m
        return acc

    def contains(self, b) -> bool:
        return self.solve(b) is not None

    def residue(self, b) -> tuple[tuple[int, ...], np.ndarray]:
        """Canonical representative of b modulo the column span of A."""
        b = np.asarray(b, dtype=np.int64)
        keys: list[int] = []
        acc = np.zeros(self.shape[0], dtype=np.int64)
        for smith, q, lift in self.parts:
            key, res = smith.residue(b % q)
            keys.extend(key)
            acc = (acc + res * lift) % self.m
        return tuple(keys), acc

    def kernel(self) -> list[np.ndarray]:
        """Independent generators of {x : A x == 0 (mod m)} in Z_m^n."""
        gens = []
        for smith, q, lift in self.parts:
            for g in smith.kernel():
                w = g * lift % self.m
                if w.any():
                    gens.append(w)
        return gens


class _PrimePowerHowell:
    """Column Howell form over Z_{p^k}, for solving A x == b fast.

    A column echelon pass with minimal-valuation pivoting, where every
    torsion pivot also appends the annihilator multiple of its column.
    Plain echelon is not enough over Z_{p^k}: a pivot row pins its
    coefficient only modulo q / pivot, and the choice of representative
    changes the residual on pivot-free rows.  The appended annihilator
    columns span exactly that ambiguity, so greedy forward substitution
    plus a final residual check decides membership completely.

    Unlike the Smith decomposition this keeps only the reduced matrix and
    the accumulated column transform, so it stays cheap when the row count
    is much larger than the column count.
    """

    def __init__(self, A: np.ndarray, p: int, k: int):
        self.p, self.k, self.q = p, k, p**k
        q = self.q
        A = np.asarray(A, dtype=np.int64) % q
        m, n = A.shape
        cap = n if k == 1 else n + m
        C = np.zeros((m, cap), dtype=np.int64)
        C[:, :n] = A
        V = np.zeros((n, cap), dtype=np.int64)
        V[:n, :n] = np.eye(n, dtype=np.int64)
        pivots: list[tuple[int, int, int]] = []  # (row, col, p**v)
        extra_kernel: list[np.ndarray] = []
        r = 0
        act = n
        for i in range(m):
            if r == act:
                break
            row = C[i, r:act]
            nz = np.nonzero(row)[0]
            if nz.size == 0:
                continue
            vals = np.zeros(nz.shape, dtype=np.int64)
            work = row[nz].copy()
            for _ in range(k):
                div = (work % p == 0) & (work != 0)
                vals[div] += 1
                work[div] //= p
            j = r + int(nz[np.argmin(vals)])
            v = int(vals.min())
            if j != r:
                C[:, [r, j]] = C[:, [j, r]]
                V[:, [r, j]] = V[:, [j, r]]
            piv = p**v
            unit = int(C[i, r]) // piv
            uinv = pow(unit, -1, q)
            C[:, r] = C[:, r] * uinv % q
            V[:, r] = V[:, r] * uinv % q
            f = C[i, :act] // piv
            f[r] = 0
            nzf = np.nonzero(f)[0]
            if nzf.size:
                C[:, nzf] = (C[:, nzf] - np.outer(C[:, r], f[nzf])) % q
                V[:, nzf] = (V[:, nzf] - np.outer(V[:, r], f[nzf])) % q
            pivots.append((i, r, piv))
            if piv > 1:
                g = C[:, r] * (q // piv) % q
                vg = V[:, r] * (q // piv) % q
                if g.any():
                    C[:, act] = g
                    V[:, act] = vg
                    act += 1
                elif vg.any():
                    # annihilator multiple already maps to zero: kernel element
                    extra_kernel.append(vg)
            r += 1
        self.C, self.V, self.pivots = C[:, :act], V[:, :act], pivots
        self._extra_kernel = extra_kernel
        self.shape = (m, n)

    def solve(self, b: np.ndarray) -> Optional[np.ndarray]:
        q = self.q
        bw = np.asarray(b, dtype=np.int64) % q
        y = np.zeros(self.C.shape[1], dtype=np.int64)
        for i, s, piv in self.pivots:
            val = int(bw[i])
            if val % piv:
                return None
            c = val // piv
            if c:
                y[s] = c
                bw = (bw - c * self.C[:, s]) % q
        if bw.any():
            return None
        return (self.V @ y) % q

    def residue(self, b: np.ndarray) -> tuple[tuple[int, ...], np.ndarray]:
        """Canonical coset representative of b modulo the column span of A.

        Greedy reduction against the pivots in row order: every later pivot
        column is exactly zero at earlier pivot rows, so reduced rows stay
        reduced, and the appended annihilator columns make the result
        independent of the representative.
        """
        q = self.q
        bw = np.asarray(b, dtype=np.int64) % q
        for i, s, piv in self.pivots:
            c = int(bw[i]) // piv
            if c:
                bw = (bw - c * self.C[:, s]) % q
        return tuple(int(t) for t in bw), bw

    def kernel(self) -> list[np.ndarray]:
        """Complete generators of {x : A x == 0 (mod p^k)} in Z_{p^k}^n.

        The non-pivot columns end identically zero (every row is either a
        pivot row, eliminated across the active block, or was skipped while
        all active entries vanished), so their column transforms span the
        kernel, together with annihilator multiples whose image was already
        zero when they arose."""
        q = self.q
        start = len(self.pivots)
        if self.C[:, start:].any():
            raise AssertionError("non-pivot columns not fully eliminated")
        out = []
        for j in range(start, self.V.shape[1]):
            g = self.V[:, j] % q
            if g.any():
                out.append(g)
        out.extend(self._extra_kernel)
        return out


class HowellSolver:
    """Repeated solving of A x == b (mod m) tuned for tall matrices.

    Same CRT split as ZModSolver but backed by column Howell forms, avoiding
    the row-transform bookkeeping of the Smith path.
    """

    def __init__(self, A: np.ndarray | Sequence[Sequence[int]], m: int):
        self.m = m
        A = np.asarray(A, dtype=np.int64)
        if A.ndim != 2:
            raise ValueError("matrix must be 2-dimensional")
        self.shape = A.shape
        self.parts = []
        for p, k, q in factor_prime_powers(m):
            lift = (m // q) * pow(m // q, -1, q) % m
            self.parts.append((_PrimePowerHowell(A % q, p, k), q, lift))

    def solve(self, b) -> Optional[np.ndarray]:
        b = np.asarray(b, dtype=np.int64)
        acc = np.zeros(self.shape[1], dtype=np.int64)
        for howell, q, lift in self.parts:
            x = howell.solve(b % q)
            if x is None:
                return None
            acc = (acc + x * lift) % self.m
        return acc

    def contains(self, b) -> bool:
        return self.solve(b) is not None

    def residue(self, b) -> tuple[tuple[int, ...], np.ndarray]:
        """Canonical representative of b modulo the column span of A."""
        b = np.asarray(b, dtype=np.int64)
        keys: list[int] = []
        acc = np.zeros(self.shape[0], dtype=np.int64)
        for howell, q, lift in self.parts:
            key, res = howell.residue(b % q)
            keys.extend(key)
            acc = (acc + res * lift) % self.m
        return tuple(keys), acc

    def kernel(self) -> list[np.ndarray]:
        """Independent generators of {x : A x == 0 (mod m)} in Z_m^n."""
        gens = []
        for howell, q, lift in self.parts:
            for g in howell.kernel():
                w = g * lift % self.m
                if w.any():
                    gens.append(w)
        return gens


class SpanSolver:
    """Membership, residues, and relations for the row span of gens in Z_m^n."""

    def __init__(self, gens: Sequence[Sequence[int]], n: int, m: int):
        self.m = m
        self.n = n
        self.count = len(gens)
        if gens:
            mat = np.asarray(gens, dtype=np.int64).T % m  # columns = generators
        else:
            mat = np.zeros((n, 0), dtype=np.int64)
        self._solver = HowellSolver(mat, m)

    def solve_coeffs(self, target) -> Optional[np.ndarray]:
        """Coefficients c with sum_i c_i g_i == target (mod m), or None."""
        return self._solver.solve(target)

    def contains(self, target) -> bool:
        return self._solver.contains(target)

    def residue_key(self, target) -> tuple[int, ...]:
        return self._solver.residue(target)[0]

    def residue_vector(self, target) -> np.ndarray:
        return self._solver.residue(target)[1]

    def relations(self) -> list[np.ndarray]:
        """Generators of {c : sum_i c_i g_i == 0 (mod m)}."""
        return self._solver.kernel()


# ---------------------------------------------------------------------------
# Public kernel and quotient operations
# ---------------------------------------------------------------------------


def _as_int_rows(A) -> list[list[int]]:
    if isinstance(A, IntMatrix):
        return [list(r) for r in A.entries]
    return [[int(x) for x in row] for row in A]


def kernel_mod(A, moduli) -> list[tuple[int, ...]]:
    """Generators of { x : A x == 0 (mod m) } as a subgroup of prod_j Z_{m_j}.

    `moduli` is either a single modulus m (x lives in Z_m^n, congruences mod m)
    or a per-column sequence m_j; in the latter case every congruence is taken
    mod lcm(m_j) and column j of A must be divisible by lcm/m_j so that the
    system is well defined on Z_{m_j} entries.  The returned generators are
    complete and independent.
    """
    rows = _as_int_rows(A)
    if not rows:
        raise ValueError("matrix must be nonempty")
    ncols = len(rows[0])
    if isinstance(moduli, int):
        col_moduli = [moduli] * ncols
    else:
        col_moduli = [int(x) for x in moduli]
        if len(col_moduli) != ncols:
            raise ValueError("dimension mismatch between moduli and columns")
    if any(m < 2 for m in col_moduli):
        raise ValueError("moduli must be >= 2")
    M = 1
    for m in col_moduli:
        M = M * m // gcd(M, m)
    uniform = all(m == M for m in col_moduli)
    if not uniform:
        for j, m in enumerate(col_moduli):
            step = M // m
            if any(r[j] % step for r in rows):
                raise ValueError(
                    "column %d not divisible by lcm/modulus; system ill-defined" % j
                )
    reduced = [[x % M for x in row] for row in rows]
    gens = HowellSolver(np.asarray(reduced, dtype=np.int64), M).kernel()
    if uniform:
        return [tuple(int(v) for v in g) for g in gens]
    out = []
    seen = set()
    for g in gens:
        t = tuple(int(v) % m for v, m in zip(g, col_moduli))
        if any(t) and t not in seen:
            seen.add(t)
            out.append(t)
    return _prune_to_independent(out, col_moduli, M)


def _order_in(value: int, modulus: int) -> int:
    return modulus // gcd(value % modulus, modulus) if value % modulus else 1


def _prune_to_independent(
    gens: list[tuple[int, ...]], col_moduli: list[int], M: int
) -> list[tuple[int, ...]]:
    if not gens:
        return []
    scaled = [
        [v * (M // m) % M for v, m in zip(g, col_moduli)] for g in gens
    ]
    span = SpanSolver(scaled, len(col_moduli), M)
    rels = span.relations()
    orders = [
        max((_order_in(v, m) for v, m in zip(g, col_moduli)), default=1) for g in gens
    ]

    def trivial(rel) -> bool:
        return all(int(c) % orders[i] == 0 for i, c in enumerate(rel))

    if all(trivial(r) for r in rels):
        return gens
    # Rebuild an independent generating set from the relation lattice.
    s = len(gens)
    cols = [[int(c) for c in r] for r in rels] + [
        [M if i == j else 0 for i in range(s)] for j in range(s)
    ]
    mat = [[col[i] for col in cols] for i in range(s)]
    snf = smith_normal_form(IntMatrix.from_rows(mat))
    uinv = int_matrix_inverse(snf.U)
    out = []
    for i, d in enumerate(snf.diagonal):
        if d <= 1:
            continue
        vec = [0] * len(col_moduli)
        for j in range(s):
            c = uinv.entries[j][i]
            for t in range(len(vec)):
                vec[t] += c * gens[j][t]
        t = tuple(v % m for v, m in zip(vec, col_moduli))
        if any(t):
            out.append(t)
    return out


@dataclass(frozen=True)
class AbelianGroupStructure:
    """A finite abelian group: invariant factors plus concrete generators."""

    invariant_factors: tuple[int, ...]
    generator_map: tuple[tuple[int, ...], ...]

    @property
    def order(self) -> int:
        n = 1
        for f in self.invariant_factors:
            n *= f
        return n

    def elements(self) -> list[tuple[int, ...]]:
        """All element coordinate tuples over the invariant factors."""
        coords = [()]
        for f in self.invariant_factors:
            coords = [c + (k,) for c in coords for k in range(f)]
        return coords


def quotient_structure(group_gens, subgroup_gens, moduli) -> AbelianGroupStructure:
    """Invariant factors and representatives of <group_gens> / <subgroup_gens>.

    Generators are vectors over prod_j Z_{m_j} (uniform int modulus allowed).
    Raises ValueError if the subgroup is not contained in the group.
    """
    group_gens = [tuple(int(x) for x in g) for g in group_gens]
    subgroup_gens = [tuple(int(x) for x in g) for g in subgroup_gens]
    if not group_gens and not subgroup_gens:
        return AbelianGroupStructure((), ())
    n = len(group_gens[0]) if group_gens else len(subgroup_gens[0])
    if isinstance(moduli, int):
        col_moduli = [moduli] * n
    else:
        col_moduli = [int(x) for x in moduli]
    M = 1
    for m in col_moduli:
        M = M * m // gcd(M, m)
    scale = [M // m for m in col_moduli]

    def _scaled(vec):
        return [v * s % M for v, s in zip(vec, scale)]

    g_scaled = [_scaled(g) for g in group_gens]
    h_scaled = [_scaled(h) for h in subgroup_gens]

    gspan = SpanSolver(g_scaled, n, M)
    for h in h_scaled:
        if not gspan.contains(h):
            raise ValueError("subgroup not contained in group")

    hspan = SpanSolver(h_scaled, n, M)
    residues: list[np.ndarray] = []
    seen = set()
    for g in g_scaled:
        key, res = hspan._solver.residue(np.asarray(g, dtype=np.int64))
        if any(int(v) for v in res) and key not in seen:
            seen.add(key)
            residues.append(res)
    if not residues:
        return AbelianGroupStructure((), ())

    s = len(residues)
    stacked = residues + [np.asarray(h, dtype=np.int64) for h in h_scaled]
    rel_solver = SpanSolver([list(map(int, v)) for v in stacked], n, M)
    relations = [tuple(int(c) for c in r[:s]) for r in rel_solver.relations()]

    cols = [list(r) for r in relations] + [
        [M if i == j else 0 for i in range(s)] for j in range(s)
    ]
    mat = [[col[i] for col in cols] for i in range(s)]
    snf = smith_normal_form(IntMatrix.from_rows(mat))
    uinv = int_matrix_inverse(snf.U)

    factors = []
    gen_map = []
    for i, d in enumerate(snf.diagonal):
        if d <= 1:
            continue
        vec = [0] * n
        for j in range(s):
            c = uinv.entries[j][i]
            if c:
                for t in range(n):
                    vec[t] += c * int(residues[j][t])
        unscaled = tuple((v % M) // sc for v, sc in zip(vec, scale))
        factors.append(int(d))
        gen_map.append(tuple(u % m for u, m in zip(unscaled, col_moduli)))
    order = sorted(range(len(factors)), key=lambda i: factors[i])
    return AbelianGroupStructure(
        tuple(factors[i] for i in order), tuple(gen_map[i] for i in order)
    )


def solve_mod(A, b, m: int) -> Optional[tuple[int, ...]]:
    """x with A x == b (mod m), or None."""
    rows = _as_int_rows(A)
    x = ZModSolver(np.asarray([[v % m for v in r] for r in rows], dtype=np.int64), m).solve(
        np.asarray([int(v) % m for v in b], dtype=np.int64)
    )
    return None if x is None else tuple(int(v) for v in x)
