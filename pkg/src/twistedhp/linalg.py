"""Exact sparse linear algebra over the rationals.

Vectors are ``dict[int, Rational]`` with no stored zeros.  Matrices are stored
column-wise.  Elimination is fraction-free: every working vector is kept as a
primitive integer vector and pivots are chosen to limit fill.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import gmpy2

Rational = type(gmpy2.mpq())
Vector = dict  # dict[int, Rational]


class CompositionNonzero(ValueError):
    """Raised when two maps handed to :func:`homology` do not compose to zero."""

    def __init__(self, witness_col: int, witness: dict):
        super().__init__(f"d_out * d_in != 0 on column {witness_col}")
        self.witness_col = witness_col
        self.witness = witness


class NotACycle(ValueError):
    pass


def Q(x) -> Rational:
    """Coerce ``x`` to an exact rational."""
    if isinstance(x, Rational):
        return x
    if isinstance(x, str):
        return parse_rational(x)
    if isinstance(x, float):
        raise TypeError("floating point values are not accepted")
    if isinstance(x, Fraction):
        return gmpy2.mpq(x.numerator, x.denominator)
    return gmpy2.mpq(x)


def parse_rational(text: str) -> Rational:
    s = text.strip()
    if not s:
        raise ValueError("empty rational")
    if "/" in s:
        num, den = s.split("/", 1)
        n, d = int(num), int(den)
        if d == 0:
            raise ValueError(f"zero denominator in {text!r}")
        return gmpy2.mpq(n, d)
    return gmpy2.mpq(int(s))


def format_rational(q) -> str:
    q = Q(q)
    if q.denominator == 1:
        return str(int(q.numerator))
    return f"{int(q.numerator)}/{int(q.denominator)}"


def add_into(acc: dict, vec: Mapping, coeff=1) -> dict:
    """acc += coeff * vec, dropping zeros.  Works for any hashable keys."""
    if not coeff:
        return acc
    for k, v in vec.items():
        nv = acc.get(k, 0) + coeff * v
        if nv:
            acc[k] = nv
        else:
            acc.pop(k, None)
    return acc


def _primitive(vec: dict) -> tuple[dict, Rational]:
    """Scale a rational vector to a primitive integer vector.

    Returns ``(ivec, s)`` with ``ivec == s * vec``.
    """
    den = 1
    for v in vec.values():
        d = Q(v).denominator
        if d != 1:
            den = den * d // math.gcd(den, d)
    ivec = {k: int(Q(v) * den) for k, v in vec.items()}
    g = math.gcd(*ivec.values()) if ivec else 1
    if g > 1:
        ivec = {k: v // g for k, v in ivec.items()}
    return ivec, gmpy2.mpq(den, g)


class SparseMatrix:
    """An exact rows x cols matrix stored as a list of column dictionaries."""

    __slots__ = ("rows", "cols", "_c")

    def __init__(self, rows: int, cols: int, columns: Sequence[Mapping] | None = None):
        self.rows = rows
        self.cols = cols
        if columns is None:
            self._c = [dict() for _ in range(cols)]
        else:
            if len(columns) != cols:
                raise ValueError("column count mismatch")
            self._c = []
            for col in columns:
                c = {}
                for r, v in col.items():
                    if not 0 <= r < rows:
                        raise IndexError(f"row index {r} out of range")
                    if v:
                        c[r] = Q(v)
                self._c.append(c)

    @classmethod
    def from_dense(cls, data: Sequence[Sequence], cols: int | None = None) -> "SparseMatrix":
        rows = len(data)
        if cols is None:
            cols = len(data[0]) if rows else 0
        columns = [{} for _ in range(cols)]
        for i, row in enumerate(data):
            if len(row) != cols:
                raise ValueError("ragged dense matrix")
            for j, v in enumerate(row):
                if v:
                    columns[j][i] = v
        return cls(rows, cols, columns)

    @classmethod
    def from_entries(cls, rows: int, cols: int, entries: Mapping[tuple[int, int], object]) -> "SparseMatrix":
        columns = [{} for _ in range(cols)]
        for (i, j), v in entries.items():
            columns[j][i] = v
        return cls(rows, cols, columns)

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        return cls(n, n, [{i: 1} for i in range(n)])

    @classmethod
    def zero(cls, rows: int, cols: int) -> "SparseMatrix":
        return cls(rows, cols)

    @property
    def entries(self) -> dict[tuple[int, int], Rational]:
        return {(i, j): v for j, c in enumerate(self._c) for i, v in c.items()}

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def nnz(self) -> int:
        return sum(len(c) for c in self._c)

    def column(self, j: int) -> dict:
        return self._c[j]

    def columns(self) -> list[dict]:
        return self._c

    def row_vectors(self) -> list[dict]:
        out = [dict() for _ in range(self.rows)]
        for j, c in enumerate(self._c):
            for i, v in c.items():
                out[i][j] = v
        return out

    def to_dense(self) -> list[list[Rational]]:
        out = [[gmpy2.mpq(0)] * self.cols for _ in range(self.rows)]
        for j, c in enumerate(self._c):
            for i, v in c.items():
                out[i][j] = v
        return out

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix(self.cols, self.rows, self.row_vectors())

    def apply(self, vec: Mapping[int, object]) -> dict:
        out: dict = {}
        for j, x in vec.items():
            if x:
                add_into(out, self._c[j], x)
        return out

    def __matmul__(self, other: "SparseMatrix") -> "SparseMatrix":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        return SparseMatrix(self.rows, other.cols, [self.apply(c) for c in other._c])

    def __add__(self, other: "SparseMatrix") -> "SparseMatrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return SparseMatrix(self.rows, self.cols, [add_into(dict(a), b) for a, b in zip(self._c, other._c)])

    def __neg__(self) -> "SparseMatrix":
        return SparseMatrix(self.rows, self.cols, [{i: -v for i, v in c.items()} for c in self._c])

    def __sub__(self, other: "SparseMatrix") -> "SparseMatrix":
        return self + (-other)

    def scale(self, s) -> "SparseMatrix":
        s = Q(s)
        return SparseMatrix(self.rows, self.cols, [{i: s * v for i, v in c.items()} for c in self._c])

    def is_zero(self) -> bool:
        return not any(self._c)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return self.shape == other.shape and self._c == other._c

    def __repr__(self) -> str:
        return f"SparseMatrix({self.rows}x{self.cols}, nnz={self.nnz()})"


class Echelon:
    """Incremental fraction-free echelon form of a family of sparse vectors.

    Stored vectors are primitive integer vectors.  Vector ``k`` has pivot
    ``pivots[k]`` and contains no pivot of a vector inserted before it, so
    reduction proceeds in insertion order and back substitution in reverse.
    ``cost`` ranks candidate pivot coordinates (lower is preferred); passing
    column occurrence counts gives a Markowitz-style minimal-fill choice.
    """

    def __init__(self, cost: Mapping[int, int] | None = None, forbidden: Iterable[int] = ()):
        self.cost = cost or {}
        self.forbidden = set(forbidden)
        self.vectors: list[dict] = []
        self.pivots: list[int] = []
        self.rank_of: dict[int, int] = {}

    def __len__(self) -> int:
        return len(self.vectors)

    def _eliminate(self, v: dict, scale: Rational | None) -> tuple[dict, Rational | None]:
        rank_of = self.rank_of
        heap = [rank_of[k] for k in v if k in rank_of]
        if not heap:
            return v, scale
        heapq.heapify(heap)
        last = -1
        vectors, pivots = self.vectors, self.pivots
        while heap:
            r = heapq.heappop(heap)
            if r == last:
                continue
            last = r
            p = pivots[r]
            c = v.get(p)
            if not c:
                continue
            b = vectors[r]
            bp = b[p]
            if bp == 1 or bp == -1:
                f = c * bp
                for k, x in b.items():
                    nv = v.get(k, 0) - f * x
                    if nv:
                        if k not in v:
                            kr = rank_of.get(k)
                            if kr is not None and kr > r:
                                heapq.heappush(heap, kr)
                        v[k] = nv
                    else:
                        del v[k]
            else:
                g = math.gcd(bp, c)
                a, f = bp // g, c // g
                if a != 1:
                    for k in v:
                        v[k] *= a
                    if scale is not None:
                        scale *= a
                for k, x in b.items():
                    nv = v.get(k, 0) - f * x
                    if nv:
                        if k not in v:
                            kr = rank_of.get(k)
                            if kr is not None and kr > r:
                                heapq.heappush(heap, kr)
                        v[k] = nv
                    else:
                        del v[k]
                if v:
                    g2 = math.gcd(*v.values())
                    if g2 > 1:
                        for k in v:
                            v[k] //= g2
                        if scale is not None:
                            scale /= g2
        return v, scale

    def reduce(self, vec: Mapping) -> dict:
        """Residual of ``vec`` modulo the span, as an exact rational vector."""
        if not vec:
            return {}
        iv, s = _primitive(dict(vec))
        res, s = self._eliminate(iv, s)
        return {k: gmpy2.mpq(x) / s for k, x in res.items()}

    def add(self, vec: Mapping) -> bool:
        """Insert ``vec``; return True if it was independent of the span."""
        if not vec:
            return False
        iv, _ = _primitive(dict(vec))
        res, _ = self._eliminate(iv, None)
        if not res:
            return False
        cands = [k for k in res if k not in self.forbidden]
        if not cands:
            # only forbidden coordinates survive: record nothing, report dependence
            self.last_residual = res
            return False
        cost = self.cost
        p = min(cands, key=lambda k: (cost.get(k, 0), abs(res[k]) != 1, -k))
        self.rank_of[p] = len(self.vectors)
        self.vectors.append(res)
        self.pivots.append(p)
        return True

    def back_substitute(self, fixed: Mapping[int, object], rhs: Sequence | None = None) -> dict:
        """Solve ``row_k . x = rhs_k`` for the pivot coordinates.

        ``fixed`` assigns the non-pivot coordinates (missing ones are zero).
        """
        x = {k: Q(v) for k, v in fixed.items() if v}
        for k in range(len(self.vectors) - 1, -1, -1):
            row = self.vectors[k]
            p = self.pivots[k]
            s = Q(rhs[k]) if rhs is not None else gmpy2.mpq(0)
            for j, a in row.items():
                if j != p:
                    xj = x.get(j)
                    if xj:
                        s -= a * xj
            if s:
                x[p] = s / row[p]
        return x


def _column_cost(vectors: Iterable[Mapping]) -> dict[int, int]:
    cost: dict[int, int] = {}
    for v in vectors:
        for k in v:
            cost[k] = cost.get(k, 0) + 1
    return cost


def rank(M: SparseMatrix) -> int:
    """Exact rank over Q."""
    cols = [c for c in M.columns() if c]
    ech = Echelon(_column_cost(cols))
    for c in cols:
        ech.add(c)
    return len(ech)


def row_echelon(M: SparseMatrix) -> Echelon:
    rows = [r for r in M.row_vectors() if r]
    ech = Echelon(_column_cost(rows))
    for r in rows:
        ech.add(r)
    return ech


def kernel_basis_sparse(M: SparseMatrix) -> list[dict]:
    """Exact right-kernel basis; vector ``k`` has a 1 at its free column."""
    ech = row_echelon(M)
    piv = set(ech.pivots)
    out = []
    for f in range(M.cols):
        if f not in piv:
            out.append(ech.back_substitute({f: 1}))
    return out


def kernel_basis(M: SparseMatrix) -> list[list[Rational]]:
    """Exact right-kernel basis as dense coordinate lists."""
    return [to_dense(v, M.cols) for v in kernel_basis_sparse(M)]


def to_dense(vec: Mapping[int, object], n: int) -> list[Rational]:
    out = [gmpy2.mpq(0)] * n
    for k, v in vec.items():
        out[k] = Q(v)
    return out


def solve_affine(A: SparseMatrix, b: Sequence | Mapping) -> list[Rational] | None:
    """Some exact ``x`` with ``A x = b``, or ``None`` when inconsistent."""
    x = solve_affine_sparse(A, b)
    return None if x is None else to_dense(x, A.cols)


def solve_affine_sparse(A: SparseMatrix, b: Sequence | Mapping) -> dict | None:
    if isinstance(b, Mapping):
        bvec = {i: Q(v) for i, v in b.items() if v}
    else:
        if len(b) != A.rows:
            raise ValueError("right-hand side has wrong length")
        bvec = {i: Q(v) for i, v in enumerate(b) if v}
    rows = A.row_vectors()
    aug = A.cols
    for i, v in bvec.items():
        rows[i][aug] = v
    rows = [r for r in rows if r]
    ech = Echelon(_column_cost(rows), forbidden=(aug,))
    for r in rows:
        if not ech.add(r) and getattr(ech, "last_residual", None):
            return None
    # rhs values sit in the augmented column of each stored row
    fixed = {aug: -1}
    x = ech.back_substitute(fixed)
    x.pop(aug, None)
    return x


@dataclass
class SubquotientBasis:
    """Representatives of ker(d_out) / im(d_in) with a coordinate map."""

    ambient_dim: int
    boundary: Echelon
    reps: list[dict]
    rep_pivots: list[int]
    d_out: SparseMatrix | None = field(default=None, repr=False)
    d_in: SparseMatrix | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return len(self.reps)

    @property
    def homology_reps(self) -> list[dict]:
        return self.reps

    @property
    def boundary_basis(self) -> list[dict]:
        return [{k: gmpy2.mpq(v) for k, v in b.items()} for b in self.boundary.vectors]

    @property
    def cycle_basis(self) -> list[dict]:
        if self.d_out is None:
            raise ValueError("cycle basis needs d_out")
        return kernel_basis_sparse(self.d_out)

    def coordinates(self, z: Mapping[int, object], check: bool = True) -> list[Rational]:
        """Coordinates of the class of the cycle ``z`` in the representative basis."""
        res = self.boundary.reduce(z)
        coords = [res.get(p, gmpy2.mpq(0)) for p in self.rep_pivots]
        if check:
            for c, r in zip(coords, self.reps):
                if c:
                    add_into(res, r, -c)
            if res:
                raise NotACycle("vector is not a cycle modulo boundaries")
        return coords


def homology(d_in: SparseMatrix, d_out: SparseMatrix, check: bool = True) -> SubquotientBasis:
    """Homology of ``V --d_in--> W --d_out--> U`` at ``W``.

    Representatives are supported off the boundary pivots and normalized to
    have a 1 at their own pivot and 0 at the other representatives' pivots.
    """
    n = d_in.rows
    if d_out.cols != n:
        raise ValueError("d_in and d_out are not composable")
    if check:
        for j, c in enumerate(d_in.columns()):
            w = d_out.apply(c)
            if w:
                raise CompositionNonzero(j, w)
    cols = [c for c in d_in.columns() if c]
    bd = Echelon(_column_cost(cols))
    for c in cols:
        bd.add(c)
    bpiv = set(bd.pivots)
    keep = [j for j in range(n) if j not in bpiv]
    keep_set = set(keep)
    row_vecs = [dict() for _ in range(d_out.rows)]
    for j in keep:
        for i, v in d_out.column(j).items():
            row_vecs[i][j] = v
    row_vecs = [r for r in row_vecs if r]
    ech = Echelon(_column_cost(row_vecs))
    for r in row_vecs:
        ech.add(r)
    rpiv = set(ech.pivots)
    free = [j for j in keep if j not in rpiv]
    reps = [ech.back_substitute({f: 1}) for f in free]
    assert all(set(r) <= keep_set for r in reps)
    return SubquotientBasis(n, bd, reps, free, d_out, d_in)


def matrix_rank_of_vectors(vectors: Iterable[Mapping]) -> int:
    vs = [dict(v) for v in vectors if v]
    ech = Echelon(_column_cost(vs))
    for v in vs:
        ech.add(v)
    return len(ech)


def dense_rank(rows: Sequence[Sequence]) -> int:
    return matrix_rank_of_vectors({j: x for j, x in enumerate(r) if x} for r in rows)


def dense_inverse(rows: Sequence[Sequence]) -> list[list[Rational]] | None:
    """Inverse of a small dense square matrix, or None if singular."""
    n = len(rows)
    a = [[Q(x) for x in r] + [gmpy2.mpq(1 if i == j else 0) for j in range(n)] for i, r in enumerate(rows)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col]), None)
        if piv is None:
            return None
        a[col], a[piv] = a[piv], a[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [r[n:] for r in a]


def dense_matmul(a: Sequence[Sequence], b: Sequence[Sequence]) -> list[list[Rational]]:
    if not a:
        return []
    inner = len(b)
    cols = len(b[0]) if b else 0
    return [[sum((a[i][k] * b[k][j] for k in range(inner)), gmpy2.mpq(0)) for j in range(cols)] for i in range(len(a))]
