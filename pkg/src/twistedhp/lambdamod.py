"""Generic machinery for dg modules over the extended exterior algebra.

A module supplies a graded basis and five families of operators: the
differential ``d`` (degree +1), odd operators ``beta_0..beta_m`` (degree -1),
``e_1..e_m`` (degree 0) and ``E_1..E_m`` (degree -2).  This module checks the
defining relations, folds the module into the periodic complex with formal
variables tau_1..tau_m (u set to 1), computes homology on finite windows and
the induced Weyl algebra action, and searches for intertwiners.

Windows.  Each basis element carries a *key*, an integer vector on which all
operators act by fixed shifts: ``d`` and ``beta_0`` preserve it, while
``beta_i``, ``e_i`` and ``E_i`` add ``shift[i]``.  A periodic basis element is
a pair ``(alpha, x)`` with ``alpha`` a tau-exponent vector; its window key is
``key(x) - sum(alpha_i * shift[i])``, which every operator of the periodic
complex preserves.  A window is (key, level T, parity) with level the maximal
total tau degree kept; higher tau powers are killed, which makes each window a
quotient complex.  Modules whose keys do not bound the degree (finite tables
without weights) additionally need a degree floor: elements below the floor
are killed, which realizes a quotient by a power of u.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import gmpy2

from .linalg import (
    Q,
    SparseMatrix,
    SubquotientBasis,
    add_into,
    dense_inverse,
    dense_rank,
    format_rational,
    homology,
    kernel_basis_sparse,
)


class RelationFailure(AssertionError):
    def __init__(self, relation: str, witness: str, residual: str = ""):
        super().__init__(f"{relation} fails on {witness}: {residual}")
        self.relation = relation
        self.witness = witness
        self.residual = residual


class DescentFailure(AssertionError):
    pass


class DimensionMismatch(ValueError):
    def __init__(self, window, dim1: int, dim2: int):
        super().__init__(f"homology dimensions differ at window {window}: {dim1} vs {dim2}")
        self.window = window
        self.dim1 = dim1
        self.dim2 = dim2


class WindowInfinite(ValueError):
    pass


def _vadd(a: tuple, b: tuple, s: int = 1) -> tuple:
    return tuple(x + s * y for x, y in zip(a, b))


class LambdaExtModule:
    """Base class.  Subclasses implement the ``_elements`` and ``_op`` hooks."""

    m: int = 0
    shifts: list = []
    weighted: bool = True
    filtered: bool = False
    name: str = "module"

    def __init__(self):
        self._cache: dict = {}
        self._el_cache: dict = {}

    # hooks --------------------------------------------------------------
    def _elements(self, key: tuple, parity: int, floor: int | None) -> list:
        raise NotImplementedError

    def _op(self, op: str, i: int, x) -> dict:
        raise NotImplementedError

    def degree(self, x) -> int:
        raise NotImplementedError

    def key(self, x) -> tuple:
        raise NotImplementedError

    def label(self, x) -> str:
        return str(x)

    def key_weight(self, key: tuple) -> int:
        """Scalar weight of a key."""
        raise NotImplementedError

    def element_keys(self, weight: int) -> list:
        """Keys of weight ``weight`` that carry basis elements."""
        raise NotImplementedError

    # cached interface ---------------------------------------------------
    def elements(self, key: tuple, parity: int, floor: int | None = None) -> list:
        k = (key, parity % 2, floor)
        out = self._el_cache.get(k)
        if out is None:
            if not self.weighted and floor is None:
                raise WindowInfinite(f"{self.name}: a degree floor is required for unweighted input")
            out = self._elements(key, parity % 2, floor)
            self._el_cache[k] = out
        return out

    def apply(self, op: str, i: int, x) -> dict:
        k = (op, i, x)
        out = self._cache.get(k)
        if out is None:
            out = self._op(op, i, x)
            self._cache[k] = out
        return out

    def d(self, x) -> dict:
        return self.apply("d", 0, x)

    def beta(self, i: int, x) -> dict:
        return self.apply("beta", i, x)

    def e(self, i: int, x) -> dict:
        return self.apply("e", i, x)

    def E(self, i: int, x) -> dict:
        return self.apply("E", i, x)

    def apply_vec(self, op: str, i: int, vec: Mapping) -> dict:
        out: dict = {}
        for x, c in vec.items():
            add_into(out, self.apply(op, i, x), c)
        return out

    def op_names(self) -> dict:
        """Human names of the operators, overridable by subclasses."""
        names = {("d", 0): "d", ("beta", 0): "beta0"}
        for i in range(1, self.m + 1):
            names[("beta", i)] = f"beta{i}"
            names[("e", i)] = f"e{i}"
            names[("E", i)] = f"E{i}"
        return names


class ScaledEModule(LambdaExtModule):
    """A view of a module with every E_i multiplied by a constant (fault injection and sign checks)."""

    def __init__(self, base: LambdaExtModule, scale=-1):
        super().__init__()
        self.base = base
        self.scale = Q(scale)
        self.m = base.m
        self.shifts = base.shifts
        self.weighted = base.weighted
        self.filtered = base.filtered
        self.name = f"{base.name} (E scaled by {format_rational(self.scale)})"

    def _elements(self, key, parity, floor):
        return self.base.elements(key, parity, floor)

    def _op(self, op, i, x):
        out = self.base.apply(op, i, x)
        if op == "E":
            return {k: v * self.scale for k, v in out.items()}
        return out

    def degree(self, x):
        return self.base.degree(x)

    def key(self, x):
        return self.base.key(x)

    def label(self, x):
        return self.base.label(x)

    def key_weight(self, key):
        return self.base.key_weight(key)

    def element_keys(self, weight):
        return self.base.element_keys(weight)

    def op_names(self):
        return self.base.op_names()


# ------------------------------------------------------------------ relations


@dataclass
class RelationResult:
    name: str
    checked: int = 0
    failures: int = 0
    witness: str | None = None
    residual: str | None = None

    @property
    def ok(self) -> bool:
        return self.failures == 0

    def as_dict(self) -> dict:
        out = {"relation": self.name, "checked": self.checked, "failures": self.failures, "ok": self.ok}
        if self.witness is not None:
            out["witness"] = self.witness
            out["residual"] = self.residual
        return out


@dataclass
class RelationReport:
    module: str
    results: list[RelationResult]
    elements: int

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)

    def first_failure(self) -> RelationResult | None:
        return next((r for r in self.results if not r.ok), None)

    def raise_on_failure(self):
        r = self.first_failure()
        if r is not None:
            raise RelationFailure(r.name, r.witness or "", r.residual or "")

    def as_dict(self) -> dict:
        return {"module": self.module, "elements": self.elements, "ok": self.ok, "relations": [r.as_dict() for r in self.results]}


def _format_vec(M: LambdaExtModule, vec: Mapping, limit: int = 6) -> str:
    items = sorted(vec.items(), key=lambda kv: M.label(kv[0]))
    parts = [f"{format_rational(c)}*{M.label(x)}" for x, c in items[:limit]]
    if len(items) > limit:
        parts.append(f"... ({len(items)} terms)")
    return " + ".join(parts) if parts else "0"


def relation_list(M: LambdaExtModule) -> list[tuple[str, Callable]]:
    """The defining relations as (name, x -> residual) pairs.

    Every residual must vanish: d^2, the anticommutation of all beta's and
    their anticommutation with d, and the expansion of the twisted relations
    ``[d, e_i] = 0``, ``[d, E_i] = e_i beta_0 - beta_0 e_i - beta_i``,
    ``[E_i, beta_0] = 0``, ``[e_i, beta_j] = [E_i, beta_j] = 0`` (j >= 1).
    """
    nm = M.op_names()
    A = M.apply
    V = M.apply_vec
    rels: list[tuple[str, Callable]] = []

    def comb(*terms):
        # terms: (coeff, [(op, i), ...]) applied right to left
        def f(x):
            out: dict = {}
            for c, ops in terms:
                vec = {x: Q(1)}
                for op, i in reversed(ops):
                    vec = V(op, i, vec)
                    if not vec:
                        break
                add_into(out, vec, c)
            return out

        return f

    d = ("d", 0)
    rels.append((f"{nm[d]}^2 = 0", comb((1, [d, d]))))
    for i in range(M.m + 1):
        bi = ("beta", i)
        for j in range(i, M.m + 1):
            bj = ("beta", j)
            if i == j:
                rels.append((f"{nm[bi]}^2 = 0", comb((1, [bi, bi]))))
            else:
                rels.append((f"{nm[bi]}{nm[bj]} + {nm[bj]}{nm[bi]} = 0", comb((1, [bi, bj]), (1, [bj, bi]))))
        rels.append((f"{nm[d]}{nm[bi]} + {nm[bi]}{nm[d]} = 0", comb((1, [d, bi]), (1, [bi, d]))))
    b0 = ("beta", 0)
    for i in range(1, M.m + 1):
        ei, Ei, bi = ("e", i), ("E", i), ("beta", i)
        rels.append((f"[{nm[d]}, {nm[ei]}] = 0", comb((1, [d, ei]), (-1, [ei, d]))))
        rels.append((
            f"[{nm[d]}, {nm[Ei]}] = {nm[ei]}{nm[b0]} - {nm[b0]}{nm[ei]} - {nm[bi]}",
            comb((1, [d, Ei]), (-1, [Ei, d]), (-1, [ei, b0]), (1, [b0, ei]), (1, [bi])),
        ))
        rels.append((f"[{nm[Ei]}, {nm[b0]}] = 0", comb((1, [Ei, b0]), (-1, [b0, Ei]))))
        for j in range(1, M.m + 1):
            bj = ("beta", j)
            rels.append((f"[{nm[ei]}, {nm[bj]}] = 0", comb((1, [ei, bj]), (-1, [bj, ei]))))
            rels.append((f"[{nm[Ei]}, {nm[bj]}] = 0", comb((1, [Ei, bj]), (-1, [bj, Ei]))))
    return rels


def check_relations(M: LambdaExtModule, elements: Iterable) -> RelationReport:
    """Check every defining relation exactly on each given basis element."""
    elements = list(elements)
    results = []
    for name, f in relation_list(M):
        r = RelationResult(name)
        for x in elements:
            r.checked += 1
            res = f(x)
            if res:
                r.failures += 1
                if r.witness is None:
                    r.witness = M.label(x)
                    r.residual = _format_vec(M, res)
        results.append(r)
    return RelationReport(M.name, results, len(elements))


# ------------------------------------------------------------- periodic fold


def multi_indices(m: int, T: int) -> list[tuple]:
    """All alpha in N^m with |alpha| <= T, ordered by total degree then lexicographically."""
    out = [a for a in itertools.product(range(T + 1), repeat=m) if sum(a) <= T]
    return sorted(out, key=lambda a: (sum(a), a))


@dataclass(frozen=True)
class Window:
    key: tuple
    level: int
    parity: int
    floor: int | None = None

    def sort_key(self):
        return (self.key, self.level, self.parity, self.floor if self.floor is not None else 0)


class PeriodicBasis:
    """Ordered basis of one window of the folded periodic complex."""

    def __init__(self, M: LambdaExtModule, W: Window):
        self.window = W
        elems = []
        if W.level >= 0:
            for alpha in multi_indices(M.m, W.level):
                if M.filtered:
                    top = W.key[0] + sum(a * s[0] for a, s in zip(alpha, M.shifts))
                    for v in range(0, top + 1):
                        for x in M.elements((v,), W.parity, W.floor):
                            elems.append((alpha, x))
                else:
                    k = W.key
                    for a, s in zip(alpha, M.shifts):
                        if a:
                            k = _vadd(k, s, a)
                    for x in M.elements(k, W.parity, W.floor):
                        elems.append((alpha, x))
        self.elements = elems
        self.index = {el: j for j, el in enumerate(elems)}

    def __len__(self) -> int:
        return len(self.elements)


class PeriodicComplex:
    """Folded periodic complex of a module with tau-truncation windows."""

    def __init__(self, M: LambdaExtModule):
        self.M = M
        self._bases: dict[Window, PeriodicBasis] = {}
        self._D: dict = {}
        self._H: dict = {}

    def basis(self, W: Window) -> PeriodicBasis:
        b = self._bases.get(W)
        if b is None:
            b = PeriodicBasis(self.M, W)
            self._bases[W] = b
        return b

    def _matrix(self, src: Window, tgt: Window, image: Callable) -> SparseMatrix:
        S, T = self.basis(src), self.basis(tgt)
        idx = T.index
        cols = []
        for el in S.elements:
            col = {}
            for el2, c in image(el).items():
                j = idx.get(el2)
                if j is None:
                    if self._dropped(el2, tgt):
                        continue
                    raise KeyError(f"{self.M.label(el2[1])} at tau^{el2[0]} is missing from window {tgt}")
                col[j] = col.get(j, 0) + c
            cols.append({j: v for j, v in col.items() if v})
        return SparseMatrix(len(T), len(S), cols)

    def _dropped(self, el, W: Window) -> bool:
        alpha, x = el
        if sum(alpha) > W.level:
            return True
        if W.floor is not None and self.M.degree(x) < W.floor:
            return True
        return False

    # tot operators on (alpha, x) ------------------------------------------
    def D_image(self, el) -> dict:
        alpha, x = el
        M = self.M
        out: dict = {}
        for y, c in M.d(x).items():
            add_into(out, {(alpha, y): c})
        for y, c in M.beta(0, x).items():
            add_into(out, {(alpha, y): c})
        for i in range(1, M.m + 1):
            a2 = tuple(a + (1 if j == i - 1 else 0) for j, a in enumerate(alpha))
            for y, c in M.beta(i, x).items():
                add_into(out, {(a2, y): c})
        return out

    def tau_image(self, i: int, el) -> dict:
        alpha, x = el
        a2 = tuple(a + (1 if j == i - 1 else 0) for j, a in enumerate(alpha))
        return {(a2, x): Q(1)}

    def dtilde_image(self, i: int, el, e_scale=1) -> dict:
        """(d/dtau_i - e_i - E_i)(el)."""
        alpha, x = el
        M = self.M
        out: dict = {}
        ai = alpha[i - 1]
        if ai:
            a2 = tuple(a - (1 if j == i - 1 else 0) for j, a in enumerate(alpha))
            out[(a2, x)] = Q(ai)
        for y, c in M.e(i, x).items():
            add_into(out, {(alpha, y): -c})
        for y, c in M.E(i, x).items():
            add_into(out, {(alpha, y): -c})
        return out

    # windows --------------------------------------------------------------
    def _floors(self, W: Window):
        if W.floor is None:
            return None, None
        return W.floor - 1, W.floor + 1

    def D(self, src: Window, tgt: Window) -> SparseMatrix:
        k = (src, tgt)
        out = self._D.get(k)
        if out is None:
            out = self._matrix(src, tgt, self.D_image)
            self._D[k] = out
        return out

    def neighbours(self, W: Window) -> tuple[Window, Window]:
        fi, fo = self._floors(W)
        p = 1 - W.parity
        return Window(W.key, W.level, p, fi), Window(W.key, W.level, p, fo)

    def homology(self, W: Window) -> SubquotientBasis:
        H = self._H.get(W)
        if H is None:
            src, tgt = self.neighbours(W)
            H = homology(self.D(src, W), self.D(W, tgt))
            self._H[W] = H
        return H

    def D_squared_zero(self, W: Window) -> bool:
        src, tgt = self.neighbours(W)
        return (self.D(W, tgt) @ self.D(src, W)).is_zero()

    # chain maps between windows -------------------------------------------
    def tau_matrix(self, i: int, W: Window) -> tuple[Window, SparseMatrix]:
        s = self.M.shifts[i - 1]
        tgt = Window(_vadd(W.key, s, -1) if not self.M.filtered else W.key, W.level + 1, W.parity, W.floor)
        return tgt, self._matrix(W, tgt, lambda el: self.tau_image(i, el))

    def dtilde_matrix(self, i: int, W: Window) -> tuple[Window, SparseMatrix]:
        s = self.M.shifts[i - 1]
        tgt = Window(_vadd(W.key, s, 1), W.level - 1, W.parity, W.floor)
        return tgt, self._matrix(W, tgt, lambda el: self.dtilde_image(i, el))

    def pi_matrix(self, W: Window) -> tuple[Window, SparseMatrix]:
        tgt = Window(W.key, W.level - 1, W.parity, W.floor)
        return tgt, self._matrix(W, tgt, lambda el: {el: Q(1)})

    def floor_matrix(self, W: Window, new_floor: int) -> tuple[Window, SparseMatrix]:
        tgt = Window(W.key, W.level, W.parity, new_floor)
        return tgt, self._matrix(W, tgt, lambda el: {el: Q(1)})

    def induced(self, Hs: SubquotientBasis, Ht: SubquotientBasis, A: SparseMatrix) -> list[list]:
        """Matrix (rows = dim Ht) of the map on homology induced by the chain map A."""
        cols = []
        for r in Hs.reps:
            z = A.apply(r)
            try:
                cols.append(Ht.coordinates(z))
            except Exception as exc:
                raise DescentFailure(f"image of a cycle is not a cycle: {exc}") from None
        return [[cols[j][i] for j in range(len(cols))] for i in range(Ht.dim)]


def _zero_matrix(rows: int, cols: int) -> list[list]:
    return [[gmpy2.mpq(0)] * cols for _ in range(rows)]


def _mat_mul(a: list[list], b: list[list], rows: int, inner: int, cols: int) -> list[list]:
    out = _zero_matrix(rows, cols)
    for i in range(rows):
        ai = a[i]
        oi = out[i]
        for k in range(inner):
            x = ai[k]
            if x:
                bk = b[k]
                for j in range(cols):
                    if bk[j]:
                        oi[j] += x * bk[j]
    return out


# ------------------------------------------------------------ Weyl action


@dataclass
class WeylActionData:
    """Homology of a family of windows with the tau, d-tilde and tower maps.

    ``maps[(kind, i, W)] = (W2, matrix)`` where kind is "tau", "dtilde",
    "pi" (tower map) or "floor" (degree floor comparison for unweighted input);
    matrices are dense lists of rows.
    """

    module: str
    m: int
    dims: dict[Window, int]
    maps: dict[tuple, tuple[Window, list[list]]]
    weights: dict[Window, int]
    stable: dict[Window, bool] = field(default_factory=dict)
    complex: PeriodicComplex | None = field(default=None, repr=False)
    semantics: str = "quotient"

    def windows(self) -> list[Window]:
        return sorted(self.dims, key=Window.sort_key)

    def dim_table(self) -> dict[tuple[int, int, int], int]:
        """Dimensions summed over keys: (parity, weight, level) -> dim."""
        out: dict = {}
        for W, n in self.dims.items():
            k = (W.parity, self.weights[W], W.level)
            out[k] = out.get(k, 0) + n
        return out

    def stable_table(self) -> dict[tuple[int, int, int], bool]:
        out: dict = {}
        for W in self.dims:
            k = (W.parity, self.weights[W], W.level)
            if W in self.stable:
                out[k] = out.get(k, True) and self.stable[W]
        return out


def _zero(rows: int, cols: int):
    return _zero_matrix(rows, cols)


_JOB_COMPLEX: PeriodicComplex | None = None


def _homology_job(W: Window):
    return W, _JOB_COMPLEX.homology(W)


def prefetch_homology(P: PeriodicComplex, windows: Iterable[Window], jobs: int = 1) -> None:
    """Compute window homologies in ``jobs`` forked worker processes.

    Results are identical to the serial computation; with ``jobs <= 1`` this
    does nothing and homologies are computed lazily.
    """
    global _JOB_COMPLEX
    todo = [W for W in windows if W not in P._H]
    if jobs <= 1 or len(todo) < 2:
        return
    import multiprocessing

    _JOB_COMPLEX = P
    try:
        with multiprocessing.get_context("fork").Pool(jobs) as pool:
            for W, H in pool.imap_unordered(_homology_job, todo, chunksize=max(1, len(todo) // (4 * jobs))):
                P._H[W] = H
    finally:
        _JOB_COMPLEX = None


def weyl_action(P: PeriodicComplex, windows: Iterable[Window], weights: Mapping[Window, int] | None = None,
                floor_step: int | None = None, jobs: int = 1) -> WeylActionData:
    """Homology of every window with all maps between computed windows.

    ``windows`` should be closed under lowering the level (the tower).  Maps
    whose target window is not in the set are omitted.  For unweighted input
    with floors, ``floor_step`` (normally 2) adds the floor comparison maps to
    windows with floor raised by that amount, when present.
    """
    M = P.M
    windows = sorted(set(windows), key=Window.sort_key)
    wset = set(windows)
    prefetch_homology(P, windows, jobs)
    dims = {}
    for W in windows:
        dims[W] = P.homology(W).dim
    maps: dict = {}

    def add(kind, i, W, tgt, A):
        if tgt not in wset:
            return
        maps[(kind, i, W)] = (tgt, P.induced(P.homology(W), P.homology(tgt), A))

    for W in windows:
        if W.level >= 1:
            tgt, A = P.pi_matrix(W)
            add("pi", 0, W, tgt, A)
        for i in range(1, M.m + 1):
            s = M.shifts[i - 1]
            t_tgt = Window(_vadd(W.key, s, -1), W.level + 1, W.parity, W.floor)
            if t_tgt in wset:
                tgt, A = P.tau_matrix(i, W)
                add("tau", i, W, tgt, A)
            if W.level >= 1:
                d_tgt = Window(_vadd(W.key, s, 1), W.level - 1, W.parity, W.floor)
                if d_tgt in wset:
                    tgt, A = P.dtilde_matrix(i, W)
                    add("dtilde", i, W, tgt, A)
        if floor_step is not None and W.floor is not None:
            tgt_w = Window(W.key, W.level, W.parity, W.floor + floor_step)
            if tgt_w in wset:
                tgt, A = P.floor_matrix(W, W.floor + floor_step)
                add("floor", 0, W, tgt, A)
    weights = dict(weights) if weights is not None else {W: M.key_weight(W.key) if M.weighted else 0 for W in windows}
    data = WeylActionData(M.name, M.m, dims, maps, weights, complex=P)
    # stability along the tower: compare level T with T+1
    for W in windows:
        up = Window(W.key, W.level + 1, W.parity, W.floor)
        if up in wset:
            ok = dims[up] == dims[W] and dense_rank(maps[("pi", 0, up)][1]) == dims[W]
            data.stable[W] = ok
    return data


def polynomial_tau_homology(P: PeriodicComplex, W: Window, margin: int = 2) -> SubquotientBasis:
    """Homology of the tau-polynomial complex restricted to tau-degree <= W.level.

    Cycles are the elements of the window basis killed by the untruncated D;
    boundaries are the images D(y) lying in tau-degree <= level, with y
    searched up to tau-degree ``level + margin``.  Increasing ``margin`` can
    only shrink the result; it is exact once the margin exceeds the
    tau-degree loss of D on boundaries.
    """
    key = ("poly", W, margin)
    H = P._H.get(key)
    if H is not None:
        return H
    up = Window(W.key, W.level + 1, 1 - W.parity)
    d_out = P.D(W, up)
    src = Window(W.key, W.level + margin, 1 - W.parity)
    tgt = Window(W.key, W.level + margin + 1, W.parity)
    A = P.D(src, tgt)
    Bt = P.basis(tgt)
    idx = P.basis(W).index
    high = {j for j, (alpha, _) in enumerate(Bt.elements) if sum(alpha) > W.level}
    hi_index = {j: r for r, j in enumerate(sorted(high))}
    A_high = SparseMatrix(len(high), A.cols, [{hi_index[j]: v for j, v in col.items() if j in high} for col in A.columns()])
    cols = []
    for k in kernel_basis_sparse(A_high):
        img = A.apply(k)
        cols.append({idx[Bt.elements[j]]: v for j, v in img.items()})
    d_in = SparseMatrix(len(idx), len(cols), cols)
    H = homology(d_in, d_out)
    P._H[key] = H
    return H


def polynomial_tau_action(P: PeriodicComplex, windows: Iterable[Window], weights: Mapping[Window, int] | None = None,
                          margin: int = 2) -> WeylActionData:
    """Weyl action on the tau-degree filtration of the genuine tau-polynomial homology.

    Maps: "tau" raises the level, "dtilde" keeps it, and "iota" is the
    filtration inclusion level T -> T+1.  The Weyl relation reads
    dtilde tau - tau dtilde = iota.
    """
    M = P.M
    windows = sorted({Window(W.key, W.level, W.parity) for W in windows}, key=Window.sort_key)
    wset = set(windows)
    H = {W: polynomial_tau_homology(P, W, margin) for W in windows}
    dims = {W: H[W].dim for W in windows}
    maps: dict = {}

    def add(kind, i, W, tgt, image):
        if tgt in wset:
            A = P._matrix(W, tgt, image)
            maps[(kind, i, W)] = (tgt, P.induced(H[W], H[tgt], A))

    for W in windows:
        add("iota", 0, W, Window(W.key, W.level + 1, W.parity), lambda el: {el: Q(1)})
        for i in range(1, M.m + 1):
            s = M.shifts[i - 1]
            add("tau", i, W, Window(_vadd(W.key, s, -1), W.level + 1, W.parity), lambda el, i=i: P.tau_image(i, el))
            add("dtilde", i, W, Window(_vadd(W.key, s, 1), W.level, W.parity), lambda el, i=i: P.dtilde_image(i, el))
    weights = dict(weights) if weights is not None else {W: M.key_weight(W.key) for W in windows}
    weights = {W: weights.get(W, weights.get(Window(W.key, W.level, W.parity, None), 0)) for W in windows}
    data = WeylActionData(M.name, M.m, dims, maps, weights, complex=P, semantics="polynomial")
    for W in windows:
        got = maps.get(("iota", 0, W))
        if got is not None:
            data.stable[W] = dims[got[0]] == dims[W] and dense_rank(got[1]) == dims[W]
    return data


def _identity(n: int) -> list[list]:
    return [[gmpy2.mpq(1 if i == j else 0) for j in range(n)] for i in range(n)]


def _sub(a, b):
    return [[x - y for x, y in zip(r, s)] for r, s in zip(a, b)]


def _is_zero(a) -> bool:
    return all(not x for r in a for x in r)


@dataclass
class WeylCheck:
    name: str
    window: Window
    ok: bool
    residual_rank: int = 0

    def as_dict(self, weights: Mapping | None = None) -> dict:
        return {"relation": self.name, "window": window_dict(self.window, weights), "ok": self.ok}


def window_dict(W: Window, weights: Mapping | None = None) -> dict:
    out = {"key": list(W.key), "level": W.level, "parity": "ev" if W.parity == 0 else "od"}
    if weights is not None and W in weights:
        out["weight"] = weights[W]
    if W.floor is not None:
        out["floor"] = W.floor
    return out


def _compose_maps(data: WeylActionData, chain: Sequence[tuple[str, int]], W: Window):
    """Apply maps right to left starting at W; returns (target, matrix) or None if unavailable.

    A level -1 target means the zero space, returned as a zero matrix.
    """
    cur = W
    mat = _identity(data.dims[W])
    for kind, i in reversed(chain):
        if cur.level < 0:
            return cur, mat
        if kind == "dtilde" and cur.level == 0 and data.semantics == "quotient":
            s = data_shift(data, i)
            cur = Window(_vadd(cur.key, s, 1), -1, cur.parity, cur.floor)
            mat = _zero(0, len(mat[0]) if mat else data.dims[W])
            continue
        got = data.maps.get((kind, i, cur))
        if got is None:
            return None
        tgt, A = got
        mat = _mat_mul(A, mat, data.dims[tgt], data.dims[cur], len(mat[0]) if mat else data.dims[W])
        cur = tgt
    return cur, mat


def data_shift(data: WeylActionData, i: int) -> tuple:
    return data.complex.M.shifts[i - 1]


def check_weyl_relations(data: WeylActionData) -> list[WeylCheck]:
    """dtilde_i tau_j - tau_j dtilde_i = delta_ij on every window where all maps exist."""
    out = []
    for W in data.windows():
        n = data.dims[W]
        for i in range(1, data.m + 1):
            for j in range(1, data.m + 1):
                a = _compose_maps(data, [("dtilde", i), ("tau", j)], W)
                b = _compose_maps(data, [("tau", j), ("dtilde", i)], W)
                if a is None or b is None:
                    continue
                (ta, A), (tb, B) = a, b
                if tb.level < 0 or not B:
                    B = _zero(data.dims.get(ta, 0), n)
                if ta.level < 0:
                    continue
                R = _sub(A, B)
                if i == j and data.semantics == "polynomial":
                    inc = _compose_maps(data, [("iota", 0)], W)
                    if inc is None or inc[0] != ta:
                        continue
                    R = _sub(R, inc[1])
                elif i == j:
                    R = _sub(R, _identity(n))
                out.append(WeylCheck(f"dtilde{i} tau{j} - tau{j} dtilde{i} = {'1' if i == j else '0'}", W, _is_zero(R)))
        # tower compatibility: pi commutes with tau and dtilde
    return out


def weyl_commutator_on_homology(data: WeylActionData) -> list[WeylCheck]:
    """[dtilde_i, dtilde_j] on homology for i < j, on windows where it is defined."""
    out = []
    if data.m < 2:
        return out
    for W in data.windows():
        if W.level < 2:
            continue
        for i in range(1, data.m + 1):
            for j in range(i + 1, data.m + 1):
                a = _compose_maps(data, [("dtilde", i), ("dtilde", j)], W)
                b = _compose_maps(data, [("dtilde", j), ("dtilde", i)], W)
                if a is None or b is None:
                    continue
                R = _sub(a[1], b[1])
                out.append(WeylCheck(f"[dtilde{i}, dtilde{j}] = 0", W, _is_zero(R), dense_rank(R)))
    return out


def chain_commutator_witness(P: PeriodicComplex, W: Window, i: int, j: int) -> str | None:
    """A basis element on which [dtilde_i, dtilde_j] is nonzero at chain level, if any."""
    for el in P.basis(W).elements:
        a: dict = {}
        for y, c in P.dtilde_image(j, el).items():
            add_into(a, P.dtilde_image(i, y), c)
        for y, c in P.dtilde_image(i, el).items():
            add_into(a, P.dtilde_image(j, y), -c)
        a = {k: v for k, v in a.items() if sum(k[0]) <= W.level - 2}
        if a:
            alpha, x = el
            return f"tau^{list(alpha)} {P.M.label(x)}"
    return None


def check_tower_compatibility(data: WeylActionData) -> list[WeylCheck]:
    """The tower maps (pi, or iota for the polynomial semantics) commute with tau_i and dtilde_i."""
    out = []
    tower = "pi" if data.semantics == "quotient" else "iota"
    for W in data.windows():
        for i in range(1, data.m + 1):
            for kind in ("tau", "dtilde"):
                a = _compose_maps(data, [(tower, 0), (kind, i)], W)
                b = _compose_maps(data, [(kind, i), (tower, 0)], W)
                if a is None or b is None or a[0].level < 0 or b[0].level < 0:
                    continue
                out.append(WeylCheck(f"{tower} {kind}{i} = {kind}{i} {tower}", W, _is_zero(_sub(a[1], b[1]))))
    return out


# --------------------------------------------------------------- intertwiner


@dataclass
class Intertwiner:
    blocks: dict[Window, list[list]]
    components: int
    equations: int

    def as_dict(self, weights: Mapping | None = None) -> list:
        out = []
        for W in sorted(self.blocks, key=Window.sort_key):
            B = self.blocks[W]
            if not B:
                continue
            out.append({"window": window_dict(W, weights), "matrix": [[format_rational(x) for x in r] for r in B]})
        return out


def intertwiner_solve(D1: WeylActionData, D2: WeylActionData, seed: int = 0, attempts: int = 25) -> Intertwiner | None:
    """Invertible maps phi_W: H1(W) -> H2(W) commuting with every recorded map.

    Raises DimensionMismatch if some window has different dimensions.
    Returns None when the solution space contains no invertible choice.
    """
    common = sorted(set(D1.dims) & set(D2.dims), key=Window.sort_key)
    for W in common:
        if D1.dims[W] != D2.dims[W]:
            raise DimensionMismatch(W, D1.dims[W], D2.dims[W])
    wset = set(common)
    # union-find over windows linked by maps
    parent = {W: W for W in common}

    def find(W):
        while parent[W] != W:
            parent[W] = parent[parent[W]]
            W = parent[W]
        return W

    links = []
    for key, (tgt, A1) in D1.maps.items():
        kind, i, W = key
        if W not in wset or tgt not in wset:
            continue
        got = D2.maps.get(key)
        if got is None:
            continue
        links.append((W, tgt, A1, got[1]))
        parent[find(W)] = find(tgt)
    groups: dict = {}
    for W in common:
        if D1.dims[W]:
            groups.setdefault(find(W), []).append(W)
    group_links: dict = {}
    for W, tgt, A1, A2 in links:
        if D1.dims[W] and D1.dims[tgt]:
            group_links.setdefault(find(W), []).append((W, tgt, A1, A2))
    rng = random.Random(seed)
    blocks: dict = {W: [] for W in common}
    n_eq = 0
    for root, ws in sorted(groups.items(), key=lambda kv: kv[0].sort_key()):
        offs = {}
        nvar = 0
        for W in ws:
            offs[W] = nvar
            nvar += D1.dims[W] ** 2

        def var(W, r, c):
            return offs[W] + r * D1.dims[W] + c

        rows = []
        for W, tgt, A1, A2 in group_links.get(root, []):
            n1, n2 = D1.dims[W], D1.dims[tgt]
            # phi_tgt A1 - A2 phi_W = 0, entry (r, c) with r < n2, c < n1
            for r in range(n2):
                for c in range(n1):
                    row = {}
                    for k in range(n2):
                        a = A1[k][c]
                        if a:
                            v = var(tgt, r, k)
                            row[v] = row.get(v, 0) + a
                    for k in range(n1):
                        a = A2[r][k]
                        if a:
                            v = var(W, k, c)
                            row[v] = row.get(v, 0) - a
                    row = {k: v for k, v in row.items() if v}
                    if row:
                        rows.append(row)
        n_eq += len(rows)
        M = SparseMatrix(len(rows), nvar, [dict() for _ in range(nvar)])
        cols = [dict() for _ in range(nvar)]
        for ri, row in enumerate(rows):
            for v, a in row.items():
                cols[v][ri] = a
        M = SparseMatrix(len(rows), nvar, cols)
        ker = kernel_basis_sparse(M)
        if not ker:
            return None
        found = None
        for attempt in range(attempts):
            if attempt == 0 and len(ker) == 1:
                coeffs = [1]
            else:
                coeffs = [rng.randint(-7, 7) for _ in ker]
            sol: dict = {}
            for c, k in zip(coeffs, ker):
                add_into(sol, k, c)
            blks = {}
            good = True
            for W in ws:
                n = D1.dims[W]
                B = [[sol.get(var(W, r, c), gmpy2.mpq(0)) for c in range(n)] for r in range(n)]
                if dense_rank(B) != n:
                    good = False
                    break
                blks[W] = B
            if good:
                found = blks
                break
        if found is None:
            return None
        blocks.update(found)
    # final exact verification
    for W, tgt, A1, A2 in links:
        n1, n2 = D1.dims[W], D1.dims[tgt]
        if not n1 or not n2:
            continue
        lhs = _mat_mul(blocks[tgt], A1, n2, n2, n1)
        rhs = _mat_mul(A2, blocks[W], n2, n1, n1)
        if lhs != rhs:
            raise AssertionError("intertwiner verification failed")
    return Intertwiner(blocks, len(groups), n_eq)


def induced_map_intertwines(D1: WeylActionData, D2: WeylActionData, phi: Mapping[Window, list[list]]) -> bool:
    """True if the given block maps commute with every recorded map."""
    for key, (tgt, A1) in D1.maps.items():
        got = D2.maps.get(key)
        W = key[2]
        if got is None or W not in phi or tgt not in phi:
            continue
        A2 = got[1]
        n1, n2 = D1.dims[W], D1.dims[tgt]
        m1, m2 = D2.dims[W], D2.dims[tgt]
        if not n1 or not m2:
            continue
        lhs = _mat_mul(phi[tgt], A1, m2, n2, n1) if n2 else _zero(m2, n1)
        rhs = _mat_mul(A2, phi[W], m2, m1, n1) if m1 else _zero(m2, n1)
        if lhs != rhs:
            return False
    return True


# ------------------------------------------------------------ weak morphisms


@dataclass
class WeakMorphismResult:
    strict: bool
    homotopies: dict[int, dict]  # i -> {window: dense solution}
    windows: int

    @property
    def found(self) -> bool:
        return self.homotopies is not None


def is_weak_morphism(phi: Callable, M1: LambdaExtModule, M2: LambdaExtModule, windows: Iterable[tuple]):
    """Search for homotopies h_i with (e_i+E_i) phi - phi (e_i+E_i) = D h_i + h_i D.

    ``phi`` maps a basis element of M1 to a vector of M2 and must commute with
    d and all beta's.  ``windows`` lists (key, level) pairs; on each, h_i is an
    unknown odd map from the folded window of M1 to the window of M2 with key
    shifted by shift[i], solved for both parities at once.  Returns a
    WeakMorphismResult whose ``homotopies`` is None if some window has no
    solution.
    """
    from .linalg import solve_affine_sparse

    P1, P2 = PeriodicComplex(M1), PeriodicComplex(M2)
    windows = list(windows)
    hom: dict = {}
    strict = True
    for i in range(1, M1.m + 1):
        hom[i] = {}
        s = M1.shifts[i - 1]

        def ext(x):
            out: dict = {}
            add_into(out, M1.e(i, x))
            add_into(out, M1.E(i, x))
            return out

        def comm(el):
            alpha, x = el
            out: dict = {}
            for y, c in phi(x).items():
                add_into(out, {(alpha, z): c * c2 for z, c2 in M2.e(i, y).items()})
                add_into(out, {(alpha, z): c * c2 for z, c2 in M2.E(i, y).items()})
            for z, c in ext(x).items():
                add_into(out, {(alpha, y): -c * c2 for y, c2 in phi(z).items()})
            return out

        for key, T in windows:
            src = [Window(key, T, p) for p in (0, 1)]
            tgt = [Window(_vadd(key, s, 1), T, p) for p in (0, 1)]
            ns = [len(P1.basis(W)) for W in src]
            nt = [len(P2.basis(W)) for W in tgt]
            # unknown h_p : src[p] -> tgt[1-p], entries (r, c) row-major after offset
            off = [0, nt[1] * ns[0]]
            nvar = off[1] + nt[0] * ns[1]
            cols = [dict() for _ in range(nvar)]
            eq_index: dict = {}
            rhs: dict = {}

            def eq(p, r, c):
                k = (p, r, c)
                j = eq_index.get(k)
                if j is None:
                    j = len(eq_index)
                    eq_index[k] = j
                return j

            for p in (0, 1):
                q = 1 - p
                C = P2._matrix(src[p], tgt[p], comm) if ns[p] and nt[p] else None
                if C is not None:
                    for c, col in enumerate(C.columns()):
                        for r, v in col.items():
                            rhs[eq(p, r, c)] = v
                            strict = False
                # D2 h_p : src[p] -> tgt[q] -> tgt[p]
                D2 = P2.D(tgt[q], tgt[p])
                for c in range(ns[p]):
                    for k in range(nt[q]):
                        var = off[p] + k * ns[p] + c
                        for r, a in D2.column(k).items():
                            cols[var][eq(p, r, c)] = cols[var].get(eq(p, r, c), 0) + a
                # h_q D1 : src[p] -> src[q] -> tgt[p]
                D1 = P1.D(src[p], src[q])
                for c in range(ns[p]):
                    for j, a in D1.column(c).items():
                        for r in range(nt[p]):
                            var = off[q] + r * ns[q] + j
                            cols[var][eq(p, r, c)] = cols[var].get(eq(p, r, c), 0) + a
            cols = [{k: v for k, v in col.items() if v} for col in cols]
            A = SparseMatrix(len(eq_index) or 0, nvar, cols) if eq_index else SparseMatrix(0, nvar)
            if any(k >= A.rows for k in rhs):
                return WeakMorphismResult(strict, None, len(windows))
            x = solve_affine_sparse(A, rhs)
            if x is None:
                return WeakMorphismResult(strict, None, len(windows))
            hom[i][(key, T)] = x
    return WeakMorphismResult(strict, hom, len(windows))
