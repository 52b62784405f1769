"""Normalized Hochschild chains of a dg category with the twisted operator suite.

A chain ``a0[a_n|...|a_1]`` is stored as ``(a0, (a_n, ..., a_1))`` in written
order, with basis labels supplied by a category engine from :mod:`dgcat`.
Chains with an identity in a bracket slot are never generated; operator
outputs with such a slot are dropped.

The operators are b, Connes' B, and for a central element t the maps
beta(t) (insert t in every gap), e(t) (multiply a0 by t) and E(t) (a cyclic
rotation combined with an insertion of t).  Signs use the exponents
``eta_p = |a0| + sum_{q >= p} (|a_q| + 1)`` for p = 1..n and
``eta_{n+1} = |a0|``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Sequence

from .dgcat import (
    CentralFamily,
    DgCategoryPresentation,
    DgFunctorPresentation,
    FiniteCategory,
    PolynomialAlgebraPresentation,
    PolynomialCategory,
    enumerate_monomials,
    matrix_category,
)
from .lambdamod import LambdaExtModule, WindowInfinite, _vadd
from .linalg import Q, SparseMatrix, add_into, homology, solve_affine_sparse


class NotStrictMorphism(ValueError):
    pass


Chain = tuple  # (a0, slots)


def _sign(k: int) -> int:
    return -1 if k & 1 else 1


class HochschildModule(LambdaExtModule):
    """The chain module C(A, t) of a category engine."""

    def __init__(self, cat, name: str = "Hochschild"):
        super().__init__()
        self.cat = cat
        self.m = cat.m
        self.name = name
        self.weighted = cat.weighted
        self.filtered = False
        shifts = [cat.central_shift(i) for i in range(self.m)]
        if any(s is None for s in shifts):
            if cat.kind != "polynomial":
                raise ValueError("inhomogeneous central elements are only supported for polynomial algebras")
            self.filtered = True
            P = cat.presentation
            cat.projection = [tuple(P.weights)]
            self.shifts = [(d,) for d in P.degrees()]
        else:
            self.shifts = shifts
        if cat.kind == "polynomial":
            self._lam = _weight_functional(cat.projection, cat.weights)

    # labels and gradings ------------------------------------------------
    def label(self, ch: Chain) -> str:
        a0, S = ch
        L = self.cat.label
        return f"{L(a0)}[{'|'.join(L(a) for a in S)}]"

    def degree(self, ch: Chain) -> int:
        a0, S = ch
        deg = self.cat.degree
        return deg(a0) + sum(deg(a) - 1 for a in S)

    def key(self, ch: Chain) -> tuple:
        a0, S = ch
        k = self.cat.key(a0)
        for a in S:
            k = _vadd(k, self.cat.key(a))
        return k

    def key_weight(self, key: tuple) -> int:
        if self.cat.kind == "polynomial":
            return int(sum(l * k for l, k in zip(self._lam, key)))
        return key[0] if key else 0

    def element_keys(self, weight: int) -> list:
        if self.cat.kind == "polynomial":
            return sorted({self.cat.key(E) for E in enumerate_monomials(self.cat.weights, weight)})
        return [(weight,)] if self.weighted else [()]

    def op_names(self) -> dict:
        names = {("d", 0): "b", ("beta", 0): "B"}
        for i in range(1, self.m + 1):
            names[("beta", i)] = f"beta(t{i})"
            names[("e", i)] = f"e(t{i})"
            names[("E", i)] = f"E(t{i})"
        return names

    # enumeration --------------------------------------------------------
    def _elements(self, key, parity, floor):
        cat = self.cat
        if cat.kind == "polynomial":
            out = []
            if self.filtered:
                exps = enumerate_monomials(cat.weights, key[0])
            else:
                exps = [E for E in enumerate_monomials(cat.weights, self.key_weight(key)) if cat.key(E) == key]
            for E in exps:
                out.extend(ch for ch in polynomial_chains(E) if len(ch[1]) % 2 == parity)
            return sorted(out, key=lambda ch: (len(ch[1]), ch[0], ch[1]))
        chains = finite_chains(cat, weight=key[0] if self.weighted else None, floor=floor)
        return [ch for ch in chains if self.degree(ch) % 2 == parity and self.key(ch) == key]

    def chains_of_weight(self, w: int) -> list:
        out = []
        for k in self.element_keys(w):
            for p in (0, 1):
                out.extend(self.elements(k, p))
        return sorted(out, key=lambda ch: (len(ch[1]), self.cat.order(ch[0]), tuple(self.cat.order(a) for a in ch[1])))

    def chains_of_length(self, N: int) -> list:
        if self.cat.kind == "polynomial":
            raise WindowInfinite("polynomial algebras are enumerated by weight")
        return finite_chains(self.cat, max_len=N)

    # operators ----------------------------------------------------------
    def _op(self, op, i, x):
        if op == "d":
            return hochschild_b(self.cat, x)
        if op == "beta":
            if i == 0:
                return connes_B(self.cat, x)
            return beta_op(self.cat, lambda o: self.cat.central(i - 1, o), x)
        if op == "e":
            return e_op(self.cat, lambda o: self.cat.central(i - 1, o), x)
        if op == "E":
            return E_op(self.cat, lambda o: self.cat.central(i - 1, o), x)
        raise KeyError(op)


def _weight_functional(projection, weights) -> list:
    """lambda with lambda . P = weights (rational entries)."""
    P = [list(r) for r in projection]
    if not P:
        return []
    A = SparseMatrix.from_dense([[P[r][c] for r in range(len(P))] for c in range(len(weights))], len(P))
    sol = solve_affine_sparse(A, list(weights))
    if sol is None:
        raise ValueError("the weight grading is not a function of the chain grading")
    return [sol.get(j, Q(0)) for j in range(len(P))]


# ------------------------------------------------------------- enumeration


@lru_cache(maxsize=None)
def _compositions(R: tuple) -> tuple:
    """Ordered sequences of nonzero exponent vectors summing to R."""
    if not any(R):
        return ((),)
    out = []
    for v in _below(R):
        if not any(v):
            continue
        rest = tuple(a - b for a, b in zip(R, v))
        for tail in _compositions(rest):
            out.append((v,) + tail)
    return tuple(out)


@lru_cache(maxsize=None)
def _below(R: tuple) -> tuple:
    import itertools

    return tuple(itertools.product(*[range(a + 1) for a in R]))


@lru_cache(maxsize=None)
def polynomial_chains(E: tuple) -> tuple:
    """All normalized chains of k[x] with total exponent vector E."""
    out = []
    for a0 in _below(E):
        rest = tuple(a - b for a, b in zip(E, a0))
        for S in _compositions(rest):
            out.append((a0, S))
    return tuple(out)


def finite_chains(cat: FiniteCategory, weight: int | None = None, floor: int | None = None, max_len: int | None = None) -> list:
    """Normalized chains of a finite category under the given budget.

    ``weight`` selects chains of that total weight (non-identity basis
    morphisms must then have positive weight); ``floor`` keeps chains of
    degree >= floor (all basis degrees must be <= 0); ``max_len`` bounds the
    number of slots.
    """
    names = [a for a in cat.names]
    if weight is not None:
        for a in names:
            if not cat.is_identity(a) and cat.wt[a] <= 0:
                raise WindowInfinite(f"basis morphism {a} has non-positive weight")
    elif floor is not None:
        if any(cat.degree(a) > 0 for a in names):
            raise WindowInfinite("degree floors need all basis degrees <= 0")
    elif max_len is None:
        raise WindowInfinite("a weight, a degree floor or a length bound is required")
    out = []

    def close(o0, on, slots, wsum, dsum):
        for a0 in cat.hom(on, o0):
            if weight is not None and wsum + cat.wt[a0] != weight:
                continue
            if floor is not None and dsum + cat.degree(a0) < floor:
                continue
            out.append((a0, tuple(reversed(slots))))

    def grow(o0, cur, slots, wsum, dsum):
        close(o0, cur, slots, wsum, dsum)
        if max_len is not None and len(slots) >= max_len:
            return
        for o in cat.objects:
            for a in cat.hom(cur, o):
                if cat.is_identity(a):
                    continue
                w2 = wsum + cat.wt[a]
                d2 = dsum + cat.degree(a) - 1
                if weight is not None and w2 > weight:
                    continue
                if floor is not None and d2 < floor:
                    continue
                slots.append(a)
                grow(o0, o, slots, w2, d2)
                slots.pop()

    for o0 in cat.objects:
        grow(o0, o0, [], 0, 0)
    order = cat.order
    return sorted(set(out), key=lambda ch: (len(ch[1]), order(ch[0]), tuple(order(a) for a in ch[1])))


# ---------------------------------------------------------------- operators


def _etas(cat, a0, S) -> list:
    """eta[p] for p = 1..n+1 (index 0 unused)."""
    n = len(S)
    eta = [0] * (n + 2)
    eta[n + 1] = cat.degree(a0)
    for p in range(n, 0, -1):
        eta[p] = eta[p + 1] + cat.degree(S[n - p]) + 1
    return eta


def _objects(cat, a0, S) -> list:
    """Objects a_0..a_n of the chain; a_p = target(a_p) and a_0 = target(a0)."""
    n = len(S)
    objs = [cat.target(a0)]
    for p in range(1, n + 1):
        objs.append(cat.target(S[n - p]))
    return objs


def _add(out: dict, ch, c):
    if not c:
        return
    v = out.get(ch, 0) + c
    if v:
        out[ch] = v
    else:
        out.pop(ch, None)


def hochschild_b(cat, ch: Chain) -> dict:
    a0, S = ch
    n = len(S)
    out: dict = {}
    eta = _etas(cat, a0, S)
    deg = cat.degree
    if cat.has_differential:
        for c, v in cat.differential(a0).items():
            _add(out, (c, S), v)
        for p in range(1, n + 1):
            j = n - p
            sg = -_sign(eta[p + 1])
            for c, v in cat.differential(S[j]).items():
                if cat.is_identity(c):
                    continue
                _add(out, (a0, S[:j] + (c,) + S[j + 1:]), sg * v)
    if n >= 1:
        sg = _sign(deg(a0))
        for c, v in cat.compose(a0, S[0]).items():
            _add(out, (c, S[1:]), sg * v)
        for p in range(2, n + 1):
            j = n - p  # a_p = S[j], a_{p-1} = S[j+1]
            sg = _sign(eta[p])
            for c, v in cat.compose(S[j], S[j + 1]).items():
                if cat.is_identity(c):
                    continue
                _add(out, (a0, S[:j] + (c,) + S[j + 2:]), sg * v)
        a1 = S[n - 1]
        sg = -_sign(eta[2] * (deg(a1) + 1))
        for c, v in cat.compose(a1, a0).items():
            _add(out, (c, S[:n - 1]), sg * v)
    return out


def connes_B(cat, ch: Chain) -> dict:
    a0, S = ch
    out: dict = {}
    if cat.is_identity(a0):
        return out
    n = len(S)
    eta = _etas(cat, a0, S)
    objs = _objects(cat, a0, S)
    for p in range(n + 1):
        sg = _sign(eta[1] * (eta[p + 1] + 1))
        slots = S[n - p:] + (a0,) + S[:n - p]
        _add(out, (cat.identity(objs[p]), slots), Q(sg))
    return out


def beta_op(cat, t: Callable, ch: Chain) -> dict:
    """beta(t) for a central family given as object -> linear combination."""
    a0, S = ch
    n = len(S)
    out: dict = {}
    eta = _etas(cat, a0, S)
    objs = _objects(cat, a0, S)
    for p in range(1, n + 2):
        sg = -_sign(eta[p])
        j = n - p + 1
        for c, v in t(objs[p - 1]).items():
            if cat.is_identity(c):
                continue
            _add(out, (a0, S[:j] + (c,) + S[j:]), sg * v)
    return out


def e_op(cat, t: Callable, ch: Chain) -> dict:
    a0, S = ch
    out: dict = {}
    for c, v in t(cat.target(a0)).items():
        for r, w in cat.compose(c, a0).items():
            _add(out, (r, S), v * w)
    return out


def E_op(cat, t: Callable, ch: Chain) -> dict:
    """E(t): sum over 1 <= p <= n+1, 0 <= l < p of
    sign * id[a_l|...|a_1|a0|a_n|...|a_p|t|a_{p-1}|...|a_{l+1}]."""
    a0, S = ch
    out: dict = {}
    if cat.is_identity(a0):
        return out
    n = len(S)
    eta = _etas(cat, a0, S)
    objs = _objects(cat, a0, S)
    for p in range(1, n + 2):
        tv = [(c, v) for c, v in t(objs[p - 1]).items() if not cat.is_identity(c)]
        if not tv:
            continue
        j = n - p + 1
        for l in range(p):
            sg = _sign(eta[p] + (eta[1] - 1) * eta[l + 1])
            head = S[n - l:] + (a0,) + S[:j]
            tail = S[j:n - l]
            ident = cat.identity(objs[l])
            for c, v in tv:
                _add(out, (ident, head + (c,) + tail), sg * v)
    return out


def guillemet_op(cat, t: Callable, ch: Chain) -> tuple[dict, dict]:
    """The ungraded 't.' operator split into its u^0 and u^1 parts.

    The u^0 part is left multiplication by t; the u^1 part uses the same slot
    pattern as E(t) with sign (-1)^(p + n l + 1).
    """
    a0, S = ch
    u0 = e_op(cat, t, ch)
    u1: dict = {}
    if cat.is_identity(a0):
        return u0, u1
    n = len(S)
    objs = _objects(cat, a0, S)
    for p in range(1, n + 2):
        j = n - p + 1
        for l in range(p):
            sg = _sign(p + n * l + 1)
            head = S[n - l:] + (a0,) + S[:j]
            tail = S[j:n - l]
            for c, v in t(objs[p - 1]).items():
                if cat.is_identity(c):
                    continue
                _add(u1, (cat.identity(objs[l]), head + (c,) + tail), sg * v)
    return u0, u1


# --------------------------------------------------------------- windows


@dataclass(frozen=True)
class ChainWindow:
    """A finite piece of the chain space: one weight, or a length bound."""

    weight: int | None = None
    length_bound: int | None = None


@dataclass
class WindowOperator:
    matrix: SparseMatrix
    source: list
    target: list


def enumerate_chain_basis(M: HochschildModule, window: ChainWindow) -> list:
    if window.weight is not None and M.weighted:
        chains = M.chains_of_weight(window.weight)
        if window.length_bound is not None:
            chains = [c for c in chains if len(c[1]) <= window.length_bound]
        return chains
    if window.length_bound is None:
        raise WindowInfinite("finite tables without weights need a length bound")
    return M.chains_of_length(window.length_bound)


def _shifted_window(M: HochschildModule, window: ChainWindow, dw: int, dl: int) -> ChainWindow:
    return ChainWindow(None if window.weight is None else window.weight + dw,
                       None if window.length_bound is None else window.length_bound + dl)


def operator_matrix(M: LambdaExtModule, op: str, i: int, source: Sequence, target: Sequence) -> SparseMatrix:
    idx = {x: j for j, x in enumerate(target)}
    cols = []
    for x in source:
        col = {}
        for y, c in M.apply(op, i, x).items():
            j = idx.get(y)
            if j is None:
                raise KeyError(f"{M.label(y)} is not in the target basis")
            col[j] = c
        cols.append(col)
    return SparseMatrix(len(target), len(source), cols)


def _t_weight(M: HochschildModule, i: int) -> int:
    if i == 0 or not M.weighted:
        return 0
    return M.key_weight(M.shifts[i - 1]) if not M.filtered else M.shifts[i - 1][0]


def _window_op(M, window, op, i, dl):
    src = enumerate_chain_basis(M, window)
    tgt = enumerate_chain_basis(M, _shifted_window(M, window, _t_weight(M, i) if op != "d" else 0, dl))
    return WindowOperator(operator_matrix(M, op, i, src, tgt), src, tgt)


def operator_b(M: HochschildModule, window: ChainWindow) -> WindowOperator:
    return _window_op(M, window, "d", 0, 0)


def operator_B(M: HochschildModule, window: ChainWindow) -> WindowOperator:
    return _window_op(M, window, "beta", 0, 1)


def operator_beta(M: HochschildModule, i: int, window: ChainWindow) -> WindowOperator:
    return _window_op(M, window, "beta", i, 1)


def operator_e(M: HochschildModule, i: int, window: ChainWindow) -> WindowOperator:
    return _window_op(M, window, "e", i, 0)


def operator_E(M: HochschildModule, i: int, window: ChainWindow) -> WindowOperator:
    return _window_op(M, window, "E", i, 2)


def operator_guillemet(M: HochschildModule, i: int, window: ChainWindow) -> tuple[WindowOperator, WindowOperator]:
    src = enumerate_chain_basis(M, window)
    w = _t_weight(M, i)
    t0 = enumerate_chain_basis(M, _shifted_window(M, window, w, 0))
    t1 = enumerate_chain_basis(M, _shifted_window(M, window, w, 2))
    i0, i1 = {x: j for j, x in enumerate(t0)}, {x: j for j, x in enumerate(t1)}
    c0, c1 = [], []
    t = lambda o: M.cat.central(i - 1, o)
    for x in src:
        u0, u1 = guillemet_op(M.cat, t, x)
        c0.append({i0[y]: c for y, c in u0.items()})
        c1.append({i1[y]: c for y, c in u1.items()})
    return (WindowOperator(SparseMatrix(len(t0), len(src), c0), src, t0),
            WindowOperator(SparseMatrix(len(t1), len(src), c1), src, t1))


# ------------------------------------------------------------ constructors


def assemble_module(cat_or_presentation, t: CentralFamily | None = None, name: str | None = None) -> HochschildModule:
    """C(A, t) for a finite presentation (with family t) or a polynomial algebra."""
    if isinstance(cat_or_presentation, PolynomialAlgebraPresentation):
        return HochschildModule(PolynomialCategory(cat_or_presentation), name or "Hochschild")
    if isinstance(cat_or_presentation, DgCategoryPresentation):
        return HochschildModule(FiniteCategory(cat_or_presentation, t), name or "Hochschild")
    return HochschildModule(cat_or_presentation, name or "Hochschild")


def induced_map(F: DgFunctorPresentation, src: HochschildModule, tgt: HochschildModule) -> Callable[[Chain], dict]:
    """The chain map a0[a_n|...|a_1] -> F(a0)[F(a_n)|...|F(a_1)] in the engines' bases."""
    cs, ct = src.cat, tgt.cat
    fmap: dict = {}
    for a in cs.names:
        fmap[a] = ct.to_new(F.apply(cs.to_old({a: 1})))

    def phi(ch: Chain) -> dict:
        a0, S = ch
        terms = [((), Q(1))]
        for a in S:
            nxt = []
            img = [(c, v) for c, v in fmap[a].items() if not ct.is_identity(c)]
            for slots, coeff in terms:
                for c, v in img:
                    nxt.append((slots + (c,), coeff * v))
            terms = nxt
            if not terms:
                return {}
        out: dict = {}
        for c0, v0 in fmap[a0].items():
            for slots, coeff in terms:
                _add(out, (c0, slots), v0 * coeff)
        return out

    return phi


class ConeModule(LambdaExtModule):
    """Cone of a strict morphism phi: sub -> ambient, i.e. ambient + sub[1].

    Elements are ("a", x) and ("s", y); d(a, s) = (d a + phi s, -d s), odd
    operators act by (beta a, -beta s) and even ones diagonally.
    """

    def __init__(self, sub: LambdaExtModule, amb: LambdaExtModule, phi: Callable, name: str = "Cone"):
        super().__init__()
        if sub.m != amb.m:
            raise ValueError("modules have different numbers of operators")
        self.sub, self.amb, self.phi = sub, amb, phi
        self.m = amb.m
        self.shifts = amb.shifts
        self.weighted = amb.weighted
        self.filtered = amb.filtered
        self.name = name

    def _elements(self, key, parity, floor):
        a = [("a", x) for x in self.amb.elements(key, parity, floor)]
        s = [("s", y) for y in self.sub.elements(key, 1 - parity, None if floor is None else floor + 1)]
        return a + s

    def degree(self, x):
        tag, y = x
        return self.amb.degree(y) if tag == "a" else self.sub.degree(y) - 1

    def key(self, x):
        tag, y = x
        return (self.amb if tag == "a" else self.sub).key(y)

    def key_weight(self, key):
        return self.amb.key_weight(key)

    def element_keys(self, weight):
        return sorted(set(self.amb.element_keys(weight)) | set(self.sub.element_keys(weight)))

    def label(self, x):
        tag, y = x
        return f"{tag}:{(self.amb if tag == 'a' else self.sub).label(y)}"

    def op_names(self):
        return self.amb.op_names()

    def _op(self, op, i, x):
        tag, y = x
        if tag == "a":
            return {("a", z): c for z, c in self.amb.apply(op, i, y).items()}
        if op == "d":
            out = {("a", z): c for z, c in self.phi(y).items()}
            for z, c in self.sub.apply("d", 0, y).items():
                out[("s", z)] = -c
            return out
        sign = -1 if op == "beta" else 1
        return {("s", z): sign * c for z, c in self.sub.apply(op, i, y).items()}


def check_strict(phi: Callable, sub: LambdaExtModule, amb: LambdaExtModule, elements: Iterable) -> list[str]:
    """Names of the operators that fail to commute with phi on the given elements."""
    bad = []
    ops = [("d", 0)] + [("beta", i) for i in range(sub.m + 1)] + [(o, i) for i in range(1, sub.m + 1) for o in ("e", "E")]
    for op, i in ops:
        for x in elements:
            lhs: dict = {}
            for y, c in phi(x).items():
                add_into(lhs, amb.apply(op, i, y), c)
            rhs: dict = {}
            for y, c in sub.apply(op, i, x).items():
                add_into(rhs, phi(y), c)
            if lhs != rhs:
                bad.append(f"{op}{i if op != 'd' else ''} on {sub.label(x)}")
                break
    return bad


def cone_module(sub: LambdaExtModule, amb: LambdaExtModule, phi: Callable, elements: Iterable | None = None) -> ConeModule:
    """Cone of phi; raises NotStrictMorphism when phi fails to commute on ``elements``."""
    if elements is not None:
        bad = check_strict(phi, sub, amb, elements)
        if bad:
            raise NotStrictMorphism("; ".join(bad))
    return ConeModule(sub, amb, phi)


def full_subcategory(P: DgCategoryPresentation, objects: Sequence[str], t: CentralFamily | None = None):
    """The full subcategory on ``objects``, its inclusion functor and the restricted family."""
    from .dgcat import BasisMorphism

    keep = set(objects)
    morph = [m for m in P.morphisms if m.source in keep and m.target in keep]
    names = {m.name for m in morph}
    comp = {k: v for k, v in P.composition.items() if k[0] in names and k[1] in names}
    diff = {k: v for k, v in P.differential.items() if k in names}
    S = DgCategoryPresentation(list(objects), morph, {o: P.identities[o] for o in objects}, comp, diff)
    F = DgFunctorPresentation(S, P, {o: o for o in objects}, {m.name: {m.name: 1} for m in morph})
    ts = None
    if t is not None:
        ts = CentralFamily([{o: comp_.get(o, {}) for o in objects} for comp_ in t.components])
    return S, F, ts


# ------------------------------------------------------------------ Morita


@dataclass
class MoritaReport:
    """Comparison of C(A) and C(Mat_k A) along the corner functor.

    ``hh`` maps a chain degree to (dim source, dim target, rank of the
    induced map); ``hp`` maps (parity, level) to the same triple for the
    periodic homology.  ``strict`` names the operators the corner chain map
    fails to commute with (B, since the corner functor is not unital).
    """

    k: int
    floor: int | None
    hh: dict[int, tuple[int, int, int]]
    hp: dict[tuple[int, int], tuple[int, int, int]]
    strict_failures: list[str]

    @property
    def ok(self) -> bool:
        return all(a == b == r for a, b, r in list(self.hh.values()) + list(self.hp.values()))

    def profile(self, level: int = 0) -> tuple[int, int]:
        return tuple(self.hp[(p, level)][0] for p in (0, 1))


def _b_homology_by_degree(M: HochschildModule, chains: list, degrees: Iterable[int]):
    by_deg: dict[int, list] = {}
    for ch in chains:
        by_deg.setdefault(M.degree(ch), []).append(ch)
    out = {}
    for dg in degrees:
        cur, low, up = by_deg.get(dg, []), by_deg.get(dg - 1, []), by_deg.get(dg + 1, [])
        ic = {c: j for j, c in enumerate(cur)}
        iu = {c: j for j, c in enumerate(up)}
        d_in = SparseMatrix(len(cur), len(low), [{ic[y]: v for y, v in M.d(c).items()} for c in low])
        d_out = SparseMatrix(len(up), len(cur), [{iu[y]: v for y, v in M.d(c).items()} for c in cur])
        out[dg] = (homology(d_in, d_out), cur, ic)
    return out


def corner_morita(P: DgCategoryPresentation, t: CentralFamily | None = None, k: int = 2, N: int = 5,
                  T_max: int = 0, weight: int = 0) -> MoritaReport:
    """HH and HP comparison for the corner embedding A -> Mat_k(A).

    Unweighted input uses the degree floor -N; weighted input uses the
    given weight and no floor.  The trusted degrees are those >= -(N - 2).
    On HH the corner chain map is a genuine b-chain map.  On the periodic
    complex it fails to commute with B, so each source class z is lifted to
    the cycle phi(z) + h with h supported on strictly longer chains, found
    by exact affine solving; the report records the rank of these lifts.
    """
    from .lambdamod import PeriodicComplex, Window

    Mat, corner, tk = matrix_category(P, k, t)
    src = assemble_module(P, t, "source")
    tgt = assemble_module(Mat, tk, "target")
    phi = induced_map(corner, src, tgt)
    weighted = src.weighted
    floor = None if weighted else -N
    w_arg = weight if weighted else None

    # Hochschild homology in the trusted degrees
    lo = -(N - 2)
    chains_s = finite_chains(src.cat, weight=w_arg, floor=None if weighted else -N)
    chains_t = finite_chains(tgt.cat, weight=w_arg, floor=None if weighted else -N)
    degs = sorted({src.degree(c) for c in chains_s} | {tgt.degree(c) for c in chains_t})
    degs = [d for d in degs if d >= lo]
    Hs = _b_homology_by_degree(src, chains_s, degs)
    Ht = _b_homology_by_degree(tgt, chains_t, degs)
    hh = {}
    for dg in degs:
        hs, _, ics = Hs[dg]
        ht, cur_t, ict = Ht[dg]
        cur_s = Hs[dg][1]
        cols = []
        for r in hs.reps:
            img: dict = {}
            for j, c in r.items():
                for y, v in phi(cur_s[j]).items():
                    add_into(img, {ict[y]: 1}, v * c)
            cols.append(ht.coordinates(img))
        hh[dg] = (hs.dim, ht.dim, _rank_of_columns(cols, ht.dim))

    # periodic homology
    strict = check_strict(phi, src, tgt, chains_s)
    PCs, PCt = PeriodicComplex(src), PeriodicComplex(tgt)
    key = (weight,) if weighted else ()
    hp = {}
    for T in range(T_max + 1):
        for p in (0, 1):
            W = Window(key, T, p, floor)
            hs, ht = PCs.homology(W), PCt.homology(W)
            Bs, Bt = PCs.basis(W), PCt.basis(W)
            up = PCt.neighbours(W)[1]
            Dt = PCt.D(W, up)
            cols = []
            for r in hs.reps:
                y0: dict = {}
                minlen = None
                for j, c in r.items():
                    alpha, x = Bs.elements[j]
                    minlen = len(x[1]) if minlen is None else min(minlen, len(x[1]))
                    for y, v in phi(x).items():
                        add_into(y0, {Bt.index[(alpha, y)]: 1}, v * c)
                free = [j for j, (_, y) in enumerate(Bt.elements) if len(y[1]) > (minlen or 0)]
                A = SparseMatrix(Dt.rows, len(free), [Dt.column(j) for j in free])
                rhs = {i: -v for i, v in Dt.apply(y0).items()}
                h = solve_affine_sparse(A, rhs) if rhs else {}
                if h is None:
                    cols.append(None)
                    continue
                for jj, v in h.items():
                    add_into(y0, {free[jj]: 1}, v)
                cols.append(ht.coordinates(y0))
            rank = -1 if any(c is None for c in cols) else _rank_of_columns(cols, ht.dim)
            hp[(p, T)] = (hs.dim, ht.dim, rank)
    return MoritaReport(k, floor, hh, hp, strict)


def _rank_of_columns(cols: list, dim: int) -> int:
    from .linalg import dense_rank

    if not cols or not dim:
        return 0
    return dense_rank([list(c) for c in cols])
