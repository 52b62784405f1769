"""Presentations of dg categories over a polynomial ring.

Two kinds are supported.  A :class:`DgCategoryPresentation` is a finite table
of basis morphisms with composition and differential structure constants.  A
:class:`PolynomialAlgebraPresentation` is the coordinate algebra of affine
space with a weighting of the variables and a family of central polynomials.

Both are turned into a *category engine* (:class:`FiniteCategory` or
:class:`PolynomialCategory`) that the chain-level code talks to.  Engines
work with hashable basis labels and return linear combinations as dicts.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from .linalg import Q, add_into, format_rational, kernel_basis, parse_rational, SparseMatrix


class ParseError(ValueError):
    """Malformed instance data; ``location`` says where."""

    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


@dataclass(frozen=True)
class BasisMorphism:
    name: str
    source: str
    target: str
    degree: int
    weight: int | None = None


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    witness: tuple = ()

    def as_dict(self) -> dict:
        return {"kind": self.kind, "message": self.message, "witness": list(self.witness)}


def _lin(d: Mapping) -> dict:
    return {k: Q(v) for k, v in d.items() if Q(v)}


def _fmt_lin(d: Mapping) -> str:
    if not d:
        return "0"
    return " + ".join(f"{format_rational(v)}*{k}" for k, v in sorted(d.items()))


@dataclass
class DgCategoryPresentation:
    """A finite dg category given by structure constants.

    ``composition[(left, right)]`` is the expansion of ``left o right`` (first
    ``right``, then ``left``).  ``identities[obj]`` is a linear combination of
    degree-0 basis morphisms; it need not be a single basis element.
    """

    objects: list[str]
    morphisms: list[BasisMorphism]
    identities: dict[str, dict]
    composition: dict[tuple[str, str], dict] = field(default_factory=dict)
    differential: dict[str, dict] = field(default_factory=dict)

    def __post_init__(self):
        self.identities = {o: _lin(v) for o, v in self.identities.items()}
        self.composition = {k: _lin(v) for k, v in self.composition.items()}
        self.differential = {k: _lin(v) for k, v in self.differential.items()}
        self._by_name = {m.name: m for m in self.morphisms}

    def morphism(self, name: str) -> BasisMorphism:
        return self._by_name[name]

    @property
    def names(self) -> list[str]:
        return [m.name for m in self.morphisms]

    @property
    def weighted(self) -> bool:
        return any(m.weight is not None for m in self.morphisms)

    def hom(self, source: str, target: str) -> list[str]:
        return [m.name for m in self.morphisms if m.source == source and m.target == target]

    def compose(self, left: Mapping, right: Mapping) -> dict:
        """Bilinear composition of two linear combinations."""
        out: dict = {}
        for a, x in left.items():
            for b, y in right.items():
                add_into(out, self.composition.get((a, b), {}), x * y)
        return out

    def d(self, vec: Mapping) -> dict:
        out: dict = {}
        for a, x in vec.items():
            add_into(out, self.differential.get(a, {}), x)
        return out


def validate_presentation(P: DgCategoryPresentation) -> list[Violation]:
    """Every violated dg-category axiom, with witnesses.  Empty means valid."""
    out: list[Violation] = []
    names = P._by_name
    if len(names) != len(P.morphisms):
        out.append(Violation("duplicate", "duplicate basis morphism names"))
    objs = set(P.objects)
    for m in P.morphisms:
        if m.source not in objs or m.target not in objs:
            out.append(Violation("unknown-object", f"{m.name} has an unknown endpoint", (m.name,)))
        if m.weight is not None and m.weight < 0:
            out.append(Violation("weight", f"{m.name} has negative weight", (m.name,)))

    def unknown(vec, where):
        bad = [k for k in vec if k not in names]
        if bad:
            out.append(Violation("unknown-morphism", f"{where} mentions {bad[0]}", (bad[0],)))
            return True
        return False

    # identities
    for o in P.objects:
        idv = P.identities.get(o)
        if not idv:
            out.append(Violation("identity", f"object {o} has no identity", (o,)))
            continue
        if unknown(idv, f"identity of {o}"):
            continue
        for k in idv:
            m = names[k]
            if (m.source, m.target) != (o, o) or m.degree != 0 or (m.weight or 0) != 0:
                out.append(Violation("identity", f"identity of {o} involves {k} which is not a degree-0 weight-0 endomorphism", (o, k)))
        if P.d(idv):
            out.append(Violation("identity-closed", f"d(id_{o}) = {_fmt_lin(P.d(idv))}", (o,)))

    # table entries
    for (a, b), res in P.composition.items():
        if a not in names or b not in names:
            out.append(Violation("unknown-morphism", f"composition entry ({a}, {b})", (a, b)))
            continue
        if unknown(res, f"composition {a}*{b}"):
            continue
        ma, mb = names[a], names[b]
        if res and mb.target != ma.source:
            out.append(Violation("composability", f"{a}*{b} is not composable but has a value", (a, b)))
            continue
        for k in res:
            mk = names[k]
            if (mk.source, mk.target) != (mb.source, ma.target):
                out.append(Violation("hom-mismatch", f"{a}*{b} has component {k} in the wrong hom space", (a, b, k)))
            if mk.degree != ma.degree + mb.degree:
                out.append(Violation("degree-mismatch", f"{a}*{b} has component {k} of degree {mk.degree}", (a, b, k)))
            if ma.weight is not None or mb.weight is not None or mk.weight is not None:
                if (mk.weight or 0) != (ma.weight or 0) + (mb.weight or 0):
                    out.append(Violation("weight-mismatch", f"{a}*{b} has component {k} of the wrong weight", (a, b, k)))
    for a, res in P.differential.items():
        if a not in names:
            out.append(Violation("unknown-morphism", f"differential of {a}", (a,)))
            continue
        if unknown(res, f"d({a})"):
            continue
        ma = names[a]
        for k in res:
            mk = names[k]
            if (mk.source, mk.target) != (ma.source, ma.target):
                out.append(Violation("hom-mismatch", f"d({a}) has component {k} in the wrong hom space", (a, k)))
            if mk.degree != ma.degree + 1:
                out.append(Violation("degree-mismatch", f"d({a}) has component {k} of degree {mk.degree}, expected {ma.degree + 1}", (a, k)))
            if ma.weight is not None and (mk.weight or 0) != ma.weight:
                out.append(Violation("weight-mismatch", f"d({a}) changes weight", (a, k)))
    if out:
        return out

    for m in P.morphisms:
        dd = P.d(P.d({m.name: 1}))
        if dd:
            out.append(Violation("d-squared", f"d(d({m.name})) = {_fmt_lin(dd)}", (m.name,)))
    # units
    for m in P.morphisms:
        a = {m.name: Q(1)}
        left = P.compose(P.identities[m.target], a)
        right = P.compose(a, P.identities[m.source])
        if left != a:
            out.append(Violation("unit", f"id_{m.target}*{m.name} = {_fmt_lin(left)}", (m.name, "left")))
        if right != a:
            out.append(Violation("unit", f"{m.name}*id_{m.source} = {_fmt_lin(right)}", (m.name, "right")))
    # associativity and Leibniz over composable basis pairs and triples
    by_source: dict[str, list[BasisMorphism]] = {}
    for m in P.morphisms:
        by_source.setdefault(m.source, []).append(m)
    for c in P.morphisms:
        for b in by_source.get(c.target, []):
            bc = P.compose({b.name: 1}, {c.name: 1})
            lhs = P.d(bc)
            rhs = P.compose(P.d({b.name: 1}), {c.name: 1})
            add_into(rhs, P.compose({b.name: 1}, P.d({c.name: 1})), (-1) ** b.degree)
            if lhs != rhs:
                out.append(Violation("leibniz", f"d({b.name}*{c.name}) != d({b.name})*{c.name} + (-1)^|{b.name}| {b.name}*d({c.name})", (b.name, c.name)))
            for a in by_source.get(b.target, []):
                l1 = P.compose(P.compose({a.name: 1}, {b.name: 1}), {c.name: 1})
                r1 = P.compose({a.name: 1}, bc)
                if l1 != r1:
                    out.append(Violation("associativity", f"({a.name}*{b.name})*{c.name} = {_fmt_lin(l1)} but {a.name}*({b.name}*{c.name}) = {_fmt_lin(r1)}", (a.name, b.name, c.name)))
    return out


@dataclass
class CentralFamily:
    """``components[i][obj]`` is the degree-0 endomorphism t_i at ``obj``."""

    components: list[dict[str, dict]]

    def __post_init__(self):
        self.components = [{o: _lin(v) for o, v in comp.items()} for comp in self.components]

    @property
    def m(self) -> int:
        return len(self.components)

    def at(self, i: int, obj: str) -> dict:
        return self.components[i].get(obj, {})


def validate_central_family(P: DgCategoryPresentation, t: CentralFamily) -> list[Violation]:
    out: list[Violation] = []
    for i, comp in enumerate(t.components):
        for o, vec in comp.items():
            if o not in P.objects:
                out.append(Violation("unknown-object", f"t_{i + 1} has a component at unknown object {o}", (i + 1, o)))
                continue
            for k in vec:
                m = P._by_name.get(k)
                if m is None:
                    out.append(Violation("unknown-morphism", f"t_{i + 1} at {o} mentions {k}", (i + 1, o, k)))
                elif (m.source, m.target) != (o, o) or m.degree != 0:
                    out.append(Violation("not-endomorphism", f"t_{i + 1} at {o} involves {k}", (i + 1, o, k)))
            if P.d(vec):
                out.append(Violation("not-closed", f"d(t_{i + 1} at {o}) != 0", (i + 1, o)))
        if out:
            continue
        for m in P.morphisms:
            a = {m.name: Q(1)}
            lhs = P.compose(t.at(i, m.target), a)
            rhs = P.compose(a, t.at(i, m.source))
            if lhs != rhs:
                out.append(Violation("not-central", f"t_{i + 1}*{m.name} = {_fmt_lin(lhs)} but {m.name}*t_{i + 1} = {_fmt_lin(rhs)}", (i + 1, m.name)))
    return out


@dataclass
class DgFunctorPresentation:
    """A dg functor between finite presentations, given on basis morphisms."""

    source: DgCategoryPresentation
    target: DgCategoryPresentation
    object_map: dict[str, str]
    morphism_map: dict[str, dict]
    unital: bool = True

    def __post_init__(self):
        self.morphism_map = {k: _lin(v) for k, v in self.morphism_map.items()}

    def apply(self, vec: Mapping) -> dict:
        out: dict = {}
        for a, x in vec.items():
            add_into(out, self.morphism_map.get(a, {}), x)
        return out


def validate_functor(F: DgFunctorPresentation, t: CentralFamily | None = None, t2: CentralFamily | None = None) -> list[Violation]:
    out: list[Violation] = []
    S, T = F.source, F.target
    for m in S.morphisms:
        img = F.apply({m.name: 1})
        for k in img:
            mk = T.morphism(k)
            if mk.degree != m.degree or (mk.source, mk.target) != (F.object_map[m.source], F.object_map[m.target]):
                out.append(Violation("functor-degree", f"F({m.name}) has component {k} of the wrong type", (m.name, k)))
        if F.apply(S.d({m.name: 1})) != T.d(img):
            out.append(Violation("functor-d", f"F does not commute with d on {m.name}", (m.name,)))
    for (a, b), res in S.composition.items():
        if F.apply(res) != T.compose(F.apply({a: 1}), F.apply({b: 1})):
            out.append(Violation("functor-composition", f"F({a}*{b}) != F({a})*F({b})", (a, b)))
    for a in S.names:
        for b in S.names:
            if (a, b) not in S.composition and S.morphism(b).target == S.morphism(a).source:
                if T.compose(F.apply({a: 1}), F.apply({b: 1})):
                    out.append(Violation("functor-composition", f"F({a})*F({b}) != 0", (a, b)))
    if F.unital:
        for o in S.objects:
            if F.apply(S.identities[o]) != T.identities[F.object_map[o]]:
                out.append(Violation("functor-unit", f"F(id_{o}) is not an identity", (o,)))
    if t is not None and t2 is not None:
        for i in range(t.m):
            for o in S.objects:
                if F.apply(t.at(i, o)) != t2.at(i, F.object_map[o]):
                    out.append(Violation("functor-central", f"F(t_{i + 1} at {o}) != t'_{i + 1}", (i + 1, o)))
    return out


def matrix_category(P: DgCategoryPresentation, k: int, t: CentralFamily | None = None):
    """Mat_k of a one-object presentation, the corner functor and the diagonal family.

    Returns ``(MatP, corner, t_diag)``; ``t_diag`` is None when ``t`` is None.
    The corner functor sends ``a`` to ``e11 (x) a``; it is not unital for k > 1.
    """
    if len(P.objects) != 1:
        raise ValueError("matrix_category needs a one-object presentation")
    o = P.objects[0]
    single = len(P.morphisms) == 1

    def nm(p, q, a):
        return f"e{p}{q}" if single else f"e{p}{q}.{a}"

    morphisms = []
    for p in range(1, k + 1):
        for q in range(1, k + 1):
            for m in P.morphisms:
                morphisms.append(BasisMorphism(nm(p, q, m.name), o, o, m.degree, m.weight))
    comp = {}
    for (a, b), res in P.composition.items():
        for p in range(1, k + 1):
            for q in range(1, k + 1):
                for r in range(1, k + 1):
                    comp[(nm(p, q, a), nm(q, r, b))] = {nm(p, r, c): v for c, v in res.items()}
    diff = {}
    for a, res in P.differential.items():
        for p in range(1, k + 1):
            for q in range(1, k + 1):
                diff[nm(p, q, a)] = {nm(p, q, c): v for c, v in res.items()}
    ident = {}
    for p in range(1, k + 1):
        for c, v in P.identities[o].items():
            ident[nm(p, p, c)] = v
    M = DgCategoryPresentation([o], morphisms, {o: ident}, comp, diff)
    corner = DgFunctorPresentation(P, M, {o: o}, {m.name: {nm(1, 1, m.name): 1} for m in P.morphisms}, unital=(k == 1))
    t_diag = None
    if t is not None:
        comps = []
        for i in range(t.m):
            vec = {}
            for p in range(1, k + 1):
                for c, v in t.at(i, o).items():
                    vec[nm(p, p, c)] = v
            comps.append({o: vec})
        t_diag = CentralFamily(comps)
    return M, corner, t_diag


def ground_field() -> DgCategoryPresentation:
    """The one-object category with endomorphisms the ground field."""
    return DgCategoryPresentation(["o"], [BasisMorphism("1", "o", "o", 0)], {"o": {"1": 1}}, {("1", "1"): {"1": 1}})


def truncated_polynomial(N: int, weighted: bool = True) -> DgCategoryPresentation:
    """k[x]/(x^N) as a finite table; basis 1, x, ..., x^(N-1)."""
    names = ["1"] + [("x" if j == 1 else f"x^{j}") for j in range(1, N)]
    morph = [BasisMorphism(names[j], "o", "o", 0, j if weighted else None) for j in range(N)]
    comp = {}
    for i in range(N):
        for j in range(N):
            if i + j < N:
                comp[(names[i], names[j])] = {names[i + j]: 1}
    return DgCategoryPresentation(["o"], morph, {"o": {"1": 1}}, comp)


# ---------------------------------------------------------------- polynomials

Monomial = tuple  # exponent vector


@dataclass
class PolynomialAlgebraPresentation:
    """k[x_1..x_n] with positive integer weights and central polynomials f_i."""

    n: int
    weights: tuple[int, ...]
    potentials: list[dict[Monomial, object]]

    def __post_init__(self):
        self.weights = tuple(int(w) for w in self.weights)
        if len(self.weights) != self.n:
            raise ValueError("one weight per variable is required")
        if any(w < 1 for w in self.weights):
            raise ValueError("weights must be positive")
        pots = []
        for f in self.potentials:
            g = {}
            for e, c in f.items():
                e = tuple(int(x) for x in e)
                if len(e) != self.n or any(x < 0 for x in e):
                    raise ValueError(f"bad exponent vector {e}")
                c = Q(c)
                if c:
                    g[e] = g.get(e, 0) + c
            pots.append({e: c for e, c in sorted(g.items()) if c})
        self.potentials = pots

    @property
    def m(self) -> int:
        return len(self.potentials)

    def monomial_weight(self, e: Monomial) -> int:
        return sum(a * w for a, w in zip(e, self.weights))

    def potential_weights(self) -> list[set[int]]:
        return [{self.monomial_weight(e) for e in f} for f in self.potentials]

    @property
    def quasi_homogeneous(self) -> bool:
        return all(len(s) <= 1 for s in self.potential_weights())

    def degrees(self) -> list[int]:
        """Weight of each f_i (0 for the zero polynomial); max weight if inhomogeneous."""
        return [max(s) if s else 0 for s in self.potential_weights()]


def enumerate_monomials(P: PolynomialAlgebraPresentation | Sequence[int], w: int) -> list[Monomial]:
    """All exponent vectors of total weight ``w`` in lexicographic order."""
    weights = P.weights if isinstance(P, PolynomialAlgebraPresentation) else tuple(P)
    return list(_monomials(tuple(weights), w))


@lru_cache(maxsize=None)
def _monomials(weights: tuple, w: int) -> tuple:
    if w < 0:
        return ()
    if not weights:
        return ((),) if w == 0 else ()
    out = []
    head, rest = weights[0], weights[1:]
    for a in range(w // head + 1):
        for tail in _monomials(rest, w - a * head):
            out.append((a,) + tail)
    return tuple(sorted(out))


def format_monomial(e: Monomial, names: Sequence[str] | None = None) -> str:
    if names is None:
        names = default_variable_names(len(e))
    parts = []
    for a, v in zip(e, names):
        if a == 1:
            parts.append(v)
        elif a > 1:
            parts.append(f"{v}^{a}")
    return "*".join(parts) if parts else "1"


def default_variable_names(n: int) -> list[str]:
    if n <= 3:
        return ["x", "y", "z"][:n]
    return [f"x{i + 1}" for i in range(n)]


def grading_projection(P: PolynomialAlgebraPresentation) -> list[tuple[int, ...]]:
    """Integer rows spanning the linear forms constant on the monomials of every f_i.

    Chains and forms are graded by these forms applied to their total exponent
    vector.  This is the identity when every f_i is a monomial or zero, and it
    always contains the weight form when the f_i are quasi-homogeneous.
    """
    diffs = []
    for f in P.potentials:
        mons = list(f)
        for e in mons[1:]:
            diffs.append([a - b for a, b in zip(e, mons[0])])
    if not diffs:
        return [tuple(1 if i == j else 0 for j in range(P.n)) for i in range(P.n)]
    ker = kernel_basis(SparseMatrix.from_dense(diffs, P.n))
    rows = []
    for v in ker:
        den = 1
        for x in v:
            den = den * int(x.denominator) // _gcd(den, int(x.denominator))
        iv = [int(x * den) for x in v]
        g = 0
        for x in iv:
            g = _gcd(g, abs(x))
        rows.append(tuple(x // g for x in iv) if g else tuple(iv))
    return rows


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


# ----------------------------------------------------------- category engines


class FiniteCategory:
    """Engine over a finite presentation with an identity-adapted basis.

    When an identity is a combination of several basis morphisms, one of them
    is replaced by the identity itself so that chains with an identity slot
    can be dropped basis-wise.
    """

    kind = "finite"

    def __init__(self, P: DgCategoryPresentation, t: CentralFamily | None = None):
        self.presentation = P
        self.t = t or CentralFamily([])
        self._adapt()
        self.weighted = P.weighted
        self._hom: dict[tuple[str, str], list[str]] = {}
        for name in self.names:
            self._hom.setdefault((self.src[name], self.tgt[name]), []).append(name)
        self._order = {name: i for i, name in enumerate(self.names)}

    def _adapt(self):
        P = self.presentation
        replace: dict[str, tuple[str, dict]] = {}  # old name -> (new identity name, identity combination)
        self.identity_name: dict[str, str] = {}
        for o in P.objects:
            idv = P.identities[o]
            if len(idv) == 1 and list(idv.values())[0] == 1:
                self.identity_name[o] = next(iter(idv))
                continue
            j = sorted(idv, key=lambda k: (abs(idv[k]) != 1, P.names.index(k)))[0]
            new = f"id_{o}"
            replace[j] = (new, idv)
            self.identity_name[o] = new
        self.replaced = {j: new for j, (new, _) in replace.items()}

        def to_old(vec):
            out = {}
            for k, v in vec.items():
                if k in self._new_to_old:
                    add_into(out, self._new_to_old[k], v)
                else:
                    add_into(out, {k: 1}, v)
            return out

        def to_new(vec):
            out = {}
            for k, v in vec.items():
                if k in self._old_to_new:
                    add_into(out, self._old_to_new[k], v)
                else:
                    add_into(out, {k: 1}, v)
            return out

        self._new_to_old = {}
        self._old_to_new = {}
        for j, (new, idv) in replace.items():
            self._new_to_old[new] = dict(idv)
            c = idv[j]
            expr = {new: 1 / c}
            for k, v in idv.items():
                if k != j:
                    expr[k] = -v / c
            self._old_to_new[j] = expr
        self.names = []
        self.src, self.tgt, self.deg, self.wt = {}, {}, {}, {}
        for m in P.morphisms:
            name = self.replaced.get(m.name, m.name)
            self.names.append(name)
            self.src[name], self.tgt[name], self.deg[name] = m.source, m.target, m.degree
            self.wt[name] = 0 if name in self._new_to_old else (m.weight or 0)
        self._comp: dict[tuple[str, str], dict] = {}
        for a in self.names:
            for b in self.names:
                if self.src[a] != self.tgt[b]:
                    continue
                r = to_new(P.compose(to_old({a: 1}), to_old({b: 1})))
                if r:
                    self._comp[(a, b)] = r
        self._diff = {a: to_new(P.d(to_old({a: 1}))) for a in self.names}
        self._diff = {a: v for a, v in self._diff.items() if v}
        self._t = [{o: to_new(comp.get(o, {})) for o in P.objects} for comp in self.t.components] if self.t else []
        self.to_new = to_new
        self.to_old = to_old
        self.identities = set(self.identity_name.values())

    # engine interface
    @property
    def m(self) -> int:
        return len(self._t)

    @property
    def has_differential(self) -> bool:
        return bool(self._diff)

    def is_identity(self, a) -> bool:
        return a in self.identities

    def identity(self, obj):
        return self.identity_name[obj]

    def source(self, a):
        return self.src[a]

    def target(self, a):
        return self.tgt[a]

    def degree(self, a) -> int:
        return self.deg[a]

    def compose(self, a, b) -> dict:
        return self._comp.get((a, b), {})

    def differential(self, a) -> dict:
        return self._diff.get(a, {})

    def central(self, i: int, obj) -> dict:
        return self._t[i].get(obj, {})

    def key(self, a) -> tuple:
        return (self.wt[a],) if self.weighted else ()

    def order(self, a):
        return self._order[a]

    def label(self, a) -> str:
        return str(a)

    def hom(self, s, t) -> list:
        return self._hom.get((s, t), [])

    @property
    def objects(self) -> list:
        return self.presentation.objects

    def central_shift(self, i: int) -> tuple:
        """Key shift of t_i, or None when t_i is not homogeneous."""
        keys = set()
        for vec in self._t[i].values():
            for a in vec:
                keys.add(self.key(a))
        if not keys:
            return (0,) if self.weighted else ()
        if len(keys) > 1:
            return None
        return keys.pop()


class PolynomialCategory:
    """Engine for k[x_1..x_n]; basis morphisms are exponent vectors."""

    kind = "polynomial"

    def __init__(self, P: PolynomialAlgebraPresentation, projection: Sequence[Sequence[int]] | None = None):
        self.presentation = P
        self.n = P.n
        self.weights = P.weights
        self.zero = (0,) * P.n
        self.projection = [tuple(r) for r in (projection if projection is not None else grading_projection(P))]
        self._t = [dict(f) for f in P.potentials]
        self.names = default_variable_names(P.n)

    @property
    def m(self) -> int:
        return len(self._t)

    has_differential = False
    weighted = True

    @property
    def objects(self) -> list:
        return ["o"]

    def is_identity(self, a) -> bool:
        return a == self.zero

    def identity(self, obj):
        return self.zero

    def source(self, a):
        return "o"

    def target(self, a):
        return "o"

    def degree(self, a) -> int:
        return 0

    def compose(self, a, b) -> dict:
        return {tuple(x + y for x, y in zip(a, b)): Q(1)}

    def differential(self, a) -> dict:
        return {}

    def central(self, i: int, obj) -> dict:
        return self._t[i]

    def key(self, a) -> tuple:
        return tuple(sum(r * x for r, x in zip(row, a)) for row in self.projection)

    def order(self, a):
        return a

    def label(self, a) -> str:
        return format_monomial(a, self.names)

    def central_shift(self, i: int) -> tuple:
        f = self._t[i]
        if not f:
            return (0,) * len(self.projection)
        keys = {self.key(e) for e in f}
        if len(keys) > 1:
            return None
        return keys.pop()


# --------------------------------------------------------------------- parsing


def _parse_coeff(v, where: str):
    if isinstance(v, bool):
        raise ParseError("boolean is not a coefficient", where)
    if isinstance(v, int):
        return Q(v)
    if isinstance(v, str):
        try:
            return parse_rational(v)
        except ValueError as exc:
            raise ParseError(str(exc), where) from None
    raise ParseError(f"coefficient must be an integer or a string, got {v!r}", where)


def _parse_terms(terms, where: str) -> dict:
    if not isinstance(terms, list):
        raise ParseError("expected a list of {basis, coeff}", where)
    out: dict = {}
    for j, item in enumerate(terms):
        loc = f"{where}[{j}]"
        if not isinstance(item, dict) or "basis" not in item:
            raise ParseError("expected {basis, coeff}", loc)
        c = _parse_coeff(item.get("coeff", 1), loc + ".coeff")
        add_into(out, {str(item["basis"]): 1}, c)
    return out


def parse_dg_category(data: Mapping, where: str = "payload") -> tuple[DgCategoryPresentation, CentralFamily]:
    try:
        objects = [str(o) for o in data["objects"]]
        raw = data["morphisms"]
    except (KeyError, TypeError):
        raise ParseError("dg-category needs 'objects' and 'morphisms'", where) from None
    morphisms = []
    for j, m in enumerate(raw):
        loc = f"{where}.morphisms[{j}]"
        try:
            w = m.get("weight")
            morphisms.append(BasisMorphism(str(m["name"]), str(m["source"]), str(m["target"]), int(m.get("degree", 0)), None if w is None else int(w)))
        except (KeyError, TypeError, ValueError, AttributeError):
            raise ParseError("morphism needs name, source, target, degree", loc) from None
    ids_raw = data.get("identities", {})
    identities = {}
    if isinstance(ids_raw, dict):
        for o, v in ids_raw.items():
            identities[str(o)] = {str(v): Q(1)} if isinstance(v, str) else _parse_terms(v, f"{where}.identities.{o}")
    else:
        raise ParseError("identities must map objects to morphisms", f"{where}.identities")
    comp = {}
    for j, entry in enumerate(data.get("composition", [])):
        loc = f"{where}.composition[{j}]"
        try:
            key = (str(entry["left"]), str(entry["right"]))
        except (KeyError, TypeError):
            raise ParseError("composition entry needs left and right", loc) from None
        comp[key] = add_into(comp.get(key, {}), _parse_terms(entry.get("result", []), loc + ".result"))
    diff = {}
    for j, entry in enumerate(data.get("differential", [])):
        loc = f"{where}.differential[{j}]"
        try:
            key = str(entry["basis"])
        except (KeyError, TypeError):
            raise ParseError("differential entry needs basis", loc) from None
        diff[key] = add_into(diff.get(key, {}), _parse_terms(entry.get("result", []), loc + ".result"))
    comps = []
    for i, fam in enumerate(data.get("central_family", [])):
        loc = f"{where}.central_family[{i}]"
        if not isinstance(fam, dict):
            raise ParseError("central family component must map objects to terms", loc)
        comps.append({str(o): ({str(v): Q(1)} if isinstance(v, str) else _parse_terms(v, f"{loc}.{o}")) for o, v in fam.items()})
    return DgCategoryPresentation(objects, morphisms, identities, comp, diff), CentralFamily(comps)


def parse_polynomial(data: Mapping, where: str = "payload") -> PolynomialAlgebraPresentation:
    try:
        n = int(data["n"])
    except (KeyError, TypeError, ValueError):
        raise ParseError("polynomial instance needs integer 'n'", where) from None
    weights = data.get("weights", [1] * n)
    pots = []
    for i, f in enumerate(data.get("potentials", [])):
        loc = f"{where}.potentials[{i}]"
        if not isinstance(f, list):
            raise ParseError("potential must be a list of {exponents, coeff}", loc)
        poly = {}
        for j, term in enumerate(f):
            tl = f"{loc}[{j}]"
            try:
                e = tuple(int(x) for x in term["exponents"])
            except (KeyError, TypeError, ValueError):
                raise ParseError("term needs integer 'exponents'", tl) from None
            if len(e) != n:
                raise ParseError(f"expected {n} exponents", tl)
            add_into(poly, {e: 1}, _parse_coeff(term.get("coeff", 1), tl + ".coeff"))
        pots.append(poly)
    try:
        return PolynomialAlgebraPresentation(n, tuple(weights), pots)
    except ValueError as exc:
        raise ParseError(str(exc), where) from None


def polynomial_to_json(P: PolynomialAlgebraPresentation) -> dict:
    return {
        "n": P.n,
        "weights": list(P.weights),
        "potentials": [[{"exponents": list(e), "coeff": format_rational(c)} for e, c in f.items()] for f in P.potentials],
    }


def dg_category_to_json(P: DgCategoryPresentation, t: CentralFamily | None = None) -> dict:
    def terms(vec):
        return [{"basis": k, "coeff": format_rational(v)} for k, v in sorted(vec.items())]

    out = {
        "objects": list(P.objects),
        "morphisms": [
            {k: v for k, v in (("name", m.name), ("source", m.source), ("target", m.target), ("degree", m.degree), ("weight", m.weight)) if v is not None}
            for m in P.morphisms
        ],
        "identities": {o: terms(v) for o, v in P.identities.items()},
        "composition": [{"left": a, "right": b, "result": terms(r)} for (a, b), r in sorted(P.composition.items())],
        "differential": [{"basis": a, "result": terms(r)} for a, r in sorted(P.differential.items())],
    }
    if t is not None and t.m:
        out["central_family"] = [{o: terms(v) for o, v in comp.items()} for comp in t.components]
    return out


def polynomial(n: int, terms: Iterable[tuple[Sequence[int], object]]) -> dict:
    """Convenience constructor: ``polynomial(2, [((1, 1), 1)])`` is xy."""
    out: dict = {}
    for e, c in terms:
        add_into(out, {tuple(e): 1}, Q(c))
    return out


_TERM = re.compile(r"\s*([+-])?\s*([^+-]+)")


def parse_polynomial_text(text: str, n: int, names: Sequence[str] | None = None) -> dict:
    """Parse ``"x^2*y - 3/2*x + 1"`` into an exponent dict.

    Variables are ``x, y, z`` (n <= 3) or ``x1..xn``; terms are products of
    a rational coefficient and powers joined by ``*`` or spaces.
    """
    names = list(names or default_variable_names(n))
    pos = {v: i for i, v in enumerate(names)}
    src = text.replace(" ", "")
    if not src:
        raise ParseError("empty polynomial", repr(text))
    out: dict = {}
    i = 0
    while i < len(src):
        m = _TERM.match(src, i)
        if m is None or m.end() == i:
            raise ParseError("cannot parse polynomial", repr(text))
        sign = -1 if m.group(1) == "-" else 1
        coeff = Q(sign)
        exps = [0] * n
        for factor in m.group(2).split("*"):
            base, _, power = factor.partition("^")
            if base in pos:
                try:
                    exps[pos[base]] += int(power) if power else 1
                except ValueError:
                    raise ParseError(f"bad exponent in {factor!r}", repr(text)) from None
            else:
                try:
                    coeff *= parse_rational(factor)
                except ValueError:
                    raise ParseError(f"unknown factor {factor!r}", repr(text)) from None
        add_into(out, {tuple(exps): 1}, coeff)
        i = m.end()
    return out


def loads_instance(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", f"line {exc.lineno} column {exc.colno}") from None
