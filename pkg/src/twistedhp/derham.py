"""Polynomial differential forms on affine space and the twisted de Rham side.

A form basis element is ``(a, S)``: the monomial with exponent vector ``a``
times ``dx_S`` for a strictly increasing index tuple ``S``.  A q-form has
module degree -q.

Two modules over the extended exterior algebra live here: the primed one with
``d = 0, beta_0 = d_DR, beta_i = -df_i^, e_i = f_i, E_i = 1/2 df_i^ d`` and the
plain one with ``E_i = 0``.  The twisted complex ``(Omega[tau], d - sum tau_i
df_i^)`` is built independently by :class:`TwistedComplex` and compared with
the fold of the plain module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .dgcat import (
    PolynomialAlgebraPresentation,
    default_variable_names,
    enumerate_monomials,
    format_monomial,
    grading_projection,
)
from .hochschild import _weight_functional
from .lambdamod import (
    LambdaExtModule,
    PeriodicComplex,
    Window,
    WeylActionData,
    _vadd,
    multi_indices,
    weyl_action,
)
from .linalg import Q, SparseMatrix, add_into, format_rational

HALF = Q("1/2")

Form = tuple  # (exponents, dx indices)


def _insert_sign(j: int, S: tuple) -> tuple[int, tuple] | None:
    """dx_j ^ dx_S = sign * dx_{S + j}; None if j is already in S."""
    if j in S:
        return None
    pos = sum(1 for s in S if s < j)
    return (-1 if pos % 2 else 1), tuple(sorted(S + (j,)))


@dataclass
class PolyForm:
    """A polynomial differential form on affine n-space."""

    n: int
    terms: dict = field(default_factory=dict)

    @classmethod
    def basis(cls, n: int, exps: Sequence[int], S: Sequence[int] = (), coeff=1) -> "PolyForm":
        return cls(n, {(tuple(exps), tuple(S)): Q(coeff)})

    @classmethod
    def function(cls, n: int, poly: Mapping) -> "PolyForm":
        return cls(n, {(tuple(e), ()): Q(c) for e, c in poly.items() if c})

    def __add__(self, other: "PolyForm") -> "PolyForm":
        return PolyForm(self.n, add_into(dict(self.terms), other.terms))

    def __sub__(self, other: "PolyForm") -> "PolyForm":
        return PolyForm(self.n, add_into(dict(self.terms), other.terms, -1))

    def scale(self, c) -> "PolyForm":
        c = Q(c)
        return PolyForm(self.n, {k: v * c for k, v in self.terms.items()} if c else {})

    def __eq__(self, other) -> bool:
        return isinstance(other, PolyForm) and self.n == other.n and self.terms == other.terms

    def is_zero(self) -> bool:
        return not self.terms

    def d(self) -> "PolyForm":
        return PolyForm(self.n, exterior_d_vec(self.terms))

    def wedge(self, other: "PolyForm") -> "PolyForm":
        out: dict = {}
        for (a, S), c in self.terms.items():
            for (b, T), e in other.terms.items():
                r = _wedge_basis(S, T)
                if r is None:
                    continue
                sg, U = r
                add_into(out, {(tuple(x + y for x, y in zip(a, b)), U): 1}, sg * c * e)
        return PolyForm(self.n, out)

    def degrees(self) -> set[int]:
        return {len(S) for (_, S) in self.terms}

    def weight(self, weights: Sequence[int]) -> set[int]:
        return {form_weight((a, S), weights) for (a, S) in self.terms}

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"{format_rational(c)}*{form_label(k)}" for k, c in sorted(self.terms.items()))


def _wedge_basis(S: tuple, T: tuple) -> tuple[int, tuple] | None:
    if set(S) & set(T):
        return None
    seq = list(S) + list(T)
    inv = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return (-1 if inv % 2 else 1), tuple(sorted(seq))


def form_label(x: Form, names: Sequence[str] | None = None) -> str:
    a, S = x
    if names is None:
        names = default_variable_names(len(a))
    mono = format_monomial(a, names)
    if not S:
        return mono
    dx = "^".join(f"d{names[j]}" for j in S)
    return dx if mono == "1" else f"{mono}*{dx}"


def form_weight(x: Form, weights: Sequence[int]) -> int:
    a, S = x
    return sum(e * w for e, w in zip(a, weights)) + sum(weights[j] for j in S)


def exterior_d(x: Form) -> dict:
    a, S = x
    out = {}
    for j, e in enumerate(a):
        if not e:
            continue
        r = _insert_sign(j, S)
        if r is None:
            continue
        sg, U = r
        b = a[:j] + (e - 1,) + a[j + 1:]
        out[(b, U)] = Q(sg * e)
    return out


def exterior_d_vec(vec: Mapping) -> dict:
    out: dict = {}
    for x, c in vec.items():
        add_into(out, exterior_d(x), c)
    return out


def poly_times(f: Mapping, x: Form) -> dict:
    a, S = x
    out: dict = {}
    for e, c in f.items():
        add_into(out, {(tuple(p + q for p, q in zip(a, e)), S): 1}, c)
    return out


def df_of(f: Mapping) -> dict:
    """df as a form vector."""
    out: dict = {}
    for e, c in f.items():
        add_into(out, exterior_d((tuple(e), ())), c)
    return out


def wedge_vec(u: Mapping, v: Mapping) -> dict:
    out: dict = {}
    for (a, S), c in u.items():
        for (b, T), e in v.items():
            r = _wedge_basis(S, T)
            if r is None:
                continue
            sg, U = r
            add_into(out, {(tuple(x + y for x, y in zip(a, b)), U): 1}, sg * c * e)
    return out


# -------------------------------------------------------------------- modules


class DeRhamModule(LambdaExtModule):
    """Polynomial forms with the primed (E = 1/2 df d) or plain (E = 0) structure."""

    def __init__(self, P: PolynomialAlgebraPresentation, variant: str = "prime", projection=None, e_scale=1):
        super().__init__()
        if variant not in ("prime", "plain"):
            raise ValueError("variant must be 'prime' or 'plain'")
        self.P = P
        self.n = P.n
        self.weights = P.weights
        self.variant = variant
        self.m = P.m
        self.e_scale = Q(e_scale)
        self.name = "Omega'" if variant == "prime" else "Omega"
        self.names = default_variable_names(P.n)
        self.filtered = not P.quasi_homogeneous
        if self.filtered:
            self.projection = [tuple(P.weights)]
            self.shifts = [(d,) for d in P.degrees()]
        else:
            self.projection = [tuple(r) for r in (projection if projection is not None else grading_projection(P))]
            self.shifts = []
            for f in P.potentials:
                keys = {self._key_of_exps(e) for e in f}
                self.shifts.append(keys.pop() if keys else (0,) * len(self.projection))
        self._lam = _weight_functional(self.projection, P.weights)
        self._df = [df_of(f) for f in P.potentials]

    def _key_of_exps(self, E) -> tuple:
        return tuple(sum(r * x for r, x in zip(row, E)) for row in self.projection)

    def total_exponent(self, x: Form) -> tuple:
        a, S = x
        return tuple(e + (1 if j in S else 0) for j, e in enumerate(a))

    def key(self, x: Form) -> tuple:
        return self._key_of_exps(self.total_exponent(x))

    def degree(self, x: Form) -> int:
        return -len(x[1])

    def label(self, x: Form) -> str:
        return form_label(x, self.names)

    def key_weight(self, key) -> int:
        return int(sum(l * k for l, k in zip(self._lam, key)))

    def element_keys(self, weight: int) -> list:
        return sorted({self._key_of_exps(E) for E in enumerate_monomials(self.weights, weight)})

    def op_names(self) -> dict:
        names = {("d", 0): "0", ("beta", 0): "d"}
        for i in range(1, self.m + 1):
            names[("beta", i)] = f"-df{i}"
            names[("e", i)] = f"f{i}"
            names[("E", i)] = f"E{i}"
        return names

    def _elements(self, key, parity, floor):
        if self.filtered:
            exps = enumerate_monomials(self.weights, key[0])
        else:
            exps = [E for E in enumerate_monomials(self.weights, self.key_weight(key)) if self._key_of_exps(E) == key]
        return sorted(forms_with_exponent_list(exps, parity), key=form_sort_key)

    def forms_of_weight(self, w: int) -> list:
        return sorted(forms_with_exponent_list(enumerate_monomials(self.weights, w), None), key=form_sort_key)

    def _op(self, op, i, x):
        if op == "d":
            return {}
        if op == "beta":
            if i == 0:
                return exterior_d(x)
            return {k: -v for k, v in wedge_vec(self._df[i - 1], {x: Q(1)}).items()}
        if op == "e":
            return poly_times(self.P.potentials[i - 1], x)
        if op == "E":
            if self.variant == "plain":
                return {}
            out = wedge_vec(self._df[i - 1], exterior_d(x))
            c = HALF * self.e_scale
            return {k: v * c for k, v in out.items()}
        raise KeyError(op)


def form_sort_key(x: Form):
    a, S = x
    return (len(S), S, a)


def forms_with_exponent_list(exps: Iterable[tuple], parity: int | None) -> list:
    out = []
    for E in exps:
        n = len(E)
        support = [j for j in range(n) if E[j] > 0]
        import itertools

        for q in range(len(support) + 1):
            if parity is not None and q % 2 != parity:
                continue
            for S in itertools.combinations(support, q):
                a = tuple(E[j] - (1 if j in S else 0) for j in range(n))
                out.append((a, tuple(S)))
    return out


def build_omega_prime(P: PolynomialAlgebraPresentation) -> DeRhamModule:
    return DeRhamModule(P, "prime")


def build_omega(P: PolynomialAlgebraPresentation) -> DeRhamModule:
    return DeRhamModule(P, "plain")


# ------------------------------------------------------------ twisted complex


class TwistedComplex(PeriodicComplex):
    """(Omega[tau] / tau^{>T}, d - sum_i tau_i df_i^) built directly from forms.

    Uses the same windows as the fold of :class:`DeRhamModule` but computes
    the differential and the operators d/dtau_i - f_i from form arithmetic.
    """

    def __init__(self, P: PolynomialAlgebraPresentation):
        super().__init__(DeRhamModule(P, "plain"))
        self.P = P
        self._df = [df_of(f) for f in P.potentials]

    def D_image(self, el) -> dict:
        alpha, x = el
        out: dict = {}
        for y, c in exterior_d(x).items():
            add_into(out, {(alpha, y): c})
        for i, df in enumerate(self._df):
            a2 = tuple(a + (1 if j == i else 0) for j, a in enumerate(alpha))
            for y, c in wedge_vec(df, {x: Q(1)}).items():
                add_into(out, {(a2, y): -c})
        return out

    def dtilde_image(self, i: int, el, e_scale=1) -> dict:
        alpha, x = el
        out: dict = {}
        if alpha[i - 1]:
            a2 = tuple(a - (1 if j == i - 1 else 0) for j, a in enumerate(alpha))
            out[(a2, x)] = Q(alpha[i - 1])
        for y, c in poly_times(self.P.potentials[i - 1], x).items():
            add_into(out, {(alpha, y): -c})
        return out


def tower_windows(M: LambdaExtModule, w_min: int, w_max: int, T_max: int) -> tuple[list[Window], dict]:
    """All nonempty windows of weight in [w_min, w_max] and level <= T_max, with their weights."""
    out = []
    weights = {}
    if M.filtered:
        for w in range(max(w_min, 0), w_max + 1):
            for T in range(T_max + 1):
                for p in (0, 1):
                    W = Window((w,), T, p)
                    out.append(W)
                    weights[W] = w
        return out, weights
    shift_w = [M.key_weight(s) for s in M.shifts]
    keys = set()
    for T in range(T_max + 1):
        for alpha in multi_indices(M.m, T):
            extra = sum(a * s for a, s in zip(alpha, shift_w))
            for w in range(w_min, w_max + 1):
                for k in M.element_keys(w + extra):
                    K = k
                    for a, s in zip(alpha, M.shifts):
                        if a:
                            K = _vadd(K, s, -a)
                    keys.add((K, w))
    for K, w in sorted(keys):
        for T in range(T_max + 1):
            for p in (0, 1):
                W = Window(K, T, p)
                out.append(W)
                weights[W] = w
    return out, weights


@dataclass
class TwistedCohomology:
    data: WeylActionData
    complex: TwistedComplex
    caveat: str | None = None

    def dims(self) -> dict:
        """(form degree parity, weight, level) -> dimension."""
        return self.data.dim_table()


def twisted_cohomology(P: PolynomialAlgebraPresentation, w_max: int, T_max: int, w_min: int = 0, jobs: int = 1) -> TwistedCohomology:
    C = TwistedComplex(P)
    windows, weights = tower_windows(C.M, w_min, w_max, T_max)
    windows = [W for W in windows if len(C.basis(W)) or len(C.basis(Window(W.key, W.level, 1 - W.parity)))]
    weights = {W: weights[W] for W in windows}
    data = weyl_action(C, windows, weights, jobs=jobs)
    caveat = None if P.quasi_homogeneous else "filtration: potentials are not quasi-homogeneous; dimensions only, no stability guarantee"
    return TwistedCohomology(data, C, caveat)


# ------------------------------------------------------------------- checks


@dataclass
class CheckReport:
    name: str
    checked: int
    failures: list[str]

    @property
    def ok(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        return {"check": self.name, "checked": self.checked, "ok": self.ok, "failures": self.failures[:5]}


def _tau_vec_apply(fn, vec: Mapping) -> dict:
    out: dict = {}
    for el, c in vec.items():
        add_into(out, fn(el), c)
    return out


def check_homotopy_identity(P: PolynomialAlgebraPresentation, w_max: int, T_max: int, w_min: int = 0) -> CheckReport:
    """df_i^d(w) = (f_i d)(D w) + D(f_i d w) on every basis element (alpha, w) of the windows.

    D is the folded twisted differential on Omega[tau], applied without
    truncation so the identity is checked in the full module.
    """
    C = TwistedComplex(P)
    windows, _ = tower_windows(C.M, w_min, w_max, T_max)
    failures = []
    checked = 0
    dfs = [df_of(f) for f in P.potentials]

    def fd(i, el):
        alpha, x = el
        out: dict = {}
        for z, c0 in exterior_d(x).items():
            for y, c in poly_times(P.potentials[i], z).items():
                add_into(out, {(alpha, y): c * c0})
        return out

    seen = set()
    for W in windows:
        for el in C.basis(W).elements:
            if el in seen:
                continue
            seen.add(el)
            alpha, x = el
            for i in range(P.m):
                checked += 1
                lhs = {(alpha, y): c for y, c in wedge_vec(dfs[i], exterior_d(x)).items()}
                rhs = _tau_vec_apply(lambda e: fd(i, e), C.D_image(el))
                add_into(rhs, _tau_vec_apply(C.D_image, fd(i, el)))
                if lhs != rhs:
                    failures.append(f"i={i + 1} on tau^{list(alpha)} {C.M.label(x)}")
    return CheckReport("homotopy identity df d = (f d) D + D (f d)", checked, failures)


def check_fold_agreement(P: PolynomialAlgebraPresentation, w_max: int, T_max: int, w_min: int = 0) -> CheckReport:
    """The fold of the plain module equals the directly built twisted complex.

    Compares bases, differential matrices and the d-tilde matrices window by window.
    """
    M = DeRhamModule(P, "plain")
    F = PeriodicComplex(M)
    C = TwistedComplex(P)
    windows, _ = tower_windows(M, w_min, w_max, T_max)
    failures = []
    checked = 0
    for W in windows:
        checked += 1
        if F.basis(W).elements != C.basis(W).elements:
            failures.append(f"basis differs at {W}")
            continue
        for x in F.basis(W).elements:
            if len(x[1][1]) % 2 != W.parity:
                failures.append(f"parity of {M.label(x[1])} is not {W.parity}")
        Wo = Window(W.key, W.level, 1 - W.parity)
        if F.D(W, Wo) != C.D(W, Wo):
            failures.append(f"differential differs at {W}")
        for i in range(1, P.m + 1):
            if W.level >= 1:
                if F.dtilde_matrix(i, W)[1] != C.dtilde_matrix(i, W)[1]:
                    failures.append(f"dtilde{i} differs at {W}")
    return CheckReport("fold agreement", checked, failures)


def identity_map(x) -> dict:
    return {x: Q(1)}
