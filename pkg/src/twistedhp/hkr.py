"""The HKR map from Hochschild chains of k[x_1..x_n] to differential forms.

``hkr(phi0[phi1|...|phin]) = (1/n!) phi0 dphi1 ^ ... ^ dphin`` with the slots
read in written order.  Besides the five operator compatibilities and the
quasi-isomorphism certificate, :func:`compare_mt1` runs the full periodic
comparison between the Hochschild side and the twisted de Rham side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .dgcat import PolynomialAlgebraPresentation, enumerate_monomials, format_monomial
from .derham import (
    DeRhamModule,
    TwistedComplex,
    exterior_d,
    form_sort_key,
    forms_with_exponent_list,
    tower_windows,
    twisted_cohomology,
    wedge_vec,
)
from .hochschild import HochschildModule, assemble_module
from .lambdamod import (
    DimensionMismatch,
    PeriodicComplex,
    Window,
    WeylActionData,
    check_tower_compatibility,
    check_weyl_relations,
    induced_map_intertwines,
    intertwiner_solve,
    weyl_action,
    window_dict,
)
from .linalg import Q, SparseMatrix, add_into, dense_rank, format_rational, homology


def hkr_chain(ch) -> dict:
    """Image of one chain of the polynomial algebra under the HKR map."""
    a0, S = ch
    vec = {(a0, ()): Q(1)}
    for s in S:
        vec = wedge_vec(vec, exterior_d((s, ())))
        if not vec:
            return {}
    f = math.factorial(len(S))
    if f != 1:
        inv = Q(1) / f
        vec = {k: v * inv for k, v in vec.items()}
    return vec


@dataclass
class HkrMatrix:
    weight: int
    matrix: SparseMatrix
    chains: list
    forms: list


def hkr_matrix(P: PolynomialAlgebraPresentation, w: int, module: HochschildModule | None = None) -> HkrMatrix:
    M = module or assemble_module(P)
    chains = M.chains_of_weight(w)
    forms = sorted(forms_with_exponent_list(enumerate_monomials(P.weights, w), None), key=form_sort_key)
    idx = {x: j for j, x in enumerate(forms)}
    cols = []
    for ch in chains:
        cols.append({idx[k]: v for k, v in hkr_chain(ch).items()})
    return HkrMatrix(w, SparseMatrix(len(forms), len(chains), cols), chains, forms)


@dataclass
class CompatibilityReport:
    checks: dict[str, tuple[int, int, str | None]]  # name -> (checked, failures, witness)
    e_sign: int | None
    sign_determined: bool = False

    @property
    def ok(self) -> bool:
        return all(f == 0 for _, f, _ in self.checks.values()) and self.e_sign is not None

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "E_sign": self.e_sign,
            "E_sign_determined": self.sign_determined,
            "checks": [
                {"identity": k, "checked": c, "failures": f, **({"witness": w} if w else {})}
                for k, (c, f, w) in self.checks.items()
            ],
        }


def check_compatibilities(P: PolynomialAlgebraPresentation, w_max: int, w_min: int = 0) -> CompatibilityReport:
    """Exact operator compatibilities of the HKR map on all chains of weight <= w_max.

    Checked: hkr b = 0, hkr B = d hkr, hkr beta_i = -df_i ^ hkr, hkr e_i = f_i hkr,
    and hkr E_i = s (1/2 df_i ^ d) hkr where the sign s is determined
    empirically (+1 or -1) and reported.
    """
    C = assemble_module(P)
    W = DeRhamModule(P, "prime")
    checks: dict = {}

    def record(name, ok, ch):
        c, f, wit = checks.get(name, (0, 0, None))
        c += 1
        if not ok:
            f += 1
            wit = wit or C.label(ch)
        checks[name] = (c, f, wit)

    def eps(vec):
        out: dict = {}
        for ch, c in vec.items():
            add_into(out, hkr_chain(ch), c)
        return out

    signs = {1: True, -1: True}
    for w in range(w_min, w_max + 1):
        for ch in C.chains_of_weight(w):
            e0 = hkr_chain(ch)
            record("hkr b = 0", not eps(C.d(ch)), ch)
            record("hkr B = d hkr", eps(C.beta(0, ch)) == W.apply_vec("beta", 0, e0), ch)
            for i in range(1, P.m + 1):
                record(f"hkr beta{i} = -df{i} hkr", eps(C.beta(i, ch)) == W.apply_vec("beta", i, e0), ch)
                record(f"hkr e{i} = f{i} hkr", eps(C.e(i, ch)) == W.apply_vec("e", i, e0), ch)
                lhs = eps(C.E(i, ch))
                rhs = W.apply_vec("E", i, e0)
                for s in (1, -1):
                    if signs[s] and lhs != {k: s * v for k, v in rhs.items()}:
                        signs[s] = False
    # With one variable both signs pass (df ^ d vanishes on the relevant
    # forms); -1 is the sign forced as soon as there are two variables.
    good = [s for s in (1, -1) if signs[s]]
    e_sign = -1 if -1 in good else (good[0] if good else None)
    determined = P.m > 0 and len(good) == 1
    if P.m:
        for i in range(1, P.m + 1):
            checks[f"hkr E{i} = s (1/2 df{i} d) hkr"] = (checks[f"hkr e{i} = f{i} hkr"][0], 0 if good else 1, None)
    return CompatibilityReport(checks, e_sign, determined)


@dataclass
class QuasiIsoReport:
    weight: int
    hh_dims: list[int]
    form_dims: list[int]
    ranks: list[int]

    @property
    def ok(self) -> bool:
        n = max(len(self.hh_dims), len(self.form_dims))
        pad = lambda v: v + [0] * (n - len(v))
        return pad(self.hh_dims) == pad(self.form_dims) == pad(self.ranks)

    def as_dict(self) -> dict:
        return {"weight": self.weight, "HH": self.hh_dims, "Omega": self.form_dims, "rank": self.ranks, "ok": self.ok}


def check_quasi_iso(P: PolynomialAlgebraPresentation, w: int, module: HochschildModule | None = None) -> QuasiIsoReport:
    """b-homology of the weight-w chains against forms of weight w, with the rank of hkr on representatives."""
    C = module or assemble_module(P)
    chains = C.chains_of_weight(w)
    by_len: dict[int, list] = {}
    for ch in chains:
        by_len.setdefault(len(ch[1]), []).append(ch)
    top = max(by_len) if by_len else 0
    forms = sorted(forms_with_exponent_list(enumerate_monomials(P.weights, w), None), key=form_sort_key)
    by_q: dict[int, list] = {}
    for x in forms:
        by_q.setdefault(len(x[1]), []).append(x)
    hh, om, rk = [], [], []
    for q in range(top + 1):
        cur = by_len.get(q, [])
        lower = by_len.get(q - 1, [])
        upper = by_len.get(q + 1, [])
        idx_cur = {c: j for j, c in enumerate(cur)}
        idx_low = {c: j for j, c in enumerate(lower)}
        d_in = SparseMatrix(len(cur), len(upper), [{idx_cur[y]: v for y, v in C.d(c).items()} for c in upper])
        d_out = SparseMatrix(len(lower), len(cur), [{idx_low[y]: v for y, v in C.d(c).items()} for c in cur])
        H = homology(d_in, d_out)
        fq = by_q.get(q, [])
        fidx = {x: j for j, x in enumerate(fq)}
        images = []
        for r in H.reps:
            img: dict = {}
            for j, c in r.items():
                for x, v in hkr_chain(cur[j]).items():
                    add_into(img, {fidx[x]: 1}, v * c)
            images.append(img)
        rows = [[img.get(j, 0) for j in range(len(fq))] for img in images]
        hh.append(H.dim)
        om.append(len(fq))
        rk.append(dense_rank(rows) if rows else 0)
    while len(hh) > 1 and hh[-1] == 0 and om[-1] == 0:
        hh.pop(), om.pop(), rk.pop()
    return QuasiIsoReport(w, hh, om, rk)


# ----------------------------------------------------------------- comparison driver


@dataclass
class ComparisonReport:
    instance: dict
    w_min: int
    w_max: int
    t_max: int
    hochschild: WeylActionData
    derham: WeylActionData
    verdict: str
    intertwiner: object | None = None
    certificate: dict | None = None
    weyl_ok: bool = True
    weyl_checked: int = 0
    tower_ok: bool = True
    hkr_map_ok: bool | None = None
    caveat: str | None = None
    extras: dict = field(default_factory=dict)

    @property
    def consistent(self) -> bool:
        return self.verdict == "consistent"


def hkr_induced_map(Hc: WeylActionData, Hd: WeylActionData) -> dict | None:
    """Matrices of the map induced by hkr between the two periodic homologies, per window."""
    PC, PD = Hc.complex, Hd.complex
    out = {}
    for W in Hc.dims:
        if W not in Hd.dims:
            continue
        Bc, Bd = PC.basis(W), PD.basis(W)
        cols = []
        for el in Bc.elements:
            alpha, ch = el
            col = {}
            for x, v in hkr_chain(ch).items():
                col[Bd.index[(alpha, x)]] = v
            cols.append(col)
        A = SparseMatrix(len(Bd), len(Bc), cols)
        out[W] = PC.induced(PC.homology(W), PD.homology(W), A)
    return out


def compare_mt1(P: PolynomialAlgebraPresentation, w_max: int = 4, t_max: int = 2, w_min: int = 0, instance: dict | None = None,
                jobs: int = 1) -> ComparisonReport:
    """Periodic homology with Weyl action on both sides and an intertwiner search."""
    C = assemble_module(P)
    PC = PeriodicComplex(C)
    windows, weights = tower_windows(C, w_min, w_max, t_max)
    Hc = weyl_action(PC, windows, weights, jobs=jobs)
    tc = twisted_cohomology(P, w_max, t_max, w_min, jobs=jobs)
    Hd = tc.data
    rep = ComparisonReport(instance or {}, w_min, w_max, t_max, Hc, Hd, "consistent", caveat=tc.caveat)
    wc = check_weyl_relations(Hc) + check_weyl_relations(Hd)
    rep.weyl_checked = len(wc)
    rep.weyl_ok = all(c.ok for c in wc)
    rep.tower_ok = all(c.ok for c in check_tower_compatibility(Hc) + check_tower_compatibility(Hd))
    try:
        it = intertwiner_solve(Hc, Hd)
    except DimensionMismatch as exc:
        rep.verdict = "falsified"
        rep.certificate = {"kind": "DimensionMismatch", "window": window_dict(exc.window, weights), "hochschild": exc.dim1, "derham": exc.dim2}
        return rep
    if tc.caveat is not None:
        rep.verdict = "dimensions-only"
    if it is None:
        rep.verdict = "no-intertwiner"
        rep.certificate = {"kind": "NoInvertibleSolution"}
    else:
        rep.intertwiner = it
    phi = hkr_induced_map(Hc, Hd)
    if phi is not None:
        iso = all(dense_rank(phi[W]) == Hc.dims[W] == Hd.dims[W] for W in phi)
        rep.hkr_map_ok = iso and induced_map_intertwines(Hc, Hd, phi)
    if not (rep.weyl_ok and rep.tower_ok):
        rep.verdict = "falsified"
        rep.certificate = {"kind": "WeylRelationFailure"}
    return rep
