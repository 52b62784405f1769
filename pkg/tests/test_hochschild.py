import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import bounded_elements, koszul_table, mat2_scalar, poly, truncated_x3, weighted_elements
from twistedhp.dgcat import BasisMorphism, CentralFamily, DgCategoryPresentation, ground_field, matrix_category
from twistedhp.hochschild import (
    ChainWindow,
    NotStrictMorphism,
    assemble_module,
    check_strict,
    cone_module,
    connes_B,
    corner_morita,
    enumerate_chain_basis,
    full_subcategory,
    guillemet_op,
    hochschild_b,
    induced_map,
    operator_B,
    operator_b,
    operator_beta,
    operator_E,
    operator_e,
    operator_guillemet,
)
from twistedhp.lambdamod import PeriodicComplex, Window, WindowInfinite, check_relations, weyl_action
from twistedhp.linalg import SparseMatrix, homology

ONE, X, X2 = (0,), (1,), (2,)


@pytest.fixture(scope="module")
def line_x2():
    return assemble_module(poly(1, "x^2"))


# ------------------------------------------------------------ enumeration


def test_chain_enumeration(line_x2):
    M = assemble_module(poly(1))
    assert M.chains_of_weight(0) == [(ONE, ())]
    assert sorted(M.chains_of_weight(1)) == sorted([(X, ()), (ONE, (X,))])
    assert sorted(M.chains_of_weight(2)) == sorted([(X2, ()), (X, (X,)), (ONE, (X2,)), (ONE, (X, X))])


@given(st.integers(0, 6))
@settings(max_examples=7, deadline=None)
def test_chain_count_in_one_variable(w):
    # a chain of weight w is a composition of w with a possibly empty first part
    M = assemble_module(poly(1))
    assert len(M.chains_of_weight(w)) == (1 if w == 0 else 2 ** w)


def test_unweighted_windows_need_a_bound():
    M = assemble_module(ground_field())
    with pytest.raises(WindowInfinite):
        enumerate_chain_basis(M, ChainWindow())


# --------------------------------------------------------- hand evaluations


def test_b_on_a_length_two_chain(line_x2):
    assert hochschild_b(line_x2.cat, (ONE, (X, X))) == {(X, (X,)): 2, (ONE, (X2,)): -1}


def test_B_examples(line_x2):
    cat = line_x2.cat
    assert connes_B(cat, (X2, ())) == {(ONE, (X2,)): 1}
    assert connes_B(cat, (X, (X,))) == {}
    assert connes_B(cat, (ONE, (X,))) == {}


def test_beta_examples(line_x2):
    assert line_x2.beta(1, (ONE, (X,))) == {(ONE, (X, X2)): 1, (ONE, (X2, X)): -1}
    # beta(t)(a0[]) = -(-1)^|a0| a0[t]
    assert line_x2.beta(1, (X, ())) == {(X, (X2,)): -1}


def test_e_and_E_examples(line_x2):
    assert line_x2.e(1, (X, (X,))) == {((3,), (X,)): 1}
    assert line_x2.E(1, (X, ())) == {(ONE, (X, X2)): 1}
    assert line_x2.E(1, (ONE, (X,))) == {}


def test_guillemet_parts(line_x2):
    cat = line_x2.cat
    t = lambda o: cat.central(0, o)
    u0, u1 = guillemet_op(cat, t, (X, ()))
    assert u0 == line_x2.e(1, (X, ()))
    # intro sign (-1)^(p + n l + 1) at p = 1, n = l = 0 is +1
    assert u1 == {(ONE, (X, X2)): 1}
    P = poly(1, "x")
    M = assemble_module(P)
    assert guillemet_op(M.cat, lambda o: M.cat.central(0, o), (X, ()))[1] == {(ONE, (X, X)): 1}


def test_guillemet_differs_from_E_by_a_sign_per_term(line_x2):
    """Rebuilding E from the ungraded slot pattern needs the extra sign (-1)^(n + l)."""
    cat = line_x2.cat
    t = cat.central(0, "o")

    def rebuilt(ch):
        a0, S = ch
        n = len(S)
        out: dict = {}
        if cat.is_identity(a0):
            return out
        for p in range(1, n + 2):
            j = n - p + 1
            for l in range(p):
                sg = (-1) ** (p + n * l + 1) * (-1) ** (n + l)
                for c, v in t.items():
                    key = (ONE, S[n - l:] + (a0,) + S[:j] + (c,) + S[j:n - l])
                    out[key] = out.get(key, 0) + sg * v
        return {k: v for k, v in out.items() if v}

    for w in range(1, 6):
        for ch in line_x2.chains_of_weight(w):
            assert rebuilt(ch) == line_x2.E(1, ch)


def test_guillemet_window_operator_matches_e(line_x2):
    for w in range(4):
        u0, _ = operator_guillemet(line_x2, 1, ChainWindow(w))
        assert u0.matrix == operator_e(line_x2, 1, ChainWindow(w)).matrix


# ---------------------------------------------------------- window matrices


@pytest.mark.parametrize("w", range(5))
def test_window_operators_square_to_zero(line_x2, w):
    b0 = operator_b(line_x2, ChainWindow(w))
    assert (operator_b(line_x2, ChainWindow(w)).matrix @ b0.matrix).is_zero()
    B0 = operator_B(line_x2, ChainWindow(w))
    assert B0.source == b0.source
    beta = operator_beta(line_x2, 1, ChainWindow(w))
    assert beta.target == enumerate_chain_basis(line_x2, ChainWindow(w + 2))
    E = operator_E(line_x2, 1, ChainWindow(w))
    assert E.matrix.shape == (len(enumerate_chain_basis(line_x2, ChainWindow(w + 2))), len(b0.source))


# --------------------------------------------------------------- relations


def test_relations_polynomial(line_x2):
    rep = check_relations(line_x2, weighted_elements(line_x2, 6))
    assert rep.ok, rep.first_failure()
    assert {r.name for r in rep.results} >= {"b^2 = 0", "B^2 = 0", "bB + Bb = 0", "[b, E(t1)] = e(t1)B - Be(t1) - beta(t1)"}


def test_relations_two_potentials():
    M = assemble_module(poly(2, "x", "y"))
    rep = check_relations(M, weighted_elements(M, 4))
    assert rep.ok, rep.first_failure()
    names = {r.name for r in rep.results}
    assert {"beta(t1)beta(t2) + beta(t2)beta(t1) = 0", "[E(t1), beta(t2)] = 0", "[e(t2), beta(t1)] = 0"} <= names


def test_relations_finite_tables():
    for P, t in (mat2_scalar(3)[0::2], truncated_x3()):
        M = assemble_module(P, t)
        els = weighted_elements(M, 6) if M.weighted else bounded_elements(M, 5)
        rep = check_relations(M, els)
        assert rep.ok, rep.first_failure()


def test_relations_with_a_differential():
    M = assemble_module(koszul_table(4))
    rep = check_relations(M, weighted_elements(M, 5))
    assert rep.ok, rep.first_failure()


def test_periodic_differential_squares_to_zero_with_a_differential():
    M = assemble_module(koszul_table(4))
    PC = PeriodicComplex(M)
    for w in range(5):
        for k in M.element_keys(w):
            for T in (0, 1):
                for p in (0, 1):
                    assert PC.D_squared_zero(Window(k, T, p))
    # weight 0 only sees the unit
    data = weyl_action(PC, [Window(k, 0, p) for k in M.element_keys(0) for p in (0, 1)])
    assert sorted(data.dims.values()) == [0, 1]


# ------------------------------------------------------------ b-homology


def b_homology_dims(M, w):
    chains = M.chains_of_weight(w)
    by_len: dict = {}
    for ch in chains:
        by_len.setdefault(len(ch[1]), []).append(ch)
    dims = []
    for q in range(max(by_len) + 1):
        cur, low, up = by_len.get(q, []), by_len.get(q - 1, []), by_len.get(q + 1, [])
        ic, il = {c: j for j, c in enumerate(cur)}, {c: j for j, c in enumerate(low)}
        d_in = SparseMatrix(len(cur), len(up), [{ic[y]: v for y, v in M.d(c).items()} for c in up])
        d_out = SparseMatrix(len(low), len(cur), [{il[y]: v for y, v in M.d(c).items()} for c in cur])
        dims.append(homology(d_in, d_out).dim)
    return dims


@pytest.mark.parametrize("w", range(1, 6))
def test_hochschild_homology_of_the_line(w):
    dims = b_homology_dims(assemble_module(poly(1)), w)
    assert dims[:2] == [1, 1]
    assert all(d == 0 for d in dims[2:])


# ----------------------------------------------------- functors and cones


def two_object_arrow() -> DgCategoryPresentation:
    return DgCategoryPresentation(
        ["a", "b"],
        [BasisMorphism("ia", "a", "a", 0), BasisMorphism("ib", "b", "b", 0), BasisMorphism("f", "a", "b", 0)],
        {"a": {"ia": 1}, "b": {"ib": 1}},
        {("ia", "ia"): {"ia": 1}, ("ib", "ib"): {"ib": 1}, ("f", "ia"): {"f": 1}, ("ib", "f"): {"f": 1}},
    )


def hp_dims(M, N=5, T_max=1):
    PC = PeriodicComplex(M)
    ws = [Window((), T, p, -N) for T in range(T_max + 1) for p in (0, 1)]
    data = weyl_action(PC, ws, {W: 0 for W in ws})
    return {(W.level, W.parity): d for W, d in data.dims.items()}


def test_identity_functor_induces_identity():
    A = two_object_arrow()
    S, F, _ = full_subcategory(A, ["a", "b"])
    src, tgt = assemble_module(S), assemble_module(A)
    phi = induced_map(F, src, tgt)
    for x in bounded_elements(src, 4):
        assert phi(x) == {x: 1}


def test_corner_sends_unit_to_e11():
    K = ground_field()
    Mat, corner, _ = matrix_category(K, 2)
    src, tgt = assemble_module(K), assemble_module(Mat)
    (img,) = [induced_map(corner, src, tgt)(x) for x in bounded_elements(src, 3)]
    assert tgt.cat.to_old({a: v for (a, _), v in img.items()}) == {"e11": 1}
    assert check_strict(induced_map(corner, src, tgt), src, tgt, bounded_elements(src, 3)) == ["beta0 on 1[]"]


def test_corner_functor_composes():
    """Corner into Mat_2 then into Mat_2(Mat_2) is the corner into the composite."""
    K = ground_field()
    M2, c1, _ = matrix_category(K, 2)
    M4, c2, _ = matrix_category(M2, 2)
    a, b, c = assemble_module(K), assemble_module(M2), assemble_module(M4)
    f, g = induced_map(c1, a, b), induced_map(c2, b, c)
    for x in bounded_elements(a, 3):
        comp: dict = {}
        for y, v in f(x).items():
            for z, u in g(y).items():
                comp[z] = comp.get(z, 0) + v * u
        direct = c.cat.to_old({z[0]: v for z, v in comp.items()})
        assert direct == {"e11.e11": 1}


def test_cones_of_full_subcategories():
    A = two_object_arrow()
    amb = assemble_module(A)
    dims = {}
    for objs in ([], ["a"], ["a", "b"]):
        S, F, _ = full_subcategory(A, objs)
        sub = assemble_module(S)
        C = cone_module(sub, amb, induced_map(F, sub, amb), bounded_elements(sub, 5))
        assert check_relations(C, bounded_elements(C, 5)).ok
        dims[len(objs)] = (hp_dims(sub), hp_dims(C))
    amb_dims = hp_dims(amb)
    assert dims[0][1] == amb_dims
    assert all(v == 0 for v in dims[2][1].values())
    sub_dims, cone_dims = dims[1]
    for T in (0, 1):
        chi = lambda d: d[(T, 0)] - d[(T, 1)]
        assert chi(cone_dims) == chi(amb_dims) - chi(sub_dims)


def test_cone_rejects_non_strict_maps():
    K = ground_field()
    Mat, corner, _ = matrix_category(K, 2)
    src, tgt = assemble_module(K), assemble_module(Mat)
    with pytest.raises(NotStrictMorphism):
        cone_module(src, tgt, induced_map(corner, src, tgt), bounded_elements(src, 3))


# ------------------------------------------------------------------ Morita


def test_corner_morita_field():
    rep = corner_morita(ground_field(), None, 2, 5, 1)
    assert rep.ok
    assert rep.profile(0) == (1, 0)
    assert rep.strict_failures


def test_corner_morita_with_scalar_family():
    rep = corner_morita(ground_field(), CentralFamily([{"o": {"1": 3}}]), 2, 5, 1)
    assert rep.ok
    assert rep.profile(0) == (1, 0)
    # a scalar family acts by zero, so the quotient tower grows by one per level
    assert rep.profile(1) == (2, 0)
