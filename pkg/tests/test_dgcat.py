import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import koszul_table, poly
from twistedhp.dgcat import (
    BasisMorphism,
    CentralFamily,
    DgCategoryPresentation,
    ParseError,
    PolynomialAlgebraPresentation,
    enumerate_monomials,
    format_monomial,
    grading_projection,
    ground_field,
    matrix_category,
    parse_dg_category,
    parse_polynomial,
    parse_polynomial_text,
    truncated_polynomial,
    validate_central_family,
    validate_functor,
    validate_presentation,
)
from twistedhp.linalg import Q


def kinds(violations) -> set[str]:
    return {v.kind for v in violations}


# ------------------------------------------------------------- validation


def test_ground_field_is_valid():
    assert validate_presentation(ground_field()) == []


def test_degree_mismatch_is_reported():
    P = DgCategoryPresentation(
        ["o"],
        [BasisMorphism("1", "o", "o", 0), BasisMorphism("x", "o", "o", 0)],
        {"o": {"1": 1}},
        {("1", "1"): {"1": 1}, ("1", "x"): {"x": 1}, ("x", "1"): {"x": 1}},
        {"x": {"x": 1}},
    )
    v = validate_presentation(P)
    assert "degree-mismatch" in kinds(v)
    assert v[0].witness == ("x", "x")


def test_mat2_is_valid_with_elementary_products():
    M, corner, _ = matrix_category(ground_field(), 2)
    assert validate_presentation(M) == []
    for p in (1, 2):
        for q in (1, 2):
            for r in (1, 2):
                assert M.compose({f"e{p}{q}": 1}, {f"e{q}{r}": 1}) == {f"e{p}{r}": 1}
                other = 3 - q
                assert M.compose({f"e{p}{q}": 1}, {f"e{other}{r}": 1}) == {}
    # the corner functor is a functor that does not preserve units
    assert not corner.unital
    assert validate_functor(corner) == []


def test_broken_associativity_and_units():
    P = truncated_polynomial(3, weighted=False)
    P.composition[("x", "x^2")] = {"x": Q(1)}
    assert "associativity" in kinds(validate_presentation(P))
    U = ground_field()
    U.composition[("1", "1")] = {"1": Q(2)}
    assert "unit" in kinds(validate_presentation(U))


def test_koszul_table_is_valid_with_nonzero_differential():
    K = koszul_table(4)
    assert K.differential
    assert validate_presentation(K) == []


def test_leibniz_failure():
    K = koszul_table(4)
    K.differential["eps*x"] = {}
    assert "leibniz" in kinds(validate_presentation(K))


def test_central_families():
    K = ground_field()
    assert validate_central_family(K, CentralFamily([{"o": {}}])) == []
    M, _, t = matrix_category(K, 2, CentralFamily([{"o": {"1": 1}}]))
    assert validate_central_family(M, t) == []
    bad = validate_central_family(M, CentralFamily([{"o": {"e11": 1}}]))
    assert "not-central" in kinds(bad)
    assert any(v.witness == (1, "e12") for v in bad)
    T3 = truncated_polynomial(3)
    assert validate_central_family(T3, CentralFamily([{"o": {"x": 1}}])) == []


# ----------------------------------------------------------- polynomials


def test_enumerate_monomials():
    assert enumerate_monomials((1,), 3) == [(3,)]
    assert sorted(enumerate_monomials((1, 1), 2)) == [(0, 2), (1, 1), (2, 0)]
    assert enumerate_monomials((2, 3), 1) == []
    assert sorted(enumerate_monomials((2, 3), 6)) == [(0, 2), (3, 0)]


@given(st.lists(st.integers(1, 3), min_size=1, max_size=3), st.integers(0, 7))
@settings(max_examples=60, deadline=None)
def test_monomials_have_the_requested_weight(weights, w):
    mons = enumerate_monomials(weights, w)
    assert len(set(mons)) == len(mons)
    assert all(sum(a * b for a, b in zip(e, weights)) == w for e in mons)


def test_quasi_homogeneity():
    assert poly(2, "x*y").quasi_homogeneous
    assert poly(2, "x*y").degrees() == [2]
    assert not poly(1, "x^2 + x").quasi_homogeneous
    assert poly(2, "x^3 + y^2", weights=(2, 3)).quasi_homogeneous


def test_grading_projection():
    # monomial potentials keep the full multigrading
    assert grading_projection(poly(2, "x*y")) == [(1, 0), (0, 1)]
    # x^2 + y^2 only preserves the total degree
    assert grading_projection(poly(2, "x^2 + y^2")) in ([(1, 1)], [(-1, -1)])


def test_parse_polynomial_text():
    assert parse_polynomial_text("x^2*y - 3/2*x + 1", 2) == {(2, 1): 1, (1, 0): Q("-3/2"), (0, 0): 1}
    assert parse_polynomial_text("x*x", 1) == {(2,): 1}
    assert parse_polynomial_text("x - x", 1) == {}
    assert parse_polynomial_text("x2*x3", 3, ["x1", "x2", "x3"]) == {(0, 1, 1): 1}
    with pytest.raises(ParseError):
        parse_polynomial_text("z", 1)
    with pytest.raises(ParseError):
        parse_polynomial_text("", 1)
    assert format_monomial((2, 1)) == "x^2*y"


def test_parse_polynomial_document():
    P = parse_polynomial({"n": 2, "weights": [1, 2], "potentials": [[{"exponents": [2, 1], "coeff": "1/2"}]]})
    assert P.potentials == [{(2, 1): Q("1/2")}]
    with pytest.raises(ParseError):
        parse_polynomial({"n": 2, "potentials": [[{"exponents": [1]}]]})
    with pytest.raises(ParseError):
        parse_polynomial({"n": 1, "weights": [0], "potentials": []})
    with pytest.raises(ValueError):
        PolynomialAlgebraPresentation(1, (1,), [{(-1,): 1}])


def test_parse_dg_category_document():
    data = {
        "objects": ["o"],
        "morphisms": [{"name": "1", "source": "o", "target": "o", "degree": 0}],
        "identities": {"o": "1"},
        "composition": [{"left": "1", "right": "1", "result": [{"basis": "1", "coeff": "1"}]}],
        "central_family": [{"o": [{"basis": "1", "coeff": "3"}]}],
    }
    P, t = parse_dg_category(data)
    assert validate_presentation(P) == []
    assert t.at(0, "o") == {"1": 3}
    with pytest.raises(ParseError) as exc:
        parse_dg_category({"objects": ["o"], "morphisms": [{"name": "1"}]})
    assert "morphisms[0]" in exc.value.location
