from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twistedhp.linalg import (
    CompositionNonzero,
    NotACycle,
    Q,
    SparseMatrix,
    dense_inverse,
    dense_matmul,
    dense_rank,
    format_rational,
    homology,
    kernel_basis,
    kernel_basis_sparse,
    parse_rational,
    rank,
    solve_affine,
)


def dense(rows, cols=None):
    return SparseMatrix.from_dense(rows, cols)


small = st.integers(-3, 3)


@st.composite
def matrices(draw, max_rows=5, max_cols=5):
    r = draw(st.integers(0, max_rows))
    c = draw(st.integers(0, max_cols))
    rows = [[draw(small) for _ in range(c)] for _ in range(r)]
    return SparseMatrix.from_dense(rows, c)


@st.composite
def complexes(draw):
    """V -> W -> U with d_out d_in = 0: the columns of d_in are drawn from ker d_out."""
    n = draw(st.integers(1, 5))
    d_out_rows = [[draw(small) for _ in range(n)] for _ in range(draw(st.integers(0, 4)))]
    d_out = SparseMatrix.from_dense(d_out_rows, n)
    ker = kernel_basis_sparse(d_out)
    m = draw(st.integers(0, 4))
    cols = []
    for _ in range(m):
        col: dict = {}
        for k in ker:
            c = draw(small)
            for i, v in k.items():
                col[i] = col.get(i, 0) + c * v
        cols.append({i: v for i, v in col.items() if v})
    return SparseMatrix(n, m, cols), d_out


# ---------------------------------------------------------------- rationals


def test_rationals_roundtrip():
    assert parse_rational("-3/6") == Q(Fraction(-1, 2))
    assert format_rational(Q("4/2")) == "2"
    assert format_rational(Q("-1/3")) == "-1/3"
    with pytest.raises(ValueError):
        parse_rational("1/0")
    with pytest.raises(TypeError):
        Q(0.5)


# --------------------------------------------------------------------- rank


def test_rank_examples():
    assert rank(SparseMatrix(0, 0)) == 0
    assert rank(SparseMatrix.identity(2)) == 2
    assert rank(dense([[1, 2], [2, 4]])) == 1


def test_kernel_examples():
    assert kernel_basis(SparseMatrix.identity(3)) == []
    assert len(kernel_basis(SparseMatrix.zero(2, 3))) == 3
    (k,) = kernel_basis(dense([[1, 1]]))
    assert k[0] == -k[1] != 0


@given(matrices())
@settings(max_examples=80, deadline=None)
def test_kernel_complements_rank(A):
    K = kernel_basis_sparse(A)
    assert len(K) + rank(A) == A.cols
    for k in K:
        assert A.apply(k) == {}
    assert rank(SparseMatrix(A.cols, len(K), K)) == len(K)


@given(matrices())
@settings(max_examples=60, deadline=None)
def test_rank_of_transpose(A):
    assert rank(A) == rank(A.transpose()) == dense_rank(A.to_dense())


# ----------------------------------------------------------------- homology


def test_homology_examples():
    Z = SparseMatrix.zero
    assert homology(Z(3, 0), Z(0, 3)).dim == 3
    assert homology(SparseMatrix.identity(3), Z(0, 3)).dim == 0
    assert homology(dense([[0], [1]]), dense([[1, 0]])).dim == 0


def test_homology_rejects_nonzero_composite():
    with pytest.raises(CompositionNonzero):
        homology(dense([[1], [0]]), dense([[1, 0]]))


def test_coordinates_reject_non_cycles():
    H = homology(SparseMatrix.zero(2, 0), dense([[1, 0]]))
    assert H.dim == 1
    assert H.coordinates({1: 5}) == [5]
    with pytest.raises(NotACycle):
        H.coordinates({0: 1})


@given(complexes())
@settings(max_examples=80, deadline=None)
def test_homology_dimension_and_representatives(pair):
    d_in, d_out = pair
    H = homology(d_in, d_out)
    assert H.dim == (d_out.cols - rank(d_out)) - rank(d_in)
    for r in H.reps:
        assert d_out.apply(r) == {}
    # representatives stay independent modulo boundaries
    stacked = SparseMatrix(d_out.cols, d_in.cols + H.dim, list(d_in.columns()) + H.reps)
    assert rank(stacked) == rank(d_in) + H.dim
    for j, r in enumerate(H.reps):
        assert H.coordinates(r) == [1 if i == j else 0 for i in range(H.dim)]


# ------------------------------------------------------------ affine solving


def test_solve_examples():
    assert solve_affine(SparseMatrix.identity(3), [1, -2, 5]) == [1, -2, 5]
    assert solve_affine(SparseMatrix.zero(2, 2), [0, 0]) == [0, 0]
    x = solve_affine(dense([[1, 1]]), [2])
    assert x[0] + x[1] == 2
    assert solve_affine(dense([[1, 1], [1, 1]]), [1, 2]) is None


@given(matrices(), st.lists(small, min_size=5, max_size=5))
@settings(max_examples=80, deadline=None)
def test_solve_none_iff_rank_jumps(A, rhs):
    b = rhs[: A.rows]
    x = solve_affine(A, b)
    aug = SparseMatrix(A.rows, A.cols + 1, list(A.columns()) + [{i: Q(v) for i, v in enumerate(b) if v}])
    if x is None:
        assert rank(aug) > rank(A)
    else:
        assert rank(aug) == rank(A)
        assert A.apply({j: v for j, v in enumerate(x) if v}) == {i: Q(v) for i, v in enumerate(b) if v}


def test_dense_inverse():
    a = [[Q(2), Q(1)], [Q(1), Q(1)]]
    inv = dense_inverse(a)
    assert dense_matmul(a, inv) == [[1, 0], [0, 1]]
    assert dense_inverse([[Q(1), Q(2)], [Q(2), Q(4)]]) is None
