import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import poly
from twistedhp.derham import exterior_d
from twistedhp.hkr import check_compatibilities, check_quasi_iso, compare_mt1, hkr_chain, hkr_matrix
from twistedhp.hochschild import assemble_module
from twistedhp.linalg import Q, add_into, rank

ONE, X, X2 = (0,), (1,), (2,)
DX = ((0,), (0,))


def hkr_vec(vec):
    out: dict = {}
    for ch, c in vec.items():
        add_into(out, hkr_chain(ch), c)
    return out


def test_hkr_examples():
    M = assemble_module(poly(1, "x^2"))
    assert hkr_chain((X2, ())) == {(X2, ()): 1}
    assert hkr_chain((ONE, (X, X))) == {}
    assert hkr_vec(M.d((ONE, (X, X)))) == {}
    assert hkr_vec(M.beta(0, (X2, ()))) == {((1,), (0,)): 2}
    assert hkr_vec(M.beta(0, (X2, ()))) == exterior_d((X2, ()))
    assert hkr_vec(M.beta(1, (ONE, (X,)))) == {}


def test_hkr_normalizes_by_factorial():
    # 1[x|y] -> 1/2 dx ^ dy with slots read in written order
    assert hkr_chain(((0, 0), ((1, 0), (0, 1)))) == {((0, 0), (0, 1)): Q("1/2")}
    assert hkr_chain(((0, 0), ((0, 1), (1, 0)))) == {((0, 0), (0, 1)): Q("-1/2")}


@pytest.mark.parametrize("potentials,w_max", [((), 4), (("x^2",), 6), (("x",), 5)])
def test_compatibilities_one_variable(potentials, w_max):
    rep = check_compatibilities(poly(1, *potentials), w_max)
    assert rep.ok
    assert rep.e_sign == -1
    assert not rep.sign_determined


@pytest.mark.parametrize("potentials", [("x*y",), ("x", "y"), ("x^2 + y^2",)])
def test_compatibilities_two_variables_fix_the_sign(potentials):
    rep = check_compatibilities(poly(2, *potentials), 4)
    assert rep.ok, rep.as_dict()
    assert rep.e_sign == -1
    assert rep.sign_determined


@pytest.mark.parametrize("w", range(0, 7))
def test_quasi_iso_line(w):
    q = check_quasi_iso(poly(1), w)
    assert q.ok
    assert q.form_dims == ([1] if w == 0 else [1, 1])


@pytest.mark.parametrize("w", range(0, 5))
def test_quasi_iso_plane(w):
    q = check_quasi_iso(poly(2), w)
    assert q.ok
    if w == 2:
        assert q.hh_dims == q.form_dims == q.ranks == [3, 4, 1]


@given(st.integers(1, 4))
@settings(max_examples=4, deadline=None)
def test_hkr_matrix_rank_is_the_form_count(w):
    """hkr is onto the forms of each weight (every form is hit by a chain)."""
    H = hkr_matrix(poly(2), w)
    assert rank(H.matrix) == len(H.forms)


def test_compare_on_the_line():
    rep = compare_mt1(poly(1, "x"), 4, 3)
    assert rep.verdict == "consistent"
    assert rep.weyl_ok and rep.tower_ok
    assert rep.intertwiner is not None
    assert rep.hkr_map_ok


def test_compare_detects_a_wrong_potential(monkeypatch):
    """Comparing against the de Rham side of a different potential is falsified."""
    from twistedhp import hkr as mod
    from twistedhp.derham import twisted_cohomology as real

    monkeypatch.setattr(mod, "twisted_cohomology", lambda P, *a, **kw: real(poly(1, "0"), *a, **kw))
    rep = compare_mt1(poly(1, "x"), 2, 1)
    assert rep.verdict == "falsified"
    assert rep.certificate["kind"] == "DimensionMismatch"
