import pytest

from conftest import poly, weighted_elements
from twistedhp.dgcat import CentralFamily, ground_field, truncated_polynomial
from twistedhp.derham import DeRhamModule, identity_map, tower_windows, twisted_cohomology
from twistedhp.hochschild import assemble_module
from twistedhp.lambdamod import (
    DimensionMismatch,
    PeriodicComplex,
    ScaledEModule,
    Window,
    WindowInfinite,
    chain_commutator_witness,
    check_relations,
    check_tower_compatibility,
    check_weyl_relations,
    intertwiner_solve,
    is_weak_morphism,
    multi_indices,
    weyl_action,
    weyl_commutator_on_homology,
)
from twistedhp.linalg import dense_inverse


def hochschild_data(P, w_max, t_max, jobs=1):
    M = assemble_module(P)
    windows, weights = tower_windows(M, 0, w_max, t_max)
    return weyl_action(PeriodicComplex(M), windows, weights, jobs=jobs)


def point_data(T_max=2, t=None):
    M = assemble_module(ground_field(), t)
    ws = [Window((), T, p, -5) for T in range(T_max + 1) for p in (0, 1)]
    return weyl_action(PeriodicComplex(M), ws, {W: 0 for W in ws})


class DroppedTwist(ScaledEModule):
    """E scaled to zero and every beta_i (i >= 1) dropped, e_i kept."""

    def _op(self, op, i, x):
        if op == "beta" and i >= 1:
            return {}
        return super()._op(op, i, x)


# ----------------------------------------------------------------- basics


def test_multi_indices():
    assert multi_indices(1, 2) == [(0,), (1,), (2,)]
    assert len(multi_indices(2, 2)) == 6
    assert all(sum(a) <= 3 for a in multi_indices(3, 3))


def test_unweighted_modules_need_a_floor():
    M = assemble_module(ground_field())
    with pytest.raises(WindowInfinite):
        M.elements((), 0)


def test_point_periodic_homology():
    data = point_data()
    for W, d in data.dims.items():
        assert d == (1 if W.parity == 0 else 0)


def test_periodic_differential_squares_to_zero():
    M = assemble_module(poly(2, "x*y"))
    PC = PeriodicComplex(M)
    windows, _ = tower_windows(M, 0, 3, 2)
    assert all(PC.D_squared_zero(W) for W in windows)


# ----------------------------------------------------------- Weyl action


@pytest.mark.parametrize("potentials", [("x",), ("x^2",), ("0",)])
def test_weyl_relations_on_the_line(potentials):
    data = hochschild_data(poly(1, *potentials), 4, 2)
    checks = check_weyl_relations(data)
    assert checks and all(c.ok for c in checks)
    assert all(c.ok for c in check_tower_compatibility(data))


def test_weyl_commutators_vanish_on_homology_but_not_on_chains():
    data = hochschild_data(poly(2, "x", "y"), 3, 2)
    checks = weyl_commutator_on_homology(data)
    assert checks and all(c.ok for c in checks)
    witnesses = [chain_commutator_witness(data.complex, W, 1, 2) for W in data.windows() if W.level >= 2]
    assert any(witnesses)


def test_parallel_prefetch_matches_serial():
    P = poly(1, "x^2")
    a, b = hochschild_data(P, 3, 1), hochschild_data(P, 3, 1, jobs=2)
    assert a.dims == b.dims
    assert a.maps == b.maps


def test_stability_is_reported_below_the_top_level():
    data = hochschild_data(poly(1, "x"), 3, 2)
    top = {W for W in data.windows() if W.level == 2}
    assert all(W not in data.stable for W in top)
    assert all(data.stable[W] for W in data.windows() if W.level < 2)


# ------------------------------------------------------------ intertwiners


def test_intertwiner_of_a_module_with_itself():
    data = point_data(1)
    it = intertwiner_solve(data, data)
    assert it is not None
    for W, B in it.blocks.items():
        assert B == [[1 if i == j else 0 for j in range(data.dims[W])] for i in range(data.dims[W])]


def test_intertwiner_blocks_are_invertible():
    data = hochschild_data(poly(1, "x^2"), 4, 2)
    it = intertwiner_solve(data, data)
    for W, B in it.blocks.items():
        if B:
            assert dense_inverse(B) is not None


def test_intertwiner_between_the_two_sides_of_the_line():
    P = poly(1, "x")
    hh = hochschild_data(P, 4, 3)
    dr = twisted_cohomology(P, 4, 3).data
    assert intertwiner_solve(hh, dr) is not None


def test_dimension_mismatch_is_a_certificate():
    a = hochschild_data(poly(1, "x"), 2, 1)
    b = hochschild_data(poly(1, "0"), 2, 1)
    with pytest.raises(DimensionMismatch) as exc:
        intertwiner_solve(a, b)
    assert exc.value.dim1 != exc.value.dim2


# ---------------------------------------------------------- weak morphisms


def scalar_line(c):
    return assemble_module(truncated_polynomial(1), CentralFamily([{"o": {"1": c}}]))


def test_strict_morphism_needs_zero_homotopy():
    M = scalar_line(1)
    pairs = [(k, T) for k in M.element_keys(0) for T in range(2)]
    res = is_weak_morphism(lambda x: {x: 1}, M, M, pairs)
    assert res.strict and res.found
    assert all(not h for hs in res.homotopies.values() for h in hs.values())


def test_non_closed_commutator_has_no_homotopy():
    M1, M2 = scalar_line(1), scalar_line(2)
    pairs = [(k, T) for k in M1.element_keys(0) for T in range(2)]
    res = is_weak_morphism(lambda x: {x: 1}, M1, M2, pairs)
    assert not res.strict and not res.found


def test_identity_of_forms_is_weak_but_not_strict():
    P = poly(2, "x*y")
    data = twisted_cohomology(P, 3, 1).data
    pairs = sorted({(W.key, W.level) for W in data.windows()})
    res = is_weak_morphism(identity_map, DeRhamModule(P, "prime"), DeRhamModule(P, "plain"), pairs)
    assert not res.strict
    assert res.found


# ----------------------------------------------------------- counterexample


@pytest.mark.parametrize("side", ["hochschild", "derham"])
def test_dropping_the_twist_breaks_the_relations(side):
    P = poly(1, "x^2")
    base = assemble_module(P) if side == "hochschild" else DeRhamModule(P, "prime")
    M = DroppedTwist(base, 0)
    rep = check_relations(M, weighted_elements(M, 3))
    bad = rep.first_failure()
    assert bad is not None and "E" in bad.name
    assert bad.witness and bad.residual
