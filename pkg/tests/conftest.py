"""Shared builders for the test suite."""

from __future__ import annotations

from pathlib import Path

import pytest

from twistedhp.dgcat import (
    BasisMorphism,
    CentralFamily,
    DgCategoryPresentation,
    PolynomialAlgebraPresentation,
    ground_field,
    matrix_category,
    parse_polynomial_text,
    truncated_polynomial,
)

ROOT = Path(__file__).resolve().parent.parent
INSTANCES = ROOT / "instances"


def poly(n: int, *potentials: str, weights=None) -> PolynomialAlgebraPresentation:
    """``poly(2, "x*y")`` is the plane with potential xy."""
    return PolynomialAlgebraPresentation(n, tuple(weights or (1,) * n), [parse_polynomial_text(f, n) for f in potentials])


def koszul_table(N: int = 4) -> DgCategoryPresentation:
    """k[x]/(x^N) tensor k[eps] with d(eps x^i) = x^(i+2): a graded algebra with a nonzero differential.

    eps has degree -1 and weight 2, so d is weight preserving.
    """
    names = {}
    morph = []
    for e in (0, 1):
        for i in range(N):
            if e == 0:
                nm = "1" if i == 0 else ("x" if i == 1 else f"x^{i}")
            else:
                nm = "eps" if i == 0 else ("eps*x" if i == 1 else f"eps*x^{i}")
            names[(e, i)] = nm
            morph.append(BasisMorphism(nm, "o", "o", -e, i + 2 * e))
    comp = {}
    for (e1, i1), n1 in names.items():
        for (e2, i2), n2 in names.items():
            if e1 + e2 <= 1 and i1 + i2 < N:
                comp[(n1, n2)] = {names[(e1 + e2, i1 + i2)]: 1}
    diff = {names[(1, i)]: {names[(0, i + 2)]: 1} for i in range(N) if i + 2 < N}
    return DgCategoryPresentation(["o"], morph, {"o": {"1": 1}}, comp, diff)


def mat2_scalar(c=3):
    """Mat_2 of the ground field with t = c times the identity."""
    K = ground_field()
    return matrix_category(K, 2, CentralFamily([{"o": {"1": c}}]))


def truncated_x3():
    """k[x]/(x^3), weighted, with t = x."""
    return truncated_polynomial(3), CentralFamily([{"o": {"x": 1}}])


def weighted_elements(M, w_max: int, w_min: int = 0) -> list:
    return [x for w in range(w_min, w_max + 1) for k in M.element_keys(w) for p in (0, 1) for x in M.elements(k, p)]


def bounded_elements(M, N: int) -> list:
    return [x for p in (0, 1) for x in M.elements((), p, -N)]


@pytest.fixture
def instances_dir() -> Path:
    return INSTANCES


def pytest_terminal_summary(terminalreporter):
    """Print one verdict line per acceptance criterion that ran."""
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, line = RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {line}")
