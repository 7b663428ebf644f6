"""Pairs of order-3 elliptics with xy of order n and unipotent commutator."""

from __future__ import annotations

import numpy as np
import pytest

from crlimset.errors import NoConvergence
from crlimset.hermitian import CUBE_ROOTS, GroupElement, IsometryType, classify, form_residual, projective_distance
from crlimset.lagrangian import lagrangian_solve
from crlimset.presentation import load_fixture, verify_morphism
from crlimset.triangle import elliptic_trace
from crlimset.words import WordEvaluator

# frozen from a converged solve; the published value is 2.820 + 0.222i
T4 = 2.819676943591 + 0.222310444601j


def proj_order(M, k):
    P = np.linalg.matrix_power(M, k)
    return min(np.abs(P - w * np.eye(3)).max() for w in CUBE_ROOTS)


@pytest.fixture(scope="module")
def sol4():
    return lagrangian_solve(4)


def test_value_n4(sol4):
    assert abs(sol4.t - (2.820 + 0.222j)) < 5e-3
    assert abs(sol4.t - T4) < 1e-9
    assert sol4.residual < 1e-8


def test_matrices_independently(sol4):
    X, Y = sol4.X.matrix, sol4.Y.matrix
    for M in (X, Y):
        assert abs(np.linalg.det(M) - 1) < 1e-10
        assert form_residual(M, sol4.X.form) < 1e-10
        assert proj_order(M, 3) < 1e-9
    assert proj_order(X @ Y, 4) < 1e-9
    comm = X @ Y @ np.linalg.inv(X) @ np.linalg.inv(Y)
    assert min(abs(w * np.trace(comm) - 3) for w in CUBE_ROOTS) < 1e-8
    assert np.trace(X @ np.linalg.inv(Y)) == pytest.approx(sol4.t, abs=1e-10)
    assert classify(sol4.commutator).tag is IsometryType.UNIPOTENT


@pytest.mark.parametrize("n", range(4, 11))
def test_family(n):
    s = lagrangian_solve(n)
    assert s.residual < 1e-8
    assert s.t.imag > 1e-3  # never the real (triangle group) value
    xy = s.X @ s.Y
    assert min(abs(w * xy.trace - elliptic_trace(n)) for w in CUBE_ROOTS) < 1e-8


def test_deterministic():
    a, b = lagrangian_solve(5, seed=7), lagrangian_solve(5, seed=7)
    assert a.t == b.t
    assert np.array_equal(a.X.matrix, b.X.matrix)


def test_errors():
    with pytest.raises(ValueError):
        lagrangian_solve(3)
    with pytest.raises(ValueError):
        lagrangian_solve(4.0)
    with pytest.raises(NoConvergence):
        lagrangian_solve(4, restarts=0)


def test_m023_relators_map_to_identity(sol4):
    P, [m] = load_fixture("m023_lagrangian")
    ev = WordEvaluator({"x": sol4.X, "y": sol4.Y})
    gamma = WordEvaluator({g: ev(m.images[g]) for g in P.generators})
    ident = GroupElement.identity(sol4.X.form)
    for r in P.relators:
        assert projective_distance(gamma(r), ident) < 1e-8
    assert verify_morphism(P, m).passed
