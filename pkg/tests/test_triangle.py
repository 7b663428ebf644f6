"""Gram forms, reflections and the (3,3,n) triangle groups."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from crlimset.errors import Degenerate, OutOfRange, Unsupported, WrongSignature
from crlimset.hermitian import GroupElement, HermitianForm, IsometryType, classify, projective_distance
from crlimset.triangle import (
    INF,
    RIGID,
    TriangleSpec,
    admissible_bound,
    build,
    discreteness_check,
    gram_determinant,
    gram_matrix,
    reflection_matrices,
    theta_unipotent,
    trace_ijkj,
)


def proj_id(g: GroupElement) -> float:
    return projective_distance(g, GroupElement.identity(g.form))


def test_gram_examples():
    with pytest.raises(Degenerate):
        gram_matrix(TriangleSpec(3, 3, 4, math.pi / 2))
    assert gram_determinant(TriangleSpec.unipotent(3, 3, 4)) == pytest.approx(-1 / 8)
    H = gram_matrix(TriangleSpec(2, 4, 6, 0.0)).entries
    assert np.abs(H.imag).max() == 0
    assert H[0, 1] == pytest.approx(0.0, abs=1e-15)


def test_wrong_signature():
    # cos(theta) above the admissible bound gives a positive definite form
    with pytest.raises(WrongSignature):
        gram_matrix(TriangleSpec(3, 3, 4, 1.5))


def test_admissible_bound():
    assert admissible_bound(3, 3, 4) == pytest.approx(0.0, abs=1e-15)
    assert admissible_bound(3, 3, INF) == pytest.approx(1.0)
    c = math.cos(math.pi / 5)
    assert admissible_bound(3, 3, 5) == pytest.approx((c * c - 0.5) / (c / 2))
    assert admissible_bound(2, 4, 6) is RIGID


def test_theta_unipotent():
    assert theta_unipotent(4) == pytest.approx(1.932163, abs=1e-6)
    assert theta_unipotent(INF) == pytest.approx(math.acos(0.25))
    assert theta_unipotent(3) == pytest.approx(math.pi)
    with pytest.raises(OutOfRange):
        theta_unipotent(2)


def test_theta_unipotent_against_root_finder():
    # the root of tr(I3 I2 I1 I2) - 3 computed from built matrices
    def excess(theta):
        return build(TriangleSpec(3, 3, 5, theta)).ijkj.trace.real - 3

    lo = math.acos(admissible_bound(3, 3, 5)) + 1e-9
    root = brentq(excess, lo, math.pi, xtol=1e-14)
    assert root == pytest.approx(theta_unipotent(5), abs=1e-10)


def test_trace_formula_example():
    spec = TriangleSpec(3, 3, 4, math.pi)
    assert trace_ijkj(spec) == pytest.approx(2 + 2 * math.sqrt(2))
    assert build(spec).ijkj.trace == pytest.approx(2 + 2 * math.sqrt(2))


@given(
    st.sampled_from([4, 5, 6, 7, 8, 9, 12, 20, INF]),
    st.floats(0.0, 1.0),
)
def test_trace_formula_matches_matrices(r, u):
    bound = admissible_bound(3, 3, r)
    lo = math.acos(min(1.0, bound))
    theta = lo + (math.pi - lo) * u
    spec = TriangleSpec(3, 3, r, theta)
    if abs(gram_determinant(spec)) < 1e-9:
        return
    t = build(spec).ijkj.trace
    assert abs(t.imag) < 1e-9
    assert t.real == pytest.approx(trace_ijkj(spec), abs=1e-9)
    # trace range over the admissible interval
    c = math.cos(math.pi / r) if r != INF else 1.0
    assert 4 * (1 - c * c) - 1e-9 <= t.real <= 4 * c * (c + 1) + 1e-9


@given(st.sampled_from([4, 5, 7, 12, INF]), st.floats(0.0, 1.0))
def test_reflections_relations_and_form(r, u):
    lo = math.acos(min(1.0, admissible_bound(3, 3, r)))
    spec = TriangleSpec(3, 3, r, lo + (math.pi - lo) * max(u, 1e-3))
    T = build(spec)
    for I in T.reflections:
        assert np.allclose(I.matrix @ I.matrix, np.eye(3), atol=1e-12)
        assert I.det == pytest.approx(1)
    assert proj_id(T.x**3) < 1e-9
    assert proj_id(T.y**3) < 1e-9
    if r != INF:
        assert proj_id(T._product(T.I3, T.I1) ** r) < 1e-8
    assert classify(T.x).tag is IsometryType.REGULAR_ELLIPTIC


@given(st.sampled_from([4, 5, 7, INF]), st.floats(0.0, 1.0))
def test_conjugate_realization(r, u):
    """Realization at -theta is the entrywise conjugate of the one at theta."""
    lo = math.acos(min(1.0, admissible_bound(3, 3, r)))
    T = build(TriangleSpec(3, 3, r, lo + (math.pi - lo) * max(u, 1e-3)))
    Hbar = HermitianForm(T.gram.entries.conj())
    for mine, ref in zip(reflection_matrices(Hbar.entries), T.reflections):
        assert np.array_equal(mine, ref.matrix.conj())
    assert T.ijkj.conjugate().trace == pytest.approx(np.conj(T.ijkj.trace))


def test_unipotent_at_theta_inf():
    for r in (4, 5, 6, 7, 8, 12, INF):
        T = build(TriangleSpec.unipotent(3, 3, r))
        assert classify(T.ijkj).tag is IsometryType.UNIPOTENT
        assert discreteness_check(T)


def test_discreteness_examples():
    assert discreteness_check(build(TriangleSpec(3, 3, 4, math.pi)))
    spec = TriangleSpec(3, 3, 4, math.acos(-0.01))
    assert trace_ijkj(spec) == pytest.approx(2.028, abs=1e-3)
    assert not discreteness_check(build(spec))
    with pytest.raises(Unsupported):
        discreteness_check(build(TriangleSpec(2, 4, 6, 0.0)))


def test_spec_validation():
    with pytest.raises(ValueError):
        TriangleSpec(3, 3, 3)
    with pytest.raises(ValueError):
        TriangleSpec(3, 4, 3, 1.0)
    with pytest.raises(ValueError):
        TriangleSpec(3, 3, 4, -0.1)
    with pytest.raises(ValueError):
        TriangleSpec(3, 3, 4.5, 1.0)
