import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import special_ortho_group

import helpers
from pseudopath import oscillatory as O
from pseudopath.errors import DimensionTooLarge, NonNested, SingularOperator
from pseudopath.projective import AtomicComplexMeasure


def _integrand(locs, weights, hbar=1.0):
    locs = np.atleast_2d(np.asarray(locs, dtype=float))
    return O.FresnelIntegrand(locs.shape[1], AtomicComplexMeasure(locs, weights, locs.shape[1]), hbar)


def test_operator_validation():
    with pytest.raises(SingularOperator):
        O.FiniteRankOperator(2, [0.5, 1.0])
    with pytest.raises(ValueError):
        O.FiniteRankOperator(2, [0.1, 0.2], np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_from_matrix_and_index():
    M = np.array([[1.5, 0.5], [0.5, -0.3]])
    B = O.FiniteRankOperator.from_matrix(M)
    assert np.allclose(B.matrix, M)
    assert B.index == 1


@pytest.mark.parametrize("lam", [[0.3], [2.0], [0.5, -1.0], [1.5, 3.0, -0.2], [0.9, 2.5, 4.0, -2.0]])
def test_determinant_matches_linear_algebra(lam):
    rng = np.random.default_rng(len(lam))
    Q = special_ortho_group.rvs(len(lam), random_state=rng) if len(lam) > 1 else np.eye(1)
    B = O.FiniteRankOperator(len(lam), lam, Q)
    assert O.fredholm_det(B) == pytest.approx(np.linalg.det(np.eye(len(lam)) - B.matrix), rel=1e-12)
    assert O.inverse_sqrt_det(B) ** -2 == pytest.approx(O.fredholm_det(B), rel=1e-12)


@pytest.mark.parametrize("lam, eta, hbar", [(0.0, 0.0, 1.0), (0.5, 1.2, 1.0), (-0.8, -0.7, 0.5),
                                            (2.0, 0.0, 1.0), (3.0, 0.4, 1.3), (0.7, 2.0, 0.8)])
def test_one_dimensional_closed_form(lam, eta, hbar):
    B = O.FiniteRankOperator(1, [lam])
    f = _integrand([[eta]], [1.0], hbar)
    expected = helpers.fresnel_1d(1 - lam, eta, hbar)
    assert O.parseval_rhs(B, f) == pytest.approx(expected, abs=1e-14)
    for method in ("regularized", "growing_box"):
        assert O.fresnel_quadrature_lhs(B, f, method) == pytest.approx(expected, rel=1e-5)


def test_branch_at_two_is_minus_i():
    B = O.FiniteRankOperator(1, [2.0])
    f = O.FresnelIntegrand(1, AtomicComplexMeasure.unit(1))
    assert O.parseval_rhs(B, f) == pytest.approx(-1j, abs=1e-15)
    assert O.fresnel_quadrature_lhs(B, f, "growing_box") == pytest.approx(-1j, abs=1e-8)


def test_quadrature_dimension_limit():
    B = O.FiniteRankOperator.zero(4)
    f = O.FresnelIntegrand(4, AtomicComplexMeasure.unit(4))
    with pytest.raises(DimensionTooLarge):
        O.fresnel_quadrature_lhs(B, f)
    with pytest.raises(ValueError):
        O.fresnel_quadrature_lhs(O.FiniteRankOperator.zero(1), O.FresnelIntegrand(1, AtomicComplexMeasure.unit(1)), "simpson")


def test_quadrature_with_indefinite_operator():
    rng = np.random.default_rng(3)
    Q = special_ortho_group.rvs(3, random_state=rng)
    B = O.FiniteRankOperator(3, [2.5, -0.5, 0.3], Q)
    f = _integrand(rng.uniform(-1, 1, (3, 3)), [1.0, -0.5j, 0.25])
    rhs = O.parseval_rhs(B, f)
    for method in ("regularized", "growing_box"):
        assert abs(O.fresnel_quadrature_lhs(B, f, method) - rhs) / abs(rhs) < 1e-4


def test_chain_validation():
    B = O.FiniteRankOperator.zero(3)
    f = O.FresnelIntegrand(3, AtomicComplexMeasure.unit(3))
    good = O.coordinate_chain([0, 1, 2])
    short = good[:2]
    with pytest.raises(NonNested):
        O.idim_osc_approx(B, f, 3, [good, short])
    swapped = [np.eye(3)[:, [0]], np.eye(3)[:, [1, 2]], np.eye(3)]
    with pytest.raises(NonNested):
        O.idim_osc_approx(B, f, 3, [good, swapped])
    big = O.FiniteRankOperator.zero(7)
    with pytest.raises(DimensionTooLarge):
        O.idim_osc_approx(big, O.FresnelIntegrand(7, AtomicComplexMeasure.unit(7)), 7,
                          [O.coordinate_chain(range(7))] * 2)


def test_chains_in_higher_dimension_with_closed_levels():
    rng = np.random.default_rng(11)
    D = 6
    Q = special_ortho_group.rvs(D, random_state=rng)
    B = O.FiniteRankOperator(D, rng.uniform(-0.8, 0.8, D), Q)
    f = _integrand(rng.uniform(-1, 1, (2, D)), [1.0, 0.3j])
    chains = [O.coordinate_chain(rng.permutation(D)),
              O.frame_chain(special_ortho_group.rvs(D, random_state=rng))]
    values = O.idim_osc_approx(B, f, D, chains, method="closed")
    rhs = O.parseval_rhs(B, f)
    assert all(len(v) == D for v in values)
    assert all(v[-1] == pytest.approx(rhs, rel=1e-12) for v in values)
    # intermediate levels depend on the chain
    assert abs(values[0][2] - values[1][2]) > 1e-6


@settings(max_examples=60)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_closed_form_is_rotation_invariant(d, seed):
    rng = np.random.default_rng(seed)
    lam = rng.uniform(-3, 3, d)
    lam[np.abs(1 - lam) < 1e-2] = 0.0
    R = special_ortho_group.rvs(d, random_state=rng) if d > 1 else np.eye(1)
    y = rng.uniform(-2, 2, (2, d))
    w = [1.0, 0.5 - 0.5j]
    B = O.FiniteRankOperator(d, lam)
    BR = O.FiniteRankOperator(d, lam, R)
    a = O.parseval_rhs(B, _integrand(y, w))
    b = O.parseval_rhs(BR, _integrand(y @ R.T, w))
    assert a == pytest.approx(b, rel=1e-10)


@settings(max_examples=30)
@given(st.floats(-0.8, 0.8), st.floats(-2, 2), st.floats(0.3, 2))
def test_growing_box_matches_closed_form_1d(lam, eta, hbar):
    B = O.FiniteRankOperator(1, [lam])
    f = _integrand([[eta]], [1.0], hbar)
    assert O.fresnel_quadrature_lhs(B, f, "growing_box") == pytest.approx(O.parseval_rhs(B, f), rel=1e-8)


def test_zero_measure_gives_zero():
    f = O.FresnelIntegrand(2, AtomicComplexMeasure.zero(2))
    B = O.FiniteRankOperator(2, [0.1, 0.2])
    assert O.parseval_rhs(B, f) == 0
    assert math.isclose(abs(O.fresnel_quadrature_lhs(B, f)), 0.0, abs_tol=1e-15)
