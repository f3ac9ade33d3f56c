import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import helpers
from pseudopath import kernel as K
from pseudopath import semigroup as S
from pseudopath.errors import GridMismatch, NegativeVariation, SpecMismatch, TimeTooSmall

HEAT = K.EvolutionSpec(2, -0.5)
QUARTIC = K.EvolutionSpec(4, -1.0)


def test_heat_convolution_matches_gaussian():
    grid = K.Grid1D(-20, 20, 1024)
    a = K.compute_kernel(HEAT, 0.3, grid)
    b = K.compute_kernel(HEAT, 0.9, grid)
    c = S.convolve_kernels(a, b)
    assert c.t == pytest.approx(1.2)
    assert np.abs(c.values - helpers.heat_kernel(grid.points, 1.2)).max() < 1e-12


def test_convolution_argument_checks():
    g1, g2 = K.Grid1D(-20, 20, 1024), K.Grid1D(-20, 20, 512)
    with pytest.raises(GridMismatch):
        S.convolve_kernels(K.compute_kernel(HEAT, 1, g1), K.compute_kernel(HEAT, 1, g2))
    with pytest.raises(SpecMismatch):
        S.convolve_kernels(K.compute_kernel(HEAT, 1, g1),
                           K.compute_kernel(K.EvolutionSpec(2, -1.0), 1, g1))


def test_convolution_needs_origin_node():
    grid = K.Grid1D(-20.01, 20, 1024)
    with pytest.raises(GridMismatch):
        S.convolve_kernels(K.compute_kernel(HEAT, 1, grid), K.compute_kernel(HEAT, 1, grid))


def test_probe_rejects_small_times():
    with pytest.raises(TimeTooSmall):
        S.ConvolutionSemigroupProbe(HEAT, K.Grid1D(-1, 1, 8), times=(1e-5,))


def test_complex_coefficient_semigroup():
    spec = K.EvolutionSpec(4, -1 + 1j)
    probe = S.ConvolutionSemigroupProbe(spec, K.Grid1D(-40, 40, 2048))
    assert S.chapman_kolmogorov_residual(probe, 0.4, 0.7) < 1e-8


def test_schroedinger_semigroup():
    probe = S.ConvolutionSemigroupProbe(K.EvolutionSpec(2, -1j), K.Grid1D(-4, 4, 512))
    assert S.chapman_kolmogorov_residual(probe, 0.5, 0.5) < 1e-5


def test_quartic_marginal_variation():
    grid = K.Grid1D(-40, 40, 2048)
    rep = S.marginal_variation(QUARTIC, 2.0, 7, grid)
    assert rep.per_slice_tv > 1.2 and rep.total == pytest.approx(rep.per_slice_tv**7, rel=1e-14)
    assert rep.verdict is S.Verdict.UNBOUNDED
    assert rep.to_dict()["verdict"] == "NoBoundedComplexMeasure"
    assert S.partition_variation(QUARTIC, [0.1, 0.5, 1.4], grid) == pytest.approx(rep.per_slice_tv**3)


def test_marginal_variation_rejects_tiny_slices():
    with pytest.raises(TimeTooSmall):
        S.marginal_variation(HEAT, 1.0, 5000, K.Grid1D(-20, 20, 256))


def test_gate_on_empty_and_bad_lists():
    assert S.product_variation_gate([]) is S.Verdict.POSSIBLE
    with pytest.raises(NegativeVariation):
        S.product_variation_gate([1.0, -0.1])
    with pytest.raises(NegativeVariation):
        S.product_variation_gate([1.0, math.inf])


@given(st.lists(st.floats(0, 1), max_size=50))
def test_gate_abstains_for_subprobability_factors(tvs):
    assert S.product_variation_gate(tvs) is S.Verdict.POSSIBLE


@given(st.floats(1.001, 3), st.integers(1, 200))
def test_gate_fires_for_constant_growth(c, n):
    assert S.product_variation_gate([c] * n) is S.Verdict.UNBOUNDED


@given(st.lists(st.floats(0.5, 2), min_size=1, max_size=30), st.floats(-5, 5))
def test_gate_matches_log_threshold(tvs, thresh):
    expected = S.Verdict.POSSIBLE if sum(math.log(v) for v in tvs) <= thresh else S.Verdict.UNBOUNDED
    assert S.product_variation_gate(tvs, thresh) is expected
