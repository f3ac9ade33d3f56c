"""Semigroup law and total-variation growth of complex kernels.

A family of complex kernels can only define a bounded complex measure on path
space if the total variations of its finite-dimensional marginals stay
bounded.  For a translation-invariant semigroup on a uniform partition into
``n`` slices the marginal variation is ``c**n`` with ``c = |g_1|_1`` (the
variation is invariant under the self-similar rescaling ``t -> t/n``), so any
``c > 1`` rules the limit out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.signal import fftconvolve

from . import kernel as kmod
from .errors import GridMismatch, NegativeVariation, SpecMismatch, TimeTooSmall
from .kernel import EvolutionSpec, Grid1D, SampledKernel

GATE_MARGIN = 1e-4
# Mollified factors are truncated where their symbol drops below exp(-CONV_FLOOR).
CONV_FLOOR = 30.0


class Verdict(str, Enum):
    POSSIBLE = "ProjectiveLimitPossible"
    UNBOUNDED = "NoBoundedComplexMeasure"


@dataclass(frozen=True)
class ConvolutionSemigroupProbe:
    spec: EvolutionSpec
    grid: Grid1D
    times: tuple = ()

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        for t in times:
            if not t >= self.spec.t_eps:
                raise TimeTooSmall(f"probe time {t} is below t_eps={self.spec.t_eps}")
        object.__setattr__(self, "times", times)


@dataclass(frozen=True)
class VariationReport:
    n_slices: int
    per_slice_tv: float
    total: float
    verdict: Verdict

    def to_dict(self) -> dict:
        return {
            "n_slices": self.n_slices,
            "per_slice_tv": self.per_slice_tv,
            "total": self.total,
            "verdict": self.verdict.value,
        }


def _same_grid(a: Grid1D, b: Grid1D) -> bool:
    return a == b


def convolve_kernels(a: SampledKernel, b: SampledKernel) -> SampledKernel:
    """Linear convolution ``a * b`` on ``a.grid``, tagged with time ``a.t + b.t``.

    Damped kernels are convolved directly from their samples (zero padding to
    twice the length, so nothing wraps around); the grid must contain the
    origin as a node so that sums of grid points land on grid points.

    Oscillatory kernels are not integrable and a finite window of samples does
    not determine their convolution.  Each factor is regenerated with half the
    mollifier strength of every rung in the target ladder, over the full width
    where the mollified factor is non-negligible, and on a lattice fine enough
    for the product to be resolved.  Mollifiers compose exactly
    (``exp(-e k^m / 2)^2 = exp(-e k^m)``), so the extrapolated result is
    comparable rung-by-rung with a kernel computed directly at ``a.t + b.t``.
    """
    if not _same_grid(a.grid, b.grid):
        raise GridMismatch(f"grids differ: {a.grid} vs {b.grid}")
    if a.spec != b.spec:
        raise SpecMismatch(f"specs differ: {a.spec} vs {b.spec}")
    spec, grid = a.spec, a.grid
    t = a.t + b.t
    if spec.oscillatory:
        values = _convolve_oscillatory(spec, a.t, b.t, grid)
        tail = kmod.tail_bound(spec, t, grid, values)
        return SampledKernel(spec, t, grid, values, tail)

    origin = grid.origin_index()
    if origin is None:
        raise GridMismatch(
            f"grid [{grid.x_min}, {grid.x_max}) with {grid.n_points} points has no node at 0"
        )
    h = grid.spacing
    full = fftconvolve(a.values, b.values) * h
    values = full[origin:origin + grid.n_points]
    l1_a = h * np.abs(a.values).sum()
    l1_b = h * np.abs(b.values).sum()
    tail = (kmod.tail_bound(spec, t, grid, values)
            + a.tail_mass_bound * l1_b + b.tail_mass_bound * l1_a)
    return SampledKernel(spec, t, grid, values, float(tail))


def _convolve_oscillatory(spec, s, t, grid):
    h = grid.spacing
    ladder = kmod.mollifier_ladder(spec, s + t, grid)
    rungs = []
    for eps in ladder:
        half = eps / 2
        k_max = kmod.mollifier_cutoff(spec.p, half, CONV_FLOOR)
        # the integrand a(x - z) b(z) has bandwidth 2 k_max in z
        m = max(1, math.ceil(h * k_max / (0.9 * math.pi)))
        hi = h / m
        reach = spec.p * abs(spec.alpha) * k_max ** (spec.p - 1)
        Ma = math.ceil((reach * s + 10 * kmod.natural_scale(spec, s)) / hi)
        Mb = math.ceil((reach * t + 10 * kmod.natural_scale(spec, t)) / hi)
        n_fine = grid.n_points * m
        fa = kmod.fourier_samples(spec, s, grid.x_min - Ma * hi, hi, n_fine + 2 * Ma, half)
        fb = kmod.fourier_samples(spec, t, -Mb * hi, hi, 2 * Mb + 1, half)
        full = fftconvolve(fa, fb) * hi
        rungs.append(full[Ma + Mb:Ma + Mb + n_fine:m])
    return kmod._richardson(rungs)


def chapman_kolmogorov_residual(probe: ConvolutionSemigroupProbe, s: float, t: float) -> float:
    """``max |(g_s * g_t) - g_{s+t}|`` over the probe grid."""
    spec, grid = probe.spec, probe.grid
    a = kmod.compute_kernel(spec, s, grid)
    b = kmod.compute_kernel(spec, t, grid)
    direct = kmod.compute_kernel(spec, s + t, grid)
    conv = convolve_kernels(a, b)
    return float(np.abs(conv.values - direct.values).max())


def verdict_for(per_slice_tv: float, margin: float = GATE_MARGIN) -> Verdict:
    return Verdict.UNBOUNDED if per_slice_tv > 1.0 + margin else Verdict.POSSIBLE


def marginal_variation(spec: EvolutionSpec, t: float, n_slices: int, grid: Grid1D,
                       margin: float = GATE_MARGIN) -> VariationReport:
    """Total variation of the marginal on ``n_slices`` equal slices of ``[0, t]``.

    ``|g_{t/n}|_1`` equals ``|g_1|_1`` by self-similarity, so the single-slice
    variation is computed once at unit time on ``grid``.
    """
    if isinstance(n_slices, bool) or int(n_slices) != n_slices or n_slices < 1:
        raise ValueError(f"n_slices must be a positive integer, got {n_slices!r}")
    n_slices = int(n_slices)
    if t / n_slices < spec.t_eps:
        raise TimeTooSmall(f"slice length {t / n_slices} is below t_eps={spec.t_eps}")
    c = kmod.total_variation(kmod.compute_kernel(spec, 1.0, grid))
    return VariationReport(n_slices, c, c**n_slices, verdict_for(c, margin))


def partition_variation(spec: EvolutionSpec, increments: Sequence[float], grid: Grid1D) -> float:
    """Product of per-increment variations for a (possibly nonuniform) partition.

    The pinning measure has unit mass, so it contributes a factor 1.
    """
    c = kmod.total_variation(kmod.compute_kernel(spec, 1.0, grid))
    for tau in increments:
        if not tau >= spec.t_eps:
            raise TimeTooSmall(f"increment {tau} is below t_eps={spec.t_eps}")
    return c ** len(increments)


def product_variation_gate(tv_list: Sequence[float], log_threshold: float | None = None,
                           margin: float = GATE_MARGIN) -> Verdict:
    """Finite-horizon surrogate for convergence of ``prod |mu_n|``.

    Passes when ``sum log|mu_n| <= log_threshold``, which defaults to
    ``len(tv_list) * log(1 + margin)`` so that exact probability factors
    never trip the gate.
    """
    tvs = np.asarray(list(tv_list), dtype=float)
    if tvs.size == 0:
        return Verdict.POSSIBLE
    if np.any(~np.isfinite(tvs)):
        raise NegativeVariation("variations must be finite")
    if np.any(tvs < 0):
        raise NegativeVariation(f"negative variation in {tvs[tvs < 0].tolist()}")
    if log_threshold is None:
        log_threshold = tvs.size * math.log1p(margin)
    with np.errstate(divide="ignore"):
        total = float(np.sum(np.log(tvs)))
    return Verdict.POSSIBLE if total <= log_threshold else Verdict.UNBOUNDED
