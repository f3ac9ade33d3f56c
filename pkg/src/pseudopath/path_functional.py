"""Path functional on trigonometric cylinder functions and the time-sliced solver.

For ``u_t = (-i)^p alpha u^{(p)} + V u`` with ``u_0`` and ``V`` finite
trigonometric sums, the solution at ``(t, x)`` is the path functional of
``u_0(x + eta(0)) exp(int_0^t V(x + eta(s)) ds)`` over paths pinned at
``eta(t) = 0``.  Replacing the time integral by a left-endpoint Riemann sum on
``n`` equal slices gives a cylinder function on ``{0, dt, ..., (n-1) dt}``;
its value is exactly the Lie-split propagation ``u <- P_dt(exp(dt V) u)``
applied ``n`` times, which is what :func:`fk_time_sliced` computes on a
periodic grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import fft as sfft

from .errors import DimensionMismatch, GridTooNarrow, NoConvergence, SliceTooSmall, TimeTooSmall
from .kernel import EvolutionSpec, Grid1D, fft_workers
from .projective import (
    AtomicComplexMeasure,
    CylinderFunction,
    CylinderMarginal,
    TimeGrid,
    eval_LJ,
)

REFERENCE_TOL = 1e-9
MAX_HALVINGS = 20
LATTICE_TOL = 1e-9


@dataclass(frozen=True)
class PathFunctionalSpec:
    spec: EvolutionSpec
    t: float

    def __post_init__(self):
        t = float(self.t)
        if not (math.isfinite(t) and t >= self.spec.t_eps):
            raise TimeTooSmall(f"horizon {self.t} is below t_eps={self.spec.t_eps}")
        object.__setattr__(self, "t", t)


def _check_1d(m: AtomicComplexMeasure, what: str) -> None:
    if m.dimension != 1:
        raise DimensionMismatch(f"{what} must be a one-dimensional measure, got {m.dimension}")


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """``V(x) = sum_j w_j exp(i y_j x)``."""

    fourier: AtomicComplexMeasure

    def __post_init__(self):
        _check_1d(self.fourier, "potential")

    def __call__(self, x) -> np.ndarray:
        if len(self.fourier) == 0:
            return np.zeros(np.shape(x), dtype=complex)
        return self.fourier.evaluate(x)

    @classmethod
    def cosine(cls, amplitude: float = 1.0, frequency: float = 1.0) -> "PotentialSpec":
        """``amplitude * cos(frequency x)`` as a conjugate-symmetric atom pair."""
        return cls(AtomicComplexMeasure.from_atoms(
            [(frequency, amplitude / 2), (-frequency, amplitude / 2)]))

    @classmethod
    def constant(cls, c: complex) -> "PotentialSpec":
        return cls(AtomicComplexMeasure.unit(1).scaled(c))

    @classmethod
    def zero(cls) -> "PotentialSpec":
        return cls(AtomicComplexMeasure.zero(1))


@dataclass(frozen=True, eq=False)
class InitialDatum:
    """``u_0(x) = sum_j w_j exp(i y_j x)``, optionally with cached grid samples."""

    fourier: AtomicComplexMeasure
    grid_samples: np.ndarray | None = None
    grid: Grid1D | None = None

    def __post_init__(self):
        _check_1d(self.fourier, "initial datum")
        if self.grid_samples is None:
            return
        if self.grid is None:
            raise ValueError("grid_samples need the grid they were taken on")
        samples = np.asarray(self.grid_samples, dtype=complex)
        exact = self.fourier.evaluate(self.grid.points)
        if samples.shape != exact.shape:
            raise ValueError(f"grid_samples has shape {samples.shape}, grid has {exact.shape}")
        if np.abs(samples - exact).max(initial=0.0) > 1e-12 * max(1.0, np.abs(exact).max(initial=0.0)):
            raise ValueError("grid_samples disagree with the atomic representation")
        samples.setflags(write=False)
        object.__setattr__(self, "grid_samples", samples)

    def samples(self, grid: Grid1D) -> np.ndarray:
        if self.grid_samples is not None and self.grid == grid:
            return np.array(self.grid_samples)
        return self.fourier.evaluate(grid.points)

    @classmethod
    def gaussian_like(cls, width: float = 1.0, n_modes: int = 8, period: float = 8 * math.pi):
        """Truncated Fourier series of ``exp(-x^2 / (2 width^2))`` on a period.

        Frequencies sit on the lattice ``2 pi m / period`` so that a grid of
        that length represents the datum exactly.
        """
        dk = 2 * math.pi / period
        m = np.arange(-n_modes, n_modes + 1)
        y = m * dk
        # Fourier coefficients of the periodised Gaussian
        w = width * math.sqrt(2 * math.pi) / period * np.exp(-0.5 * (width * y) ** 2)
        return cls(AtomicComplexMeasure(y[:, None], w.astype(complex), 1))


# --------------------------------------------------------------------------
# functional on cylinder functions


def eval_path_functional(pf: PathFunctionalSpec, f: CylinderFunction) -> complex:
    """Value of the path functional on a cylinder function (its marginal integral)."""
    if abs(f.grid.horizon - pf.t) > 1e-12 * max(1.0, pf.t):
        raise ValueError(f"cylinder horizon {f.grid.horizon} differs from functional horizon {pf.t}")
    return eval_LJ(f, CylinderMarginal(pf.spec, f.grid))


def continuity_bound_check(pf: PathFunctionalSpec, f: CylinderFunction, tol: float = 1e-12) -> bool:
    """``|L(f)| <= sum |w_j|`` (up to rounding ``tol``)."""
    value = eval_path_functional(pf, f)
    return bool(abs(value) <= f.norm + tol * max(1.0, f.norm))


def exp_measure(m: AtomicComplexMeasure, tol: float = 1e-16, max_terms: int = 200) -> AtomicComplexMeasure:
    """Atomic measure of ``exp(F)`` where ``m`` represents ``F``.

    Sums ``m^{*k} / k!`` until the norm bound ``|m|^k / k!`` falls below ``tol``.
    """
    total = AtomicComplexMeasure.unit(m.dimension)
    term = total
    norm = m.total_variation()
    bound = 1.0
    for k in range(1, max_terms + 1):
        term = term.convolve(m).canonical().scaled(1.0 / k)
        total = (total + term).canonical()
        bound *= norm / k
        if bound < tol:
            return total
    raise NoConvergence(f"exponential series did not reach {tol} in {max_terms} terms")


def fk_cylinder_function(u0: InitialDatum, V: PotentialSpec, t: float, x: float,
                         n_slices: int) -> CylinderFunction:
    """Time-sliced integrand ``u_0(x + x_0) prod_j exp(dt V(x + x_j))``.

    Lives on the grid ``{0, dt, ..., (n-1) dt}`` with horizon ``t``.  Its
    path-functional value equals ``fk_time_sliced`` at ``x`` up to the
    truncation of the exponential series.
    """
    dt = t / n_slices
    grid = TimeGrid(t, tuple(j * dt for j in range(n_slices)))

    def shifted(m: AtomicComplexMeasure, scale: complex) -> AtomicComplexMeasure:
        y = m.locations[:, 0]
        return AtomicComplexMeasure(m.locations, m.weights * np.exp(1j * y * x) * scale, 1)

    step = exp_measure(shifted(V.fourier, dt))
    first = shifted(u0.fourier, 1.0).convolve(step).canonical()
    factors = [first] + [step] * (n_slices - 1)
    locs = np.zeros((1, 0))
    weights = np.ones(1, dtype=complex)
    for fac in factors:
        locs = np.hstack([
            np.repeat(locs, len(fac), axis=0),
            np.tile(fac.locations, (len(weights), 1)),
        ])
        weights = np.outer(weights, fac.weights).reshape(-1)
    return CylinderFunction(grid, AtomicComplexMeasure(locs, weights, n_slices))


# --------------------------------------------------------------------------
# splitting solvers on a periodic grid


def _wavenumbers(grid: Grid1D) -> np.ndarray:
    return 2 * math.pi * sfft.fftfreq(grid.n_points, d=grid.spacing)


def _check_lattice(m: AtomicComplexMeasure, grid: Grid1D, what: str) -> None:
    if len(m) == 0:
        return
    y = m.locations[:, 0]
    dk = 2 * math.pi / grid.length
    ratio = y / dk
    if np.any(np.abs(ratio - np.round(ratio)) > LATTICE_TOL * np.maximum(1.0, np.abs(ratio))):
        raise GridTooNarrow(
            f"{what} frequencies {y.tolist()} are not multiples of 2*pi/L = {dk:.6g}; "
            "choose a grid whose length is a common period"
        )
    nyquist = math.pi / grid.spacing
    if np.abs(y).max() > 0.5 * nyquist:
        raise GridTooNarrow(
            f"{what} frequency {np.abs(y).max():.6g} exceeds half the grid Nyquist limit {0.5 * nyquist:.6g}"
        )


class _Stepper:
    """Fourier-space free propagator and pointwise potential factor on one grid."""

    def __init__(self, spec: EvolutionSpec, grid: Grid1D, V: PotentialSpec):
        self.spec = spec
        self.k = _wavenumbers(grid)
        self.v = V(grid.points)
        self.workers = fft_workers()

    def free(self, u_hat: np.ndarray, dt: float) -> np.ndarray:
        return u_hat * np.exp(self.spec.alpha * dt * self.k**self.spec.p)

    def fft(self, u):
        return sfft.fft(u, workers=self.workers)

    def ifft(self, u):
        return sfft.ifft(u, workers=self.workers)


def validate_inputs(u0: InitialDatum, V: PotentialSpec, grid: Grid1D) -> None:
    """Raise GridTooNarrow unless both atom lists fit the grid's Fourier lattice."""
    _check_lattice(u0.fourier, grid, "initial datum")
    _check_lattice(V.fourier, grid, "potential")


def fk_time_sliced(pf: PathFunctionalSpec, u0: InitialDatum, V: PotentialSpec,
                   n_slices: int, grid: Grid1D) -> np.ndarray:
    """Lie splitting ``u <- P_dt(exp(dt V) u)``, ``n_slices`` times, on ``grid``.

    The grid is treated as one period; atom frequencies must lie on its
    Fourier lattice and well inside the Nyquist band.
    """
    if isinstance(n_slices, bool) or int(n_slices) != n_slices or n_slices < 1:
        raise ValueError(f"n_slices must be a positive integer, got {n_slices!r}")
    n_slices = int(n_slices)
    dt = pf.t / n_slices
    if dt < pf.spec.t_eps:
        raise SliceTooSmall(f"slice length {dt} is below t_eps={pf.spec.t_eps}")
    validate_inputs(u0, V, grid)
    st = _Stepper(pf.spec, grid, V)
    mult = np.exp(dt * st.v)
    u = u0.samples(grid)
    for _ in range(n_slices):
        u = st.ifft(st.free(st.fft(mult * u), dt))
    return u


def _strang(st: _Stepper, u0: np.ndarray, t: float, n: int) -> np.ndarray:
    dt = t / n
    mult = np.exp(dt * st.v)
    half = np.exp(st.spec.alpha * (dt / 2) * st.k**st.spec.p)
    full = half * half
    u_hat = st.fft(u0) * half
    for i in range(n):
        u_hat = st.fft(mult * st.ifft(u_hat))
        u_hat = u_hat * (full if i < n - 1 else half)
    return st.ifft(u_hat)


def discrete_l2(u: np.ndarray, grid: Grid1D) -> float:
    return float(math.sqrt(grid.spacing) * np.linalg.norm(u))


@dataclass
class ReferenceSolution:
    values: np.ndarray
    steps: int
    last_change: float


def spectral_reference(pf: PathFunctionalSpec, u0: InitialDatum, V: PotentialSpec,
                       grid: Grid1D, tol: float = REFERENCE_TOL, start_steps: int = 8,
                       max_halvings: int = MAX_HALVINGS) -> ReferenceSolution:
    """Strang-split solution, halving the step until successive answers differ by < ``tol``."""
    validate_inputs(u0, V, grid)
    st = _Stepper(pf.spec, grid, V)
    u_init = u0.samples(grid)
    n = start_steps
    prev = _strang(st, u_init, pf.t, n)
    for _ in range(max_halvings):
        n *= 2
        cur = _strang(st, u_init, pf.t, n)
        change = discrete_l2(cur - prev, grid)
        if change < tol:
            return ReferenceSolution(cur, n, change)
        prev = cur
    raise NoConvergence(f"Strang splitting still changes by {change:.3g} after {n} steps")


@dataclass
class FKConvergenceReport:
    slices: list
    errors: list
    reference_steps: int
    reference_change: float
    solutions: dict = field(default_factory=dict, repr=False)

    @property
    def order(self) -> float:
        """Least-squares slope of ``-log(error)`` against ``log(n)``."""
        n = np.asarray(self.slices, dtype=float)
        e = np.asarray(self.errors, dtype=float)
        if len(n) < 2 or np.any(e <= 0):
            return float("nan")
        slope = np.polyfit(np.log(n), np.log(e), 1)[0]
        return float(-slope)

    def monotone(self, floor: float = 0.0) -> bool:
        """Errors strictly decrease, except pairs already within 5% of ``floor``."""
        for a, b in zip(self.errors, self.errors[1:]):
            if b < a:
                continue
            if max(a, b) <= 1.05 * floor:
                continue
            return False
        return True

    def to_dict(self) -> dict:
        return {
            "slices": list(self.slices),
            "errors": list(self.errors),
            "order": self.order,
            "reference_steps": self.reference_steps,
            "reference_change": self.reference_change,
        }


def fk_convergence_report(pf: PathFunctionalSpec, u0: InitialDatum, V: PotentialSpec,
                          grid: Grid1D, slice_ladder: Sequence[int],
                          keep_solutions: bool = False) -> FKConvergenceReport:
    """Relative discrete-L2 error of :func:`fk_time_sliced` along ``slice_ladder``."""
    ladder = [int(n) for n in slice_ladder]
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError(f"slice ladder must be increasing, got {ladder}")
    ref = spectral_reference(pf, u0, V, grid)
    scale = discrete_l2(ref.values, grid)
    if scale == 0:
        scale = 1.0
    errors, sols = [], {}
    for n in ladder:
        u = fk_time_sliced(pf, u0, V, n, grid)
        errors.append(discrete_l2(u - ref.values, grid) / scale)
        if keep_solutions:
            sols[n] = u
    return FKConvergenceReport(ladder, errors, ref.steps, ref.last_change, sols)
