"""Fundamental solutions of ``du/dt = (-i)^p alpha d^p u / dx^p`` sampled on a grid.

The kernel ``g_t`` is the inverse Fourier transform of the symbol
``exp(alpha t k^p)``.  Decaying symbols (``Re alpha < 0``) are integrated by a
truncated trapezoid rule in ``k``; purely oscillatory symbols are damped by a
mollifier ``exp(-eps k^m)`` on a halving ladder of ``eps`` and
Richardson-extrapolated to ``eps -> 0``.  The mollifier power ``m`` is the
largest even integer below ``p`` for odd ``p`` (2 for the Airy case) and ``p``
itself for even ``p``, which keeps the damped kernel's spatial extent linear
in the region of interest for every order.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import IO, Union

import numpy as np
from scipy import fft as sfft
from scipy.integrate import simpson
from scipy.special import ndtr

from .errors import (
    GridTooNarrow,
    InadmissibleSpec,
    NotIntegrable,
    TimeTooSmall,
)

# |symbol| <= exp(-SYMBOL_FLOOR) at the truncation frequency.
SYMBOL_FLOOR = 36.0
DECAYING_TOL = 1e-8
OSCILLATORY_TOL = 1e-6
TAIL_THRESHOLD = 1e-6
# mollifier exponent eps * k_loc^m at the outermost grid point, first ladder rung
MOLLIFIER_DELTA = 0.8
MOLLIFIER_LEVELS = 6
_MAX_MODES = 1 << 25


def fft_workers() -> int | None:
    """Thread cap for FFTs, read from ``PSEUDOPATH_THREADS``."""
    raw = os.environ.get("PSEUDOPATH_THREADS")
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        return None
    return max(n, 1)


@dataclass(frozen=True)
class EvolutionSpec:
    """Order ``p`` and coefficient ``alpha`` of the evolution equation.

    Admissibility is ``|exp(alpha t k^p)| <= 1`` for all real ``k`` and
    ``t >= 0``: ``Re alpha <= 0`` for even ``p`` and ``Re alpha == 0`` for odd
    ``p``.
    """

    p: int
    alpha: complex
    t_eps: float = 1e-3

    def __post_init__(self):
        p = self.p
        if isinstance(p, bool) or not float(p).is_integer() or p < 2:
            raise InadmissibleSpec(f"p must be an integer >= 2, got {p!r}")
        p = int(p)
        alpha = complex(self.alpha)
        if not (math.isfinite(alpha.real) and math.isfinite(alpha.imag)):
            raise InadmissibleSpec("alpha must be finite")
        if alpha == 0:
            raise InadmissibleSpec("alpha must be nonzero")
        re_tol = 1e-14 * abs(alpha)
        if p % 2 == 0 and alpha.real > re_tol:
            raise InadmissibleSpec(f"even p requires Re(alpha) <= 0, got alpha={alpha}")
        if p % 2 == 1 and abs(alpha.real) > re_tol:
            raise InadmissibleSpec(f"odd p requires Re(alpha) == 0, got alpha={alpha}")
        if abs(alpha.real) <= re_tol:
            alpha = complex(0.0, alpha.imag)
        if not (self.t_eps > 0 and math.isfinite(self.t_eps)):
            raise InadmissibleSpec(f"t_eps must be positive, got {self.t_eps!r}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "t_eps", float(self.t_eps))

    @property
    def oscillatory(self) -> bool:
        """True when the symbol has unit modulus (no decay in ``k``)."""
        return self.alpha.real == 0.0

    def symbol(self, k, t: float):
        k = np.asarray(k, dtype=float)
        return np.exp(self.alpha * t * k**self.p)

    def exponent(self, k, t: float):
        k = np.asarray(k, dtype=float)
        return self.alpha * t * k**self.p


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on ``[x_min, x_max)``, right endpoint excluded."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise ValueError("grid endpoints must be finite")
        if not self.x_min < self.x_max:
            raise ValueError(f"need x_min < x_max, got [{self.x_min}, {self.x_max})")
        if isinstance(self.n_points, bool) or int(self.n_points) != self.n_points or self.n_points < 2:
            raise ValueError(f"n_points must be an integer >= 2, got {self.n_points!r}")
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "x_max", float(self.x_max))
        object.__setattr__(self, "n_points", int(self.n_points))

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / self.n_points

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def points(self) -> np.ndarray:
        return self.x_min + self.spacing * np.arange(self.n_points)

    def origin_index(self) -> int | None:
        """Index of the node at ``x = 0``, or None if the grid has no such node."""
        r = -self.x_min / self.spacing
        i = round(r)
        if abs(r - i) > 1e-9 * max(1.0, abs(r)) or not 0 <= i < self.n_points:
            return None
        return int(i)

    def scaled(self, s: float) -> "Grid1D":
        return Grid1D(self.x_min * s, self.x_max * s, self.n_points)

    def refined(self, factor: int = 2) -> "Grid1D":
        return Grid1D(self.x_min, self.x_max, self.n_points * factor)


@dataclass(frozen=True, eq=False)
class SampledKernel:
    spec: EvolutionSpec
    t: float
    grid: Grid1D
    values: np.ndarray
    tail_mass_bound: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.grid.n_points,):
            raise ValueError(
                f"values has shape {values.shape}, grid has {self.grid.n_points} points"
            )
        if self.t < self.spec.t_eps:
            raise TimeTooSmall(f"t={self.t} is below t_eps={self.spec.t_eps}")
        if not self.tail_mass_bound >= 0:
            raise ValueError("tail_mass_bound must be nonnegative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def x(self) -> np.ndarray:
        return self.grid.points

    @property
    def tolerance(self) -> float:
        return OSCILLATORY_TOL if self.spec.oscillatory else DECAYING_TOL


# --------------------------------------------------------------------------
# Fourier quadrature


def _check_time(spec: EvolutionSpec, t) -> float:
    t = float(t)
    if not math.isfinite(t):
        raise TimeTooSmall(f"t must be finite, got {t}")
    if t < spec.t_eps:
        raise TimeTooSmall(
            f"t={t} < t_eps={spec.t_eps}; at t=0 the kernel is a Dirac mass "
            "with no sampled representation"
        )
    return t


def natural_scale(spec: EvolutionSpec, t: float) -> float:
    """Length scale ``(|alpha| t)^(1/p)`` of ``g_t``."""
    return (abs(spec.alpha) * t) ** (1.0 / spec.p)


def stationary_wavenumber(spec: EvolutionSpec, t: float, x) -> np.ndarray:
    """Stationary-phase frequency of ``exp(ikx + alpha t k^p)`` at position ``x``."""
    return (np.abs(x) / (spec.p * abs(spec.alpha) * t)) ** (1.0 / (spec.p - 1))


def mollifier_power(p: int) -> int:
    return p - 1 if p % 2 else p


def mollifier_cutoff(p: int, eps: float, floor: float = SYMBOL_FLOOR) -> float:
    """Frequency where the mollifier ``exp(-eps k^m)`` falls to ``exp(-floor)``."""
    return (floor / eps) ** (1.0 / mollifier_power(p))


def _cutoff(spec: EvolutionSpec, t: float, eps: float) -> float:
    damping = -spec.alpha.real * t
    cands = []
    if damping > 0:
        cands.append((SYMBOL_FLOOR / damping) ** (1.0 / spec.p))
    if eps > 0:
        cands.append(mollifier_cutoff(spec.p, eps))
    if not cands:
        raise NotIntegrable("oscillatory symbol needs a mollifier")
    return min(cands)


def _decay_width(spec: EvolutionSpec, t: float, eps: float) -> float:
    """Distance past which the (mollified) kernel is negligible."""
    xs = natural_scale(spec, t)
    if eps > 0:
        k = mollifier_cutoff(spec.p, eps)
        return spec.p * abs(spec.alpha) * t * k ** (spec.p - 1) + 10 * xs
    cos_theta = -spec.alpha.real / abs(spec.alpha)
    q = spec.p / (spec.p - 1)
    return xs * (SYMBOL_FLOOR / (0.2 * cos_theta)) ** (1.0 / q)


def _chirp(m, period: int) -> np.ndarray:
    # exp(i pi m^2 / period) with the argument reduced exactly in integers
    m = np.asarray(m, dtype=np.int64)
    return np.exp(1j * np.pi * ((m * m) % (2 * period)) / period)


def _uniform_dft(c: np.ndarray, n: int, period: int) -> np.ndarray:
    """``X_j = sum_l c_l exp(2 pi i l j / period)`` for ``j < n``."""
    N = len(c)
    workers = fft_workers()
    if N + n > period // 2:
        folded = np.zeros(period, dtype=complex)
        np.add.at(folded, np.arange(N) % period, c)
        return period * sfft.ifft(folded, workers=workers)[:n]
    size = sfft.next_fast_len(N + n - 1)
    a = np.zeros(size, dtype=complex)
    a[:N] = c * _chirp(np.arange(N), period)
    b = np.zeros(size, dtype=complex)
    b[:n] = np.conj(_chirp(np.arange(n), period))
    if N > 1:
        b[size - N + 1:] = np.conj(_chirp(np.arange(N - 1, 0, -1), period))
    conv = sfft.ifft(sfft.fft(a, workers=workers) * sfft.fft(b, workers=workers), workers=workers)
    return _chirp(np.arange(n), period) * conv[:n]


def _k_grid(spec, t, eps, h, span):
    K = _cutoff(spec, t, eps)
    W = _decay_width(spec, t, eps)
    period = int(math.ceil((span + 2 * W) / h))
    dk = 2 * math.pi / (period * h)
    N = int(math.ceil(2 * K / dk)) + 1
    if N > _MAX_MODES:
        raise GridTooNarrow(
            f"kernel needs {N} Fourier modes (budget {_MAX_MODES}); "
            "shrink the grid extent or increase t"
        )
    return -K + dk * np.arange(N), dk, period


def fourier_samples(spec: EvolutionSpec, t: float, x0: float, h: float, n: int,
                    eps: float = 0.0) -> np.ndarray:
    """Samples of ``(1/2pi) int exp(ikx + alpha t k^p - eps k^m) dk`` at ``x0 + j h``.

    Trapezoid rule on a symmetric ``k`` grid whose spacing makes the aliasing
    period exceed the grid span plus the kernel decay width.
    """
    if eps == 0 and spec.oscillatory:
        raise NotIntegrable("oscillatory symbols must be sampled through the mollifier ladder")
    k, dk, period = _k_grid(spec, t, eps, h, n * h)
    c = np.exp(spec.exponent(k, t) - eps * k ** mollifier_power(spec.p) + 1j * k * x0)
    phase = np.exp(1j * k[0] * h * np.arange(n))
    return _uniform_dft(c, n, period) * phase * (dk / (2 * math.pi))


def _cumulative(spec: EvolutionSpec, t: float, a: float, eps: float) -> complex:
    """``int_{-inf}^{a} g_eps(x) dx`` via a Gaussian-CDF subtraction in ``k``."""
    sigma = natural_scale(spec, t)
    # the Gaussian reference must be resolved as well as the kernel symbol
    K = max(_cutoff(spec, t, eps), math.sqrt(2 * SYMBOL_FLOOR) / sigma)
    W = _decay_width(spec, t, eps)
    dk = 2 * math.pi / (2 * abs(a) + 2 * W)
    N = int(math.ceil(2 * K / dk)) + 1
    if N > _MAX_MODES:
        raise GridTooNarrow(f"tail integral needs {N} Fourier modes")
    k = -K + dk * np.arange(N)
    diff = np.expm1(spec.exponent(k, t) - eps * k ** mollifier_power(spec.p)) - np.expm1(-0.5 * (sigma * k) ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(k == 0, 0.0, diff / (1j * k)) * np.exp(1j * k * a)
    return complex(ndtr(a / sigma) + integrand.sum() * dk / (2 * math.pi))


def _richardson(levels):
    # ladder eps, eps/2, eps/4, ...:: eliminate eps^1 .. eps^(m-1)
    vals = [np.asarray(v) for v in levels]
    order = 1
    while len(vals) > 1:
        f = 2.0**order
        vals = [(f * vals[i + 1] - vals[i]) / (f - 1) for i in range(len(vals) - 1)]
        order += 1
    return vals[0]


def mollifier_ladder(spec: EvolutionSpec, t: float, grid: Grid1D) -> list[float]:
    """Mollifier strengths used for an oscillatory kernel on ``grid``."""
    xs = natural_scale(spec, t)
    X = max(abs(grid.x_min), abs(grid.x_max), xs)
    k_ref = max(float(stationary_wavenumber(spec, t, X)), 1.0 / xs)
    eps0 = MOLLIFIER_DELTA / k_ref ** mollifier_power(spec.p)
    return [eps0 / 2**j for j in range(MOLLIFIER_LEVELS)]


def sample_values(spec: EvolutionSpec, t: float, grid: Grid1D) -> np.ndarray:
    """Kernel values on ``grid`` with no tail gate (internal building block)."""
    t = _check_time(spec, t)
    h, n = grid.spacing, grid.n_points
    if not spec.oscillatory:
        return fourier_samples(spec, t, grid.x_min, h, n)
    ladder = mollifier_ladder(spec, t, grid)
    return _richardson([fourier_samples(spec, t, grid.x_min, h, n, eps) for eps in ladder])


def tail_bound(spec: EvolutionSpec, t: float, grid: Grid1D, values: np.ndarray) -> float:
    """Upper estimate of the kernel mass lying outside ``grid``.

    Each side looks at the outermost octile of the grid and the octile next to
    it.  If the envelope ratio between them is below 1/2 the tail is bounded by
    the geometric continuation of that ratio, which dominates the
    faster-than-exponential decay of damped kernels.  On a side where an
    oscillatory kernel does not decay, the modulus envelope
    ``|x|^(-(p-2)/(2(p-1)))`` is not integrable and the returned value bounds
    the conditionally convergent tail integral instead (amplitude over local
    wavenumber, by integration by parts).  Otherwise the bound is infinite.
    """
    mod = np.abs(values)
    n = len(mod)
    w = max(n // 8, 1)
    if 2 * w > n:
        return math.inf
    floor = 1e-13 * max(mod.max(), 1e-300)
    width = w * grid.spacing
    total = 0.0
    for outer, inner, edge in (
        (mod[:w], mod[w:2 * w], grid.x_min),
        (mod[-w:], mod[-2 * w:-w], grid.x_max),
    ):
        A, B = outer.max(), inner.max()
        if A <= floor:
            total += floor * width
        elif B > 0 and A / B < 0.5:
            r = A / B
            total += A * width * r / (1 - r)
        elif spec.oscillatory and edge != 0:
            total += 2 * A / float(stationary_wavenumber(spec, t, edge))
        else:
            return math.inf
    return float(total)


def suggest_grid(spec: EvolutionSpec, t: float) -> Grid1D:
    """Symmetric power-of-two grid, with a node at 0, that resolves ``g_t``.

    Damped kernels get the full decay width; oscillatory ones a window of
    twelve natural length scales (their tails never fit on a grid).
    """
    t = _check_time(spec, t)
    xs = natural_scale(spec, t)
    if spec.oscillatory:
        half = 12 * xs
        k_band = float(stationary_wavenumber(spec, t, half))
    else:
        half = _decay_width(spec, t, 0.0)
        k_band = _cutoff(spec, t, 0.0)
    h = min(math.pi / (4 * k_band), xs / 32)
    n = 1 << max(5, math.ceil(math.log2(2 * half / h)))
    h = 2 * half / n
    # shift by a whole number of steps so that 0 is a node
    return Grid1D(-n // 2 * h, n // 2 * h, n)


def compute_kernel(spec: EvolutionSpec, t: float, grid: Grid1D) -> SampledKernel:
    """Sample ``g_t`` on ``grid``.

    Raises :class:`TimeTooSmall` below ``spec.t_eps`` and
    :class:`GridTooNarrow` when a damped kernel carries more than
    ``TAIL_THRESHOLD`` of mass outside the grid.  Oscillatory kernels are not
    gated: their values do not depend on the grid extent and their tails are
    handled explicitly by :func:`kernel_mass`.
    """
    t = _check_time(spec, t)
    values = sample_values(spec, t, grid)
    tail = tail_bound(spec, t, grid, values)
    if not spec.oscillatory and tail >= TAIL_THRESHOLD:
        raise GridTooNarrow(
            f"estimated tail mass {tail:.3g} outside [{grid.x_min}, {grid.x_max}) "
            f"exceeds {TAIL_THRESHOLD:g}"
        )
    return SampledKernel(spec, t, grid, values, tail)


def kernel_mass(k: SampledKernel) -> complex:
    """Approximate ``int g_t(x) dx`` (exactly 1 in theory).

    Damped kernels: trapezoid sum over the grid.  Oscillatory kernels are not
    absolutely integrable, so the grid part is integrated by Simpson's rule on
    the samples and the two improper tails are evaluated in Fourier space on
    the same mollifier ladder.
    """
    h = k.grid.spacing
    if not k.spec.oscillatory:
        return complex(h * np.sum(k.values))
    inside = complex(simpson(k.values, dx=h))
    a, b = float(k.x[0]), float(k.x[-1])
    ladder = mollifier_ladder(k.spec, k.t, k.grid)
    left = _richardson([_cumulative(k.spec, k.t, a, e) for e in ladder])
    right = 1.0 - _richardson([_cumulative(k.spec, k.t, b, e) for e in ladder])
    return complex(inside + left + right)


def _is_real(values: np.ndarray) -> bool:
    scale = np.abs(values).max()
    return scale == 0 or np.abs(values.imag).max() <= 1e-10 * scale


def total_variation(k: SampledKernel) -> float:
    """Approximate ``int |g_t(x)| dx``.

    Real kernels change sign; across each sign change the trapezoid panel is
    replaced by the exact integral of ``|linear interpolant|`` and the
    ``h^2`` Euler-Maclaurin kink term ``(h^2/6) |g'(z)|`` is added back.
    """
    if k.spec.oscillatory:
        raise NotIntegrable(
            f"kernel for p={k.spec.p}, alpha={k.spec.alpha} has a non-integrable "
            "oscillatory tail; its total variation is infinite"
        )
    h = k.grid.spacing
    v = k.values
    if not _is_real(v):
        return float(h * np.abs(v).sum())
    v = v.real
    tv = h * np.abs(v).sum()
    a, b = v[:-1], v[1:]
    idx = np.nonzero(a * b < 0)[0]
    if idx.size:
        a, b = np.abs(a[idx]), np.abs(b[idx])
        trap = 0.5 * h * (a + b)
        exact_linear = 0.5 * h * (a * a + b * b) / (a + b)
        slope = (a + b) / h
        tv += np.sum(exact_linear - trap) + np.sum(h * h / 6.0 * slope)
    return float(tv)


def scaling_check(spec: EvolutionSpec, t: float, grid: Grid1D) -> float:
    """``max |g_t(x) - s g_1(s x)|`` over the grid with ``s = t^(-1/p)``."""
    t = _check_time(spec, t)
    _check_time(spec, 1.0)
    s = t ** (-1.0 / spec.p)
    direct = sample_values(spec, t, grid)
    rescaled = s * sample_values(spec, 1.0, grid.scaled(s))
    return float(np.abs(direct - rescaled).max())


# --------------------------------------------------------------------------
# CSV export

PathOrFile = Union[str, os.PathLike, IO[str]]


def write_kernel_csv(k: SampledKernel, dest: PathOrFile) -> None:
    """Write ``x,re,im`` rows with 17 significant digits."""
    rows = zip(k.x, k.values.real, k.values.imag)
    if hasattr(dest, "write"):
        write_csv_rows(dest, rows)
    else:
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            write_csv_rows(fh, rows)


def write_csv_rows(fh, rows):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["x", "re", "im"])
    for x, re, im in rows:
        writer.writerow([f"{x:.17g}", f"{re:.17g}", f"{im:.17g}"])


def read_kernel_csv(src: PathOrFile) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`write_kernel_csv`: returns ``(x, values)``."""
    if hasattr(src, "read"):
        rows = list(csv.reader(src))
    else:
        with open(src, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    if not rows or rows[0] != ["x", "re", "im"]:
        raise ValueError("expected header x,re,im")
    data = np.array([[float(c) for c in r] for r in rows[1:]], dtype=float).reshape(-1, 3)
    return data[:, 0], data[:, 1] + 1j * data[:, 2]
