"""Time grids, cylinder functions and the marginal functionals ``L_J``.

Finite time sets ordered by inclusion form the directed index set.  A cylinder
function on a grid ``J = {t_1 < ... < t_n}`` is a finite trigonometric sum
``F(x) = sum_j w_j exp(i <y_j, x>)`` and is stored as an atomic complex
measure in ``y``.  Paths are pinned at the horizon (``x_{n+1} = 0``) and the
marginal on ``J`` is

    mu_J(dx) = prod_j g_{t_{j+1} - t_j}(x_{j+1} - x_j) dx_j,

whose Fourier transform is ``prod_j exp(alpha tau_j Y_j^p)`` with partial sums
``Y_j = y_1 + ... + y_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
from scipy.signal import fftconvolve

from . import kernel as kmod
from .errors import (
    DimensionMismatch,
    DimensionTooLarge,
    GridMismatch,
    InconsistentRepresentations,
    NotARefinement,
    NotIntegrable,
    SpecMismatch,
    TimeTooSmall,
)
from .kernel import EvolutionSpec

CANONICAL_DECIMALS = 12
ZERO_WEIGHT = 1e-14
TIME_MATCH = 1e-12
QUADRATURE_MAX_TIMES = 3


# --------------------------------------------------------------------------
# time grids


@dataclass(frozen=True)
class TimeGrid:
    """Ordered times ``0 <= t_1 < ... < t_n < horizon``.

    ``t_1 = 0`` is allowed: it is the free starting point of a path pinned at
    the horizon, and the time-sliced solver needs it.
    """

    horizon: float
    times: tuple

    def __post_init__(self):
        horizon = float(self.horizon)
        times = tuple(float(t) for t in self.times)
        if not (math.isfinite(horizon) and horizon > 0):
            raise ValueError(f"horizon must be positive, got {self.horizon!r}")
        if not times:
            raise ValueError("a time grid needs at least one time")
        if any(not math.isfinite(t) for t in times):
            raise ValueError("times must be finite")
        if times[0] < 0 or times[-1] >= horizon:
            raise ValueError(f"times must lie in [0, {horizon}), got {times}")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"times must be strictly increasing, got {times}")
        object.__setattr__(self, "horizon", horizon)
        object.__setattr__(self, "times", times)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def increments(self) -> np.ndarray:
        """``t_{j+1} - t_j`` for ``j = 1..n`` with ``t_{n+1}`` the horizon."""
        return np.diff(np.append(self.times, self.horizon))

    def positions_in(self, other: "TimeGrid") -> np.ndarray:
        """Indices of ``self.times`` inside ``other.times``; NotARefinement if absent."""
        if abs(self.horizon - other.horizon) > TIME_MATCH * max(1.0, self.horizon):
            raise NotARefinement(f"horizons differ: {self.horizon} vs {other.horizon}")
        big = np.asarray(other.times)
        idx = np.searchsorted(big, self.times)
        out = []
        for t, i in zip(self.times, idx):
            hit = [j for j in (i - 1, i) if 0 <= j < len(big) and abs(big[j] - t) <= TIME_MATCH]
            if not hit:
                raise NotARefinement(f"time {t} of {self.times} is missing from {other.times}")
            out.append(hit[0])
        return np.asarray(out, dtype=int)

    def is_refined_by(self, other: "TimeGrid") -> bool:
        try:
            self.positions_in(other)
        except NotARefinement:
            return False
        return True

    def union(self, other: "TimeGrid") -> "TimeGrid":
        if abs(self.horizon - other.horizon) > TIME_MATCH * max(1.0, self.horizon):
            raise NotARefinement(f"horizons differ: {self.horizon} vs {other.horizon}")
        merged = sorted(self.times + other.times)
        out = [merged[0]]
        for t in merged[1:]:
            if t - out[-1] > TIME_MATCH:
                out.append(t)
        return TimeGrid(self.horizon, tuple(out))


def union_grid(grids: Iterable[TimeGrid]) -> TimeGrid:
    grids = list(grids)
    if not grids:
        raise ValueError("need at least one grid")
    out = grids[0]
    for g in grids[1:]:
        out = out.union(g)
    return out


# --------------------------------------------------------------------------
# atomic measures


@dataclass(frozen=True, eq=False)
class AtomicComplexMeasure:
    """Finite sum of weighted point masses in ``R^dimension``.

    Its Fourier transform ``x -> sum_j w_j exp(i <y_j, x>)`` is the function it
    represents, and ``total_variation`` is that function's algebra norm.
    """

    locations: np.ndarray
    weights: np.ndarray
    dimension: int

    def __post_init__(self):
        d = int(self.dimension)
        if d < 1:
            raise ValueError(f"dimension must be positive, got {self.dimension!r}")
        w = np.asarray(self.weights, dtype=complex).reshape(-1)
        loc = np.asarray(self.locations, dtype=float)
        if loc.size == 0:
            loc = loc.reshape(0, d)
        loc = loc.reshape(len(w), -1) if loc.ndim != 2 else loc
        if loc.shape != (len(w), d):
            raise DimensionMismatch(
                f"locations have shape {loc.shape}, expected ({len(w)}, {d})"
            )
        if not (np.all(np.isfinite(loc)) and np.all(np.isfinite(w))):
            raise ValueError("atom locations and weights must be finite")
        loc.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "dimension", d)

    @classmethod
    def from_atoms(cls, atoms, dimension: int | None = None) -> "AtomicComplexMeasure":
        """Build from ``[(location, weight), ...]``; scalar locations mean ``d = 1``."""
        atoms = list(atoms)
        if not atoms:
            if dimension is None:
                raise ValueError("dimension is required for an empty measure")
            return cls.zero(dimension)
        locs = [np.atleast_1d(np.asarray(y, dtype=float)) for y, _ in atoms]
        d = len(locs[0]) if dimension is None else dimension
        return cls(np.array(locs, dtype=float).reshape(len(atoms), -1), [w for _, w in atoms], d)

    @classmethod
    def zero(cls, dimension: int) -> "AtomicComplexMeasure":
        return cls(np.zeros((0, dimension)), np.zeros(0, dtype=complex), dimension)

    @classmethod
    def unit(cls, dimension: int) -> "AtomicComplexMeasure":
        """Point mass at the origin, representing the constant function 1."""
        return cls(np.zeros((1, dimension)), np.ones(1, dtype=complex), dimension)

    def __len__(self) -> int:
        return len(self.weights)

    def atoms(self):
        return [(tuple(y), complex(w)) for y, w in zip(self.locations, self.weights)]

    def total_variation(self) -> float:
        return float(np.abs(self.weights).sum())

    def evaluate(self, x) -> np.ndarray:
        """``sum_j w_j exp(i <y_j, x>)`` for points ``x`` of shape ``(..., d)``."""
        x = np.asarray(x, dtype=float)
        if self.dimension == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        if x.shape[-1] != self.dimension:
            raise DimensionMismatch(f"points have dimension {x.shape[-1]}, expected {self.dimension}")
        phase = np.exp(1j * (x @ self.locations.T))
        return phase @ self.weights

    def scaled(self, c: complex) -> "AtomicComplexMeasure":
        return AtomicComplexMeasure(self.locations, self.weights * c, self.dimension)

    def __add__(self, other: "AtomicComplexMeasure") -> "AtomicComplexMeasure":
        if other.dimension != self.dimension:
            raise DimensionMismatch(f"dimensions differ: {self.dimension} vs {other.dimension}")
        return AtomicComplexMeasure(
            np.vstack([self.locations, other.locations]),
            np.concatenate([self.weights, other.weights]),
            self.dimension,
        )

    def convolve(self, other: "AtomicComplexMeasure") -> "AtomicComplexMeasure":
        """Measure of the pointwise product of the two represented functions."""
        if other.dimension != self.dimension:
            raise DimensionMismatch(f"dimensions differ: {self.dimension} vs {other.dimension}")
        locs = (self.locations[:, None, :] + other.locations[None, :, :]).reshape(-1, self.dimension)
        w = np.outer(self.weights, other.weights).reshape(-1)
        return AtomicComplexMeasure(locs, w, self.dimension)

    def canonical(self) -> "AtomicComplexMeasure":
        """Merge atoms at equal (rounded) locations, drop negligible weights, sort."""
        if len(self) == 0:
            return self
        keys = np.round(self.locations, CANONICAL_DECIMALS) + 0.0  # folds -0.0 into 0.0
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        w = np.zeros(len(uniq), dtype=complex)
        np.add.at(w, inverse.reshape(-1), self.weights)
        keep = np.abs(w) >= ZERO_WEIGHT
        return AtomicComplexMeasure(uniq[keep], w[keep], self.dimension)

    def same_as(self, other: "AtomicComplexMeasure", tol: float = 1e-12) -> bool:
        """Equality of the represented functions, decided on canonical forms."""
        if other.dimension != self.dimension:
            return False
        a, b = self.canonical(), other.canonical()
        if len(a) != len(b):
            return False
        if not np.array_equal(a.locations, b.locations):
            return False
        scale = max(1.0, a.total_variation(), b.total_variation())
        return bool(np.all(np.abs(a.weights - b.weights) <= tol * scale))

    def to_json(self) -> list:
        return [
            {"y": [float(v) for v in y], "w": [float(w.real), float(w.imag)]}
            for y, w in zip(self.locations, self.weights)
        ]

    @classmethod
    def from_json(cls, atoms: list, dimension: int | None = None) -> "AtomicComplexMeasure":
        parsed = []
        for a in atoms:
            y = a["y"]
            w = a["w"]
            if isinstance(w, (int, float)):
                w = [w, 0.0]
            if len(w) != 2:
                raise ValueError(f"weight must be [re, im], got {w!r}")
            parsed.append((y, complex(float(w[0]), float(w[1]))))
        return cls.from_atoms(parsed, dimension)


# --------------------------------------------------------------------------
# cylinder functions and marginals


@dataclass(frozen=True, eq=False)
class CylinderFunction:
    """``F(x_1..x_n) = sum_j w_j exp(i sum_k y_jk x_k)`` at the grid times."""

    grid: TimeGrid
    fourier: AtomicComplexMeasure

    def __post_init__(self):
        if self.fourier.dimension != len(self.grid):
            raise DimensionMismatch(
                f"measure has dimension {self.fourier.dimension}, grid has {len(self.grid)} times"
            )

    @classmethod
    def constant(cls, grid: TimeGrid, value: complex = 1.0) -> "CylinderFunction":
        return cls(grid, AtomicComplexMeasure.unit(len(grid)).scaled(value))

    def __call__(self, x) -> np.ndarray:
        return self.fourier.evaluate(x)

    @property
    def norm(self) -> float:
        return self.fourier.total_variation()

    def to_json(self) -> dict:
        return {
            "horizon": self.grid.horizon,
            "times": list(self.grid.times),
            "atoms": self.fourier.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CylinderFunction":
        grid = TimeGrid(obj["horizon"], tuple(obj["times"]))
        return cls(grid, AtomicComplexMeasure.from_json(obj["atoms"], len(grid)))


class Pinning(str, Enum):
    TERMINAL_DELTA = "TerminalDelta"


@dataclass(frozen=True)
class CylinderMarginal:
    spec: EvolutionSpec
    grid: TimeGrid
    pinning: Pinning = Pinning.TERMINAL_DELTA

    def __post_init__(self):
        object.__setattr__(self, "pinning", Pinning(self.pinning))
        inc = self.grid.increments
        if np.any(inc < self.spec.t_eps):
            raise TimeTooSmall(
                f"increments {inc.tolist()} include one below t_eps={self.spec.t_eps}"
            )


def extend_cylinder(f: CylinderFunction, K: TimeGrid) -> CylinderFunction:
    """Same function viewed on the finer grid ``K``: zero frequency at new times."""
    pos = f.grid.positions_in(K)
    locs = np.zeros((len(f.fourier), len(K)))
    locs[:, pos] = f.fourier.locations
    return CylinderFunction(K, AtomicComplexMeasure(locs, f.fourier.weights, len(K)))


def marginal_fourier(m: CylinderMarginal, y) -> complex:
    """``int exp(i <y, x>) mu_J(dx)``."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (len(m.grid),):
        raise DimensionMismatch(f"y has shape {y.shape}, grid has {len(m.grid)} times")
    return complex(_marginal_fourier_many(m, y[None, :])[0])


def _marginal_fourier_many(m: CylinderMarginal, ys: np.ndarray) -> np.ndarray:
    partial = np.cumsum(ys, axis=1)
    expo = m.spec.alpha * (partial**m.spec.p) @ m.grid.increments
    return np.exp(expo)


def eval_LJ(f: CylinderFunction, m: CylinderMarginal, method: str = "fourier",
            grid: kmod.Grid1D | None = None) -> complex:
    """``int F d mu_J``.

    ``method="fourier"`` sums the closed-form transform over the atoms.
    ``method="quadrature"`` integrates on sampled kernels by nested
    convolutions (damped symbols only, at most three times).
    """
    if f.grid != m.grid:
        raise GridMismatch(f"function grid {f.grid} differs from marginal grid {m.grid}")
    method = method.lower()
    if method == "fourier":
        if len(f.fourier) == 0:
            return 0j
        return complex(_marginal_fourier_many(m, f.fourier.locations) @ f.fourier.weights)
    if method == "quadrature":
        return _eval_quadrature(f, m, grid)
    raise ValueError(f"unknown method {method!r}; use 'fourier' or 'quadrature'")


def quadrature_grid(m: CylinderMarginal, max_frequency: float = 0.0) -> kmod.Grid1D:
    """Symmetric spatial grid, with a node at 0, for nested-convolution quadrature."""
    spec = m.spec
    taus = m.grid.increments
    reach = sum(kmod._decay_width(spec, float(tau), 0.0) for tau in taus)
    band = max(kmod._cutoff(spec, float(tau), 0.0) for tau in taus) + max_frequency
    h = 0.5 * math.pi / band
    half = 1 << max(4, math.ceil(math.log2(reach / h)))
    return kmod.Grid1D(-half * h, half * h, 2 * half)


def _eval_quadrature(f, m, grid):
    spec = m.spec
    if spec.oscillatory:
        raise NotIntegrable(
            "nested-convolution quadrature needs absolutely integrable kernels; "
            f"alpha={spec.alpha} gives an oscillatory kernel"
        )
    n = len(m.grid)
    if n > QUADRATURE_MAX_TIMES:
        raise DimensionTooLarge(f"quadrature is limited to {QUADRATURE_MAX_TIMES} times, got {n}")
    if len(f.fourier) == 0:
        return 0j
    if grid is None:
        partial = np.abs(np.cumsum(f.fourier.locations, axis=1)).max()
        grid = quadrature_grid(m, float(partial))
    origin = grid.origin_index()
    if origin is None:
        raise GridMismatch("quadrature grid must contain the origin as a node")
    x = grid.points
    h = grid.spacing
    npts = grid.n_points
    # kernels sampled symmetrically about 0 so that "same"-mode convolution is centred
    kernels = []
    for tau in m.grid.increments:
        vals = kmod.fourier_samples(spec, float(tau), -(npts // 2) * h, h, npts)
        kernels.append(vals)
    centre = npts // 2
    total = 0j
    for y, w in zip(f.fourier.locations, f.fourier.weights):
        state = np.exp(1j * y[0] * x)
        for j in range(1, n):
            conv = fftconvolve(state, kernels[j - 1])[centre:centre + npts] * h
            state = np.exp(1j * y[j] * x) * conv
        # (g_{tau_n} * state)(0) = sum_z g(-z) state(z) h
        total += w * _convolve_at_zero(state, kernels[-1], origin, centre, h)
    return complex(total)


def _convolve_at_zero(state, g, origin, centre, h):
    # g[i] sits at (i - centre) h, state[k] at (k - origin) h; need g(-z) state(z)
    npts = len(state)
    z_idx = np.arange(npts)
    g_idx = centre - (z_idx - origin)
    ok = (g_idx >= 0) & (g_idx < len(g))
    return np.sum(g[g_idx[ok]] * state[ok]) * h


def compatibility_check(f: CylinderFunction, K: TimeGrid, m_J: CylinderMarginal,
                        m_K: CylinderMarginal) -> float:
    """``|L_J(f) - L_K(extension of f to K)|``."""
    if m_J.spec != m_K.spec:
        raise SpecMismatch("marginals use different evolution specs")
    if abs(m_J.grid.horizon - m_K.grid.horizon) > TIME_MATCH:
        raise NotARefinement("marginals use different horizons")
    if m_K.grid != K:
        raise GridMismatch(f"m_K lives on {m_K.grid}, not on {K}")
    lhs = eval_LJ(f, m_J)
    rhs = eval_LJ(extend_cylinder(f, K), m_K)
    return float(abs(lhs - rhs))


def minimal_extension_eval(representations: Sequence[tuple]) -> complex:
    """Common value of several representations of one cylinder function.

    Every representation is lifted to the union of all their grids; they must
    agree there as functions (compared on canonical atom lists), otherwise
    :class:`InconsistentRepresentations` is raised.
    """
    reps = list(representations)
    if not reps:
        raise ValueError("need at least one representation")
    spec = reps[0][1].spec
    for f, m in reps:
        if m.spec != spec:
            raise SpecMismatch("representations use different evolution specs")
        if f.grid != m.grid:
            raise GridMismatch(f"function grid {f.grid} differs from marginal grid {m.grid}")
    top = union_grid(f.grid for f, _ in reps)
    lifted = [extend_cylinder(f, top) for f, _ in reps]
    ref = lifted[0].fourier
    for i, g in enumerate(lifted[1:], start=1):
        if not ref.same_as(g.fourier):
            raise InconsistentRepresentations(
                f"representation {i} differs from representation 0 on the common grid {top.times}"
            )
    return eval_LJ(lifted[0], CylinderMarginal(spec, top))
