"""Normalized Fresnel integrals with a finite-rank quadratic perturbation.

For a self-adjoint ``B`` with ``I - B`` invertible and ``f`` a finite
trigonometric sum ``f(x) = sum_j w_j exp(i <y_j, x>)``, the normalized
oscillatory integral

    int f(x) exp(-(i / 2 hbar) <x, B x>) exp((i / 2 hbar) |x|^2) dx / (2 pi i hbar)^(d/2)

has the closed form (see :func:`parseval_rhs`)

    det(I - B)^(-1/2) sum_j w_j exp(-(i hbar / 2) <y_j, (I - B)^(-1) y_j>).

Quadrature: in the eigenbasis of ``B`` both the Gaussian phase and every
plane wave factorize, so each atom is a product of one-dimensional
improper integrals ``int exp(i a z^2 / 2 hbar + i eta z) dz`` with
``a = 1 - lambda``.  Those are evaluated either with a Gaussian damping
``exp(-eps z^2 / 2 hbar)`` extrapolated to ``eps -> 0`` (``regularized``) or
as limits of partial integrals over growing intervals (``growing_box``).

Square-root branch: ``(2 pi i hbar)^(1/2)`` uses ``exp(i pi / 4)``, which makes
each negative direction ``a < 0`` contribute ``|a|^(-1/2) exp(-i pi / 2)``.
Hence ``det(I - B)^(-1/2) = |det|^(-1/2) exp(-i pi Ind / 2)`` where ``Ind`` is
the number of eigenvalues of ``B`` above 1.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import kernel as kmod
from .errors import (
    DimensionMismatch,
    DimensionTooLarge,
    LadderDivergence,
    NonNested,
    SingularOperator,
)
from .projective import AtomicComplexMeasure

MAX_QUADRATURE_DIM = 3
MAX_AMBIENT_DIM = 6
SINGULAR_TOL = 1e-12
ORTHONORMAL_TOL = 1e-12
NESTING_TOL = 1e-10

REG_LEVELS = 5
REG_FLOOR = 36.0
BOX_TERMS = 40
BOX_SETTLE_TOL = 1e-9
_GL_NODES, _GL_WEIGHTS = leggauss(20)


@dataclass(frozen=True, eq=False)
class FiniteRankOperator:
    """Self-adjoint ``B = Q diag(lambda) Q^T`` on ``R^d``."""

    dimension: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None

    def __post_init__(self):
        d = int(self.dimension)
        if d < 1:
            raise ValueError(f"dimension must be positive, got {self.dimension!r}")
        lam = np.asarray(self.eigenvalues, dtype=float).reshape(-1)
        if lam.shape != (d,):
            raise DimensionMismatch(f"expected {d} eigenvalues, got {lam.size}")
        if not np.all(np.isfinite(lam)):
            raise ValueError("eigenvalues must be finite")
        Q = np.eye(d) if self.eigenvectors is None else np.asarray(self.eigenvectors, dtype=float)
        if Q.shape != (d, d):
            raise DimensionMismatch(f"eigenvector frame has shape {Q.shape}, expected ({d}, {d})")
        if np.abs(Q.T @ Q - np.eye(d)).max() > ORTHONORMAL_TOL:
            raise ValueError("eigenvectors must form an orthonormal frame")
        if np.any(np.abs(1.0 - lam) < SINGULAR_TOL):
            raise SingularOperator(f"I - B is singular: eigenvalue 1 in {lam.tolist()}")
        lam.setflags(write=False)
        Q.setflags(write=False)
        object.__setattr__(self, "dimension", d)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "eigenvectors", Q)

    @classmethod
    def zero(cls, d: int) -> "FiniteRankOperator":
        return cls(d, np.zeros(d))

    @classmethod
    def from_matrix(cls, matrix) -> "FiniteRankOperator":
        M = np.asarray(matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionMismatch(f"need a square matrix, got shape {M.shape}")
        lam, Q = np.linalg.eigh(0.5 * (M + M.T))
        return cls(M.shape[0], lam, Q)

    @property
    def matrix(self) -> np.ndarray:
        Q = self.eigenvectors
        return (Q * self.eigenvalues) @ Q.T

    @property
    def index(self) -> int:
        """Number of negative eigenvalues of ``I - B``."""
        return int(np.sum(self.eigenvalues > 1.0))

    def restrict(self, frame: np.ndarray) -> "FiniteRankOperator":
        """Compression ``U^T B U`` onto the span of the orthonormal columns of ``frame``."""
        return FiniteRankOperator.from_matrix(frame.T @ self.matrix @ frame)


@dataclass(frozen=True, eq=False)
class FresnelIntegrand:
    dimension: int
    fourier: AtomicComplexMeasure
    hbar: float = 1.0

    def __post_init__(self):
        if self.fourier.dimension != self.dimension:
            raise DimensionMismatch(
                f"measure has dimension {self.fourier.dimension}, integrand has {self.dimension}"
            )
        if not (math.isfinite(self.hbar) and self.hbar > 0):
            raise ValueError(f"hbar must be positive, got {self.hbar!r}")


def _check_pair(B: FiniteRankOperator, f: FresnelIntegrand) -> None:
    if B.dimension != f.dimension:
        raise DimensionMismatch(f"operator has dimension {B.dimension}, integrand {f.dimension}")


def fredholm_det(B: FiniteRankOperator) -> complex:
    """``prod (1 - lambda_i)``; its phase ``exp(-i pi Ind)`` is the sign of the product."""
    one_minus = 1.0 - B.eigenvalues
    if np.any(np.abs(one_minus) < SINGULAR_TOL):
        raise SingularOperator(f"I - B is singular: eigenvalues {B.eigenvalues.tolist()}")
    modulus = float(np.prod(np.abs(one_minus)))
    return complex(modulus * cmath.exp(-1j * math.pi * B.index))


def inverse_sqrt_det(B: FiniteRankOperator) -> complex:
    """``det(I - B)^(-1/2)`` on the branch ``|det|^(-1/2) exp(-i pi Ind / 2)``."""
    modulus = abs(fredholm_det(B))
    return complex(modulus ** -0.5 * cmath.exp(-0.5j * math.pi * B.index))


def parseval_rhs(B: FiniteRankOperator, f: FresnelIntegrand) -> complex:
    """Closed form of the normalized oscillatory integral (see module docstring)."""
    _check_pair(B, f)
    if len(f.fourier) == 0:
        return 0j
    eta = f.fourier.locations @ B.eigenvectors
    quad = (eta**2 / (1.0 - B.eigenvalues)).sum(axis=1)
    terms = np.exp(-0.5j * f.hbar * quad) @ f.fourier.weights
    return complex(inverse_sqrt_det(B) * terms)


# --------------------------------------------------------------------------
# one-dimensional factors


def _damped_ratio(a: float, eta: float, hbar: float, eps: float) -> complex:
    # int exp((i a - eps) z^2 / 2 hbar + i eta z) dz / int exp((i - eps) z^2 / 2 hbar) dz
    Z = math.sqrt(2 * hbar * REG_FLOOR / eps) + abs(eta) * hbar / abs(a)
    freq = (max(abs(a), 1.0) * Z + abs(eta) * hbar) / hbar
    h = min(0.5 * math.pi / freq, 0.25 * math.sqrt(hbar / eps))
    z = np.arange(-math.ceil(Z / h), math.ceil(Z / h) + 1) * h
    zz = z * z / (2 * hbar)
    num = np.sum(np.exp((1j * a - eps) * zz + 1j * eta * z))
    den = np.sum(np.exp((1j - eps) * zz))
    return complex(num / den)


def regularization_ladder(a: np.ndarray, eta: np.ndarray, hbar: float) -> list[float]:
    """Damping strengths, scaled to the distance from the nearest singularity in ``eps``."""
    a = np.atleast_1d(a)
    eta = np.atleast_1d(eta)
    rate = float(np.max(1.0 / np.abs(a) + hbar * eta**2 / (2 * a * a), initial=1.0))
    eps0 = 0.2 * min(1.0, 1.0 / rate)
    return [eps0 / 2**j for j in range(REG_LEVELS)]


def _half_line_partial_sums(a: float, eta: float, hbar: float, n_terms: int) -> np.ndarray:
    """``int_0^{R_n} exp(i (a z^2 / 2 hbar + eta z)) dz`` on a phase-aligned ladder.

    ``R_0`` lies past the stationary point and every later ``R_n`` advances
    the phase by ``pi``, so the truncation error alternates in sign.
    """
    scale = math.sqrt(hbar / abs(a))
    z_star = -eta * hbar / a
    r0 = max(4.0 * scale, 2.0 * max(z_star, 0.0) + 4.0 * scale, 4.0)
    phi0 = a * r0 * r0 / (2 * hbar) + eta * r0
    c = phi0 + math.copysign(math.pi, a) * np.arange(n_terms)
    disc = np.sqrt(eta * eta + 2 * a * c / hbar)
    R = (-eta + math.copysign(1.0, a) * disc) * hbar / a
    edges = np.concatenate([[0.0], R])
    sums = np.empty(n_terms, dtype=complex)
    acc = 0j
    for i, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        fmax = abs(a) * hi / hbar + abs(eta)
        m = max(1, math.ceil((hi - lo) * fmax / (2 * math.pi)))
        e = np.linspace(lo, hi, m + 1)
        mid = 0.5 * (e[:-1] + e[1:])
        half = 0.5 * (e[1:] - e[:-1])
        z = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        phase = a * z * z / (2 * hbar) + eta * z
        acc += np.sum(np.exp(1j * phase) * _GL_WEIGHTS[None, :] * half[:, None])
        sums[i] = acc
    return sums


def _averaged_limit(sums: np.ndarray) -> complex:
    """Iterated pairwise (Euler) averaging; raises LadderDivergence if unsettled."""
    level = np.asarray(sums)
    prev = level
    while len(level) > 1:
        prev = level
        level = 0.5 * (level[:-1] + level[1:])
    value = complex(level[0])
    spread = abs(prev[1] - prev[0]) if len(prev) > 1 else math.inf
    if not spread <= BOX_SETTLE_TOL * max(1.0, abs(value)):
        raise LadderDivergence(
            f"averaged partial integrals still move by {spread:.3g} after {len(sums)} ladder points"
        )
    return value


def _growing_box_factor(a: float, eta: float, hbar: float) -> complex:
    right = _averaged_limit(_half_line_partial_sums(a, eta, hbar, BOX_TERMS))
    left = _averaged_limit(_half_line_partial_sums(a, -eta, hbar, BOX_TERMS))
    return (right + left) / cmath.sqrt(2j * math.pi * hbar)


def fresnel_quadrature_lhs(B: FiniteRankOperator, f: FresnelIntegrand,
                           method: str = "regularized") -> complex:
    """Normalized oscillatory integral by quadrature.

    ``method`` is ``"regularized"`` (damping ladder plus Richardson) or
    ``"growing_box"`` (partial integrals plus iterated averaging).
    """
    _check_pair(B, f)
    d = B.dimension
    if d > MAX_QUADRATURE_DIM:
        raise DimensionTooLarge(f"direct quadrature is limited to d <= {MAX_QUADRATURE_DIM}, got {d}")
    method = method.lower().replace("-", "_")
    if method not in ("regularized", "growing_box"):
        raise ValueError(f"unknown method {method!r}; use 'regularized' or 'growing_box'")
    if len(f.fourier) == 0:
        return 0j
    a = 1.0 - B.eigenvalues
    etas = f.fourier.locations @ B.eigenvectors
    hbar = f.hbar
    total = 0j
    for eta, w in zip(etas, f.fourier.weights):
        if method == "regularized":
            ladder = regularization_ladder(a, eta, hbar)
            rungs = [
                np.prod([_damped_ratio(a[k], eta[k], hbar, eps) for k in range(d)])
                for eps in ladder
            ]
            value = complex(kmod._richardson(rungs))
        else:
            value = complex(np.prod([_growing_box_factor(a[k], eta[k], hbar) for k in range(d)]))
        total += w * value
    return complex(total)


# --------------------------------------------------------------------------
# projection chains


def coordinate_chain(order: Sequence[int]) -> list[np.ndarray]:
    """Frames spanned by the first ``1, 2, ..., D`` coordinate axes in ``order``."""
    D = len(order)
    eye = np.eye(D)
    return [eye[:, list(order[:n])] for n in range(1, D + 1)]


def frame_chain(Q: np.ndarray) -> list[np.ndarray]:
    """Frames spanned by the first ``1, 2, ..., D`` columns of an orthogonal ``Q``."""
    Q = np.asarray(Q, dtype=float)
    return [Q[:, :n] for n in range(1, Q.shape[1] + 1)]


def _check_chain(chain: Sequence[np.ndarray], D: int) -> None:
    if not chain:
        raise NonNested("empty projection chain")
    prev = None
    for U in chain:
        U = np.asarray(U, dtype=float)
        if U.ndim != 2 or U.shape[0] != D:
            raise DimensionMismatch(f"frame has shape {U.shape}, expected ({D}, m)")
        if np.abs(U.T @ U - np.eye(U.shape[1])).max() > 1e-10:
            raise ValueError("projection frames must have orthonormal columns")
        if prev is not None:
            leak = prev - U @ (U.T @ prev)
            if prev.shape[1] > U.shape[1] or np.abs(leak).max() > NESTING_TOL:
                raise NonNested("a projection's range is not contained in the next one")
        prev = U
    if prev.shape[1] != D:
        raise NonNested(f"chain ends at rank {prev.shape[1]}, not at the ambient dimension {D}")


def idim_osc_approx(B: FiniteRankOperator, f: FresnelIntegrand, ambient_dim: int,
                    sequences: Sequence[Sequence[np.ndarray]],
                    method: str = "regularized") -> list[list[complex]]:
    """Finite-dimensional approximations along each nested projection chain.

    Level ``n`` of a chain with frame ``U_n`` integrates the restriction of the
    integrand to ``range(U_n)``: the operator becomes ``U_n^T B U_n`` and each
    frequency ``y`` becomes ``U_n^T y``.  ``method="closed"`` evaluates each
    level with :func:`parseval_rhs` instead of quadrature (needed above
    three dimensions).
    """
    D = int(ambient_dim)
    if D > MAX_AMBIENT_DIM:
        raise DimensionTooLarge(f"ambient dimension is limited to {MAX_AMBIENT_DIM}, got {D}")
    if B.dimension != D or f.dimension != D:
        raise DimensionMismatch(f"operator/integrand dimensions {B.dimension}/{f.dimension} differ from {D}")
    if len(sequences) < 2:
        raise ValueError("need at least two projection chains")
    out = []
    for chain in sequences:
        _check_chain(chain, D)
        values = []
        for U in chain:
            U = np.asarray(U, dtype=float)
            Bn = B.restrict(U)
            fn = FresnelIntegrand(
                U.shape[1],
                AtomicComplexMeasure(f.fourier.locations @ U, f.fourier.weights, U.shape[1]),
                f.hbar,
            )
            if method == "closed":
                values.append(parseval_rhs(Bn, fn))
            else:
                values.append(fresnel_quadrature_lhs(Bn, fn, method))
        out.append(values)
    return out
