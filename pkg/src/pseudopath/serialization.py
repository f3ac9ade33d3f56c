"""JSON/CSV helpers shared by the CLI and the scripts.

Complex numbers are always written as two-element ``[re, im]`` arrays.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .kernel import EvolutionSpec, Grid1D, write_csv_rows
from .oscillatory import FiniteRankOperator, FresnelIntegrand
from .path_functional import InitialDatum, PotentialSpec
from .projective import AtomicComplexMeasure, CylinderFunction


def complex_to_json(z: complex) -> list:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def complex_from_json(v: Any) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(float(v), 0.0)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    raise ValueError(f"expected a number or [re, im], got {v!r}")


def parse_pair(text: str) -> complex:
    """``"re,im"`` (or a bare real) to a complex number."""
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) == 1:
        return complex(float(parts[0]), 0.0)
    if len(parts) == 2:
        return complex(float(parts[0]), float(parts[1]))
    raise ValueError(f"expected 're,im', got {text!r}")


def parse_grid(text) -> Grid1D:
    """``"xmin,xmax,n"`` or ``[xmin, xmax, n]`` to a grid."""
    parts = text if isinstance(text, (list, tuple)) else str(text).split(",")
    if len(parts) != 3:
        raise ValueError(f"grid must be 'xmin,xmax,n', got {text!r}")
    n = float(parts[2])
    if not n.is_integer():
        raise ValueError(f"grid point count must be an integer, got {parts[2]!r}")
    return Grid1D(float(parts[0]), float(parts[1]), int(n))


def grid_to_json(g: Grid1D) -> list:
    return [g.x_min, g.x_max, g.n_points]


def spec_from_params(params: dict) -> EvolutionSpec:
    alpha = params["alpha"]
    alpha = parse_pair(alpha) if isinstance(alpha, str) else complex_from_json(alpha)
    t_eps = float(params.get("t_eps", 1e-3))
    return EvolutionSpec(int(params["p"]), alpha, t_eps)


def spec_to_json(spec: EvolutionSpec) -> dict:
    return {"p": spec.p, "alpha": complex_to_json(spec.alpha), "t_eps": spec.t_eps}


def measure_from_json(obj, dimension: int | None = None) -> AtomicComplexMeasure:
    atoms = obj["atoms"] if isinstance(obj, dict) else obj
    if dimension is None and isinstance(obj, dict) and "d" in obj:
        dimension = int(obj["d"])
    if not atoms and dimension is None:
        dimension = 1
    return AtomicComplexMeasure.from_json(atoms, dimension)


def initial_datum_from_json(obj) -> InitialDatum:
    return InitialDatum(measure_from_json(obj, 1))


def potential_from_json(obj) -> PotentialSpec:
    return PotentialSpec(measure_from_json(obj, 1))


def operator_from_json(obj: dict) -> FiniteRankOperator:
    d = int(obj["d"])
    vecs = obj.get("eigenvectors")
    return FiniteRankOperator(d, obj.get("eigenvalues", [0.0] * d),
                              None if vecs is None else np.asarray(vecs, dtype=float))


def operator_to_json(B: FiniteRankOperator) -> dict:
    return {
        "d": B.dimension,
        "eigenvalues": B.eigenvalues.tolist(),
        "eigenvectors": B.eigenvectors.tolist(),
    }


def integrand_from_json(obj: dict) -> FresnelIntegrand:
    d = int(obj["d"])
    return FresnelIntegrand(d, measure_from_json(obj["atoms"], d), float(obj.get("hbar", 1.0)))


def cylinder_from_json(obj: dict) -> CylinderFunction:
    return CylinderFunction.from_json(obj)


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    if isinstance(obj, complex):
        return complex_to_json(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2) + "\n"


def write_json(obj, path: str | Path) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def read_json(path: str | Path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_complex_csv(x: np.ndarray, values: np.ndarray, fh) -> None:
    values = np.asarray(values, dtype=complex)
    write_csv_rows(fh, zip(x, values.real, values.imag))
