"""Invariant suite run by ``pseudopath check``.

Every item records the measured quantity and the bound it was held to.
Randomized items draw from one generator seeded with ``seed`` so a report
is reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernel as K
from . import oscillatory as O
from . import path_functional as P
from . import projective as J
from . import semigroup as S
from .errors import InconsistentRepresentations

DEFAULT_SEED = 20240611


@dataclass
class CheckItem:
    name: str
    passed: bool
    value: float
    tolerance: float

    def to_dict(self) -> dict:
        return {"name": self.name, "status": "pass" if self.passed else "fail",
                "value": self.value, "tolerance": self.tolerance}


@dataclass
class CheckReport:
    seed: int
    items: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.items)

    def add(self, name: str, value: float, tolerance: float, ok: bool | None = None) -> None:
        value = float(value)
        if ok is None:
            ok = value <= tolerance
        self.items.append(CheckItem(name, bool(ok), value, float(tolerance)))

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "overall": "pass" if self.passed else "fail",
            "items": [item.to_dict() for item in self.items],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "CheckReport":
        rep = cls(int(obj["seed"]))
        for it in obj["items"]:
            rep.items.append(CheckItem(it["name"], it["status"] == "pass",
                                       float(it["value"]), float(it["tolerance"])))
        return rep


HEAT = K.EvolutionSpec(2, -0.5)
QUARTIC = K.EvolutionSpec(4, -1.0)
AIRY = K.EvolutionSpec(3, 1j / 3)


def _kernel_checks(rep: CheckReport, rng) -> None:
    g = K.Grid1D(-10, 10, 4096)
    k = K.compute_kernel(HEAT, 1.0, g)
    exact = np.exp(-g.points**2 / 2) / math.sqrt(2 * math.pi)
    rep.add("kernel.heat_closed_form", np.abs(k.values - exact).max(), 1e-8)

    wide = K.Grid1D(-40, 40, 2048)
    for spec, grid in ((HEAT, g), (QUARTIC, wide), (AIRY, K.Grid1D(-8, 4, 1024))):
        kk = K.compute_kernel(spec, 1.0, grid)
        slack = 0.0 if spec.oscillatory else kk.tail_mass_bound
        rep.add(f"kernel.mass[p={spec.p}]", abs(K.kernel_mass(kk) - 1), 1e-6 + slack)

    kq = K.compute_kernel(K.EvolutionSpec(4, -1 + 0.5j), 1.0, K.Grid1D(-40, 40, 2048))
    v = kq.values
    rep.add("kernel.even_p_symmetry", np.abs(v[1:] - v[1:][::-1]).max(), 1e-8)
    ka = K.compute_kernel(AIRY, 1.0, K.Grid1D(-8, 4, 1024))
    rep.add("kernel.odd_p_real", np.abs(ka.values.imag).max(), 1e-6)

    rep.add("kernel.scaling[p=4,t=2]", K.scaling_check(QUARTIC, 2.0, K.Grid1D(-20, 20, 1024)), 1e-6)
    tv = K.total_variation(K.compute_kernel(QUARTIC, 1.0, wide))
    rep.add("kernel.tv_exceeds_one[p=4]", tv, 1.001, ok=tv > 1.001)
    fine = K.compute_kernel(QUARTIC, 1.0, wide.refined())
    base = K.compute_kernel(QUARTIC, 1.0, wide)
    rep.add("kernel.refinement", np.abs(fine.values[::2] - base.values).max(), 1e-7)


def _semigroup_checks(rep: CheckReport, rng) -> None:
    for spec, grid, tol in ((HEAT, K.Grid1D(-20, 20, 1024), 1e-8),
                            (QUARTIC, K.Grid1D(-40, 40, 1024), 1e-6)):
        probe = S.ConvolutionSemigroupProbe(spec, grid)
        s, t = rng.uniform(0.1, 1.0, 2)
        rep.add(f"semigroup.chapman_kolmogorov[p={spec.p}]",
                S.chapman_kolmogorov_residual(probe, s, t), tol)
    probe = S.ConvolutionSemigroupProbe(AIRY, K.Grid1D(-4, 4, 512))
    rep.add("semigroup.chapman_kolmogorov[p=3]", S.chapman_kolmogorov_residual(probe, 0.3, 0.7), 1e-5)

    grid = K.Grid1D(-40, 40, 2048)
    one = S.marginal_variation(QUARTIC, 1.0, 1, grid)
    ten = S.marginal_variation(QUARTIC, 1.0, 10, grid)
    rep.add("semigroup.variation_multiplicative",
            abs(ten.total - one.total**10) / one.total**10, 1e-10)
    rep.add("semigroup.gate_fires[p=4]", 0.0, 0.0, ok=ten.verdict is S.Verdict.UNBOUNDED)
    heat = S.marginal_variation(HEAT, 1.0, 10, K.Grid1D(-20, 20, 1024))
    rep.add("semigroup.gate_abstains[heat]", abs(heat.total - 1), 1e-6,
            ok=abs(heat.total - 1) <= 1e-6 and heat.verdict is S.Verdict.POSSIBLE)


def random_cylinder(rng, grid: J.TimeGrid, n_atoms: int = 3, spread: float = 2.0) -> J.CylinderFunction:
    n = len(grid)
    locs = rng.uniform(-spread, spread, (n_atoms, n))
    w = rng.normal(size=n_atoms) + 1j * rng.normal(size=n_atoms)
    return J.CylinderFunction(grid, J.AtomicComplexMeasure(locs, w, n))


def random_refinement(rng, horizon: float, n_coarse: int, n_extra: int, step: float = 0.05):
    """Coarse grid and a refinement, both on multiples of ``step`` inside ``(0, horizon)``."""
    slots = np.arange(1, int(round(horizon / step))) * step
    pick = rng.choice(len(slots), n_coarse + n_extra, replace=False)
    coarse = J.TimeGrid(horizon, tuple(sorted(slots[pick[:n_coarse]])))
    fine = J.TimeGrid(horizon, tuple(sorted(slots[pick])))
    return coarse, fine


def _projective_checks(rep: CheckReport, rng) -> None:
    worst = 0.0
    for spec in (HEAT, AIRY, QUARTIC):
        for _ in range(10):
            Jg, Kg = random_refinement(rng, 1.0, rng.integers(1, 4), rng.integers(1, 3))
            f = random_cylinder(rng, Jg)
            worst = max(worst, J.compatibility_check(f, Kg, J.CylinderMarginal(spec, Jg),
                                                     J.CylinderMarginal(spec, Kg)))
    rep.add("projective.compatibility", worst, 1e-10)

    Jg, Kg = random_refinement(rng, 1.0, 2, 2)
    Rg = Kg.union(J.TimeGrid(1.0, (0.975,)))
    f = random_cylinder(rng, Jg)
    two_step = J.extend_cylinder(J.extend_cylinder(f, Kg), Rg)
    direct = J.extend_cylinder(f, Rg)
    rep.add("projective.functoriality", 0.0, 0.0, ok=two_step.fourier.same_as(direct.fourier))

    m = J.CylinderMarginal(QUARTIC, Jg)
    g = random_cylinder(rng, Jg)
    a, b = 0.7 - 0.2j, -1.3 + 0.5j
    combo = J.CylinderFunction(Jg, f.fourier.scaled(a) + g.fourier.scaled(b))
    lin = abs(J.eval_LJ(combo, m) - (a * J.eval_LJ(f, m) + b * J.eval_LJ(g, m)))
    rep.add("projective.linearity", lin, 1e-12)

    value = J.minimal_extension_eval([(f, m), (J.extend_cylinder(f, Kg), J.CylinderMarginal(QUARTIC, Kg))])
    rep.add("projective.well_defined", abs(value - J.eval_LJ(f, m)), 1e-12)
    forged = J.CylinderFunction(Jg, J.AtomicComplexMeasure(
        f.fourier.locations, f.fourier.weights + np.eye(1, len(f.fourier))[0], len(Jg)))
    try:
        J.minimal_extension_eval([(f, m), (forged, m)])
        rejected = False
    except InconsistentRepresentations:
        rejected = True
    rep.add("projective.rejects_forgery", 0.0, 0.0, ok=rejected)


def _path_checks(rep: CheckReport, rng) -> None:
    pf = P.PathFunctionalSpec(QUARTIC, 1.0)
    grid = J.TimeGrid(1.0, (0.25, 0.5))
    one = J.CylinderFunction.constant(grid)
    rep.add("path.unit", abs(P.eval_path_functional(pf, one) - 1), 1e-14)
    violations = 0
    for _ in range(200):
        Jg, _ = random_refinement(rng, 1.0, rng.integers(1, 5), 0)
        f = random_cylinder(rng, Jg, rng.integers(0, 10))
        violations += not P.continuity_bound_check(pf, f)
    rep.add("path.continuity_bound_violations", violations, 0)

    L = 8 * math.pi
    g = K.Grid1D(-L / 2, L / 2, 256)
    u0 = P.InitialDatum.gaussian_like(1.0, 12, L)
    V = P.PotentialSpec.cosine()
    heat_pf = P.PathFunctionalSpec(HEAT, 0.25)
    report = P.fk_convergence_report(heat_pf, u0, V, g, [4, 8, 16, 32, 64])
    rep.add("path.lie_order[heat]", abs(report.order - 1.0), 0.3)
    rep.add("path.lie_final_error[heat]", report.errors[-1], 1e-3)
    free = P.fk_convergence_report(heat_pf, u0, P.PotentialSpec.zero(), g, [4, 8])
    rep.add("path.free_exact", max(free.errors), 1e-10)

    y = 2 * math.pi / L * 3
    single = P.InitialDatum(J.AtomicComplexMeasure.from_atoms([(y, 1.0)]))
    u = P.fk_time_sliced(pf, single, P.PotentialSpec.zero(), 5, g)
    cyl = J.CylinderFunction(J.TimeGrid(1.0, (0.0,)), J.AtomicComplexMeasure.from_atoms([(y, 1.0)]))
    coherent = np.abs(u - np.exp(1j * y * g.points) * P.eval_path_functional(pf, cyl)).max()
    rep.add("path.cylinder_coherence", coherent, 1e-12)


def _oscillatory_checks(rep: CheckReport, rng) -> None:
    worst = {"regularized": 0.0, "growing_box": 0.0}
    for _ in range(6):
        d = int(rng.integers(1, 4))
        Q, _ = np.linalg.qr(rng.normal(size=(d, d)))
        B = O.FiniteRankOperator(d, rng.uniform(-0.8, 0.8, d), Q)
        m = int(rng.integers(1, 4))
        f = O.FresnelIntegrand(d, J.AtomicComplexMeasure(
            rng.uniform(-1, 1, (m, d)), rng.normal(size=m) + 1j * rng.normal(size=m), d),
            rng.uniform(0.5, 1.5))
        rhs = O.parseval_rhs(B, f)
        for method in worst:
            lhs = O.fresnel_quadrature_lhs(B, f, method)
            worst[method] = max(worst[method], abs(lhs - rhs) / abs(rhs))
    for method, err in worst.items():
        rep.add(f"oscillatory.parseval[{method}]", err, 1e-4)

    B2 = O.FiniteRankOperator(1, [2.0])
    unit = O.FresnelIntegrand(1, J.AtomicComplexMeasure.unit(1))
    branch = O.fresnel_quadrature_lhs(B2, unit)
    rep.add("oscillatory.branch[lambda=2]", abs(O.parseval_rhs(B2, unit) - branch), 1e-4)
    for d in (1, 2, 3):
        val = O.fresnel_quadrature_lhs(O.FiniteRankOperator.zero(d),
                                       O.FresnelIntegrand(d, J.AtomicComplexMeasure.unit(d)))
        rep.add(f"oscillatory.normalization[d={d}]", abs(val - 1), 1e-6)

    B3 = O.FiniteRankOperator(3, [0.3, -0.4, 0.2])
    f3 = O.FresnelIntegrand(3, J.AtomicComplexMeasure.from_atoms([((0.5, -0.3, 0.8), 1.0)]))
    chains = [O.coordinate_chain([0, 1, 2]), O.coordinate_chain([2, 1, 0])]
    vals = O.idim_osc_approx(B3, f3, 3, chains)
    rhs = O.parseval_rhs(B3, f3)
    rep.add("oscillatory.sequence_independence",
            max(abs(c[-1] - rhs) for c in vals) / abs(rhs), 1e-3)

    violations = 0
    for _ in range(200):
        d = int(rng.integers(1, 4))
        B = O.FiniteRankOperator(d, rng.uniform(-3, 3, d))
        m = int(rng.integers(0, 5))
        f = O.FresnelIntegrand(d, J.AtomicComplexMeasure(
            rng.uniform(-2, 2, (m, d)), rng.normal(size=m) + 1j * rng.normal(size=m), d))
        bound = abs(O.fredholm_det(B)) ** -0.5 * f.fourier.total_variation()
        violations += abs(O.parseval_rhs(B, f)) > bound * (1 + 1e-12)
    rep.add("oscillatory.continuity_bound_violations", violations, 0)


SECTIONS: dict[str, Callable] = {
    "kernel": _kernel_checks,
    "semigroup": _semigroup_checks,
    "projective": _projective_checks,
    "path": _path_checks,
    "oscillatory": _oscillatory_checks,
}


def run_invariant_suite(seed: int = DEFAULT_SEED, sections=None) -> CheckReport:
    """Run the named sections (all by default) and collect a report."""
    rep = CheckReport(int(seed))
    rng = np.random.default_rng(seed)
    for name in sections or SECTIONS:
        SECTIONS[name](rep, rng)
    return rep
