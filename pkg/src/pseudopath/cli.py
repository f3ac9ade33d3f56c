"""Command-line entry point.

Every subcommand is turned into a :class:`RunConfig` and executed by
:func:`run`.  Building domain objects from the parameters happens before any
numerics, so a bad parameter exits with status 2 and a failure inside a
computation exits with status 1.
"""

from __future__ import annotations

import argparse
import io
import json
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from . import checks
from . import kernel as K
from . import oscillatory as O
from . import path_functional as P
from . import projective as J
from . import semigroup as S
from . import serialization as ser
from .errors import GridTooNarrow, PseudopathError

EXIT_OK, EXIT_COMPUTE, EXIT_CONFIG = 0, 1, 2

FORMATS = {
    "kernel": ("csv", "json"),
    "tvgrowth": ("json",),
    "fk": ("csv", "json"),
    "parseval": ("json",),
    "cylinder": ("json",),
    "check": ("json",),
}


class ConfigError(ValueError):
    """Parameters that cannot be turned into a valid computation."""


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    output_path: str | None = None
    format: str | None = None

    def __post_init__(self):
        if self.command not in FORMATS:
            raise ConfigError(f"command must be one of {sorted(FORMATS)}, got {self.command!r}")
        if not isinstance(self.params, dict):
            raise ConfigError("params must be a JSON object")
        allowed = FORMATS[self.command]
        if self.format is None:
            self.format = allowed[0]
        if self.format not in allowed:
            raise ConfigError(f"format for {self.command!r} must be one of {list(allowed)}, got {self.format!r}")

    @classmethod
    def from_json(cls, obj) -> "RunConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(obj) - {"command", "params", "output_path", "format"}
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if "command" not in obj:
            raise ConfigError("config is missing 'command'")
        return cls(obj["command"], obj.get("params", {}), obj.get("output_path"), obj.get("format"))

    def to_json(self) -> dict:
        return {"command": self.command, "params": self.params,
                "output_path": self.output_path, "format": self.format}


def _require(params: dict, *names):
    missing = [n for n in names if params.get(n) is None]
    if missing:
        raise ConfigError(f"missing required parameter(s): {', '.join(missing)}")


def _load(value):
    """Inline JSON object, or a path to a JSON file."""
    if isinstance(value, (dict, list)):
        return value
    path = Path(value)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {value!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{value!r} is not valid JSON: {exc}") from None


def _float(params, name, default=None) -> float:
    v = params.get(name, default)
    try:
        return float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"parameter {name!r} must be a number, got {v!r}") from None


def _int(params, name, default=None) -> int:
    v = params.get(name, default)
    try:
        f = float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"parameter {name!r} must be an integer, got {v!r}") from None
    if not f.is_integer():
        raise ConfigError(f"parameter {name!r} must be an integer, got {v!r}")
    return int(f)


def _spec(params) -> K.EvolutionSpec:
    _require(params, "p", "alpha")
    return ser.spec_from_params({**params, "p": _int(params, "p")})


def _time(spec, params, name="t") -> float:
    t = _float(params, name)
    if not t >= spec.t_eps:
        raise ConfigError(f"{name}={t} must be at least t_eps={spec.t_eps}")
    return t


def _grid(params, spec=None, t=None) -> K.Grid1D:
    if params.get("grid") is None:
        if spec is None:
            raise ConfigError("missing required parameter(s): grid")
        return K.suggest_grid(spec, t)
    return ser.parse_grid(params["grid"])


def _ladder(params, nslices) -> list[int]:
    raw = params.get("ladder", [4, 8, 16, 32, 64])
    if isinstance(raw, str):
        raw = [s for s in raw.split(",") if s.strip()]
    ladder = sorted({_int({"ladder": v}, "ladder") for v in raw} | {nslices})
    if ladder[0] < 1:
        raise ConfigError(f"slice counts must be positive, got {ladder}")
    return ladder


# Each preparer validates parameters and returns a zero-argument job that
# returns a writer that takes a text stream.


def _prepare_kernel(params, fmt):
    _require(params, "t", "grid")
    spec = _spec(params)
    t = _time(spec, params)
    grid = _grid(params)

    def job():
        k = K.compute_kernel(spec, t, grid)
        if fmt == "csv":
            return lambda fh: K.write_kernel_csv(k, fh)
        payload = {
            "spec": ser.spec_to_json(spec), "t": t, "grid": ser.grid_to_json(grid),
            "tail_mass_bound": k.tail_mass_bound,
            "x": k.x.tolist(),
            "values": [[float(v.real), float(v.imag)] for v in k.values],
        }
        return lambda fh: fh.write(ser.dumps(payload))
    return job


def _prepare_tvgrowth(params, fmt):
    _require(params, "t", "n")
    spec = _spec(params)
    t = _time(spec, params)
    n = _int(params, "n")
    if n < 1:
        raise ConfigError(f"n must be a positive slice count, got {n}")
    if not t / n >= spec.t_eps:
        raise ConfigError(f"slice length t/n={t / n} must be at least t_eps={spec.t_eps}")

    def job():
        # the per-slice variation is evaluated at unit time (self-similarity)
        grid = _grid(params, spec, 1.0)
        rep = S.marginal_variation(spec, t, n, grid)
        payload = {"p": spec.p, "alpha": ser.complex_to_json(spec.alpha), "t": t, "n": n,
                   "per_slice_tv": rep.per_slice_tv, "total": rep.total,
                   "verdict": rep.verdict.value}
        return lambda fh: fh.write(ser.dumps(payload))
    return job


def _prepare_fk(params, fmt):
    _require(params, "t", "nslices", "grid", "u0", "potential")
    spec = _spec(params)
    t = _time(spec, params)
    nslices = _int(params, "nslices")
    if nslices < 1:
        raise ConfigError(f"nslices must be positive, got {nslices}")
    grid = _grid(params)
    try:
        u0 = ser.initial_datum_from_json(_load(params["u0"]))
        V = ser.potential_from_json(_load(params["potential"]))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed atom list: {exc}") from None
    pf = P.PathFunctionalSpec(spec, t)
    ladder = _ladder(params, nslices)
    report_path = params.get("report")
    try:
        P.validate_inputs(u0, V, grid)
    except GridTooNarrow as exc:
        raise ConfigError(str(exc)) from None
    if t / max(ladder) < spec.t_eps:
        raise ConfigError(f"slice length t/{max(ladder)} is below t_eps={spec.t_eps}")

    def job():
        rep = P.fk_convergence_report(pf, u0, V, grid, ladder, keep_solutions=True)
        u = rep.solutions[nslices]
        report = {"p": spec.p, "alpha": ser.complex_to_json(spec.alpha), "t": t,
                  "grid": ser.grid_to_json(grid), "nslices": nslices, **rep.to_dict()}
        if report_path:
            ser.write_json(report, report_path)
        if fmt == "csv":
            return lambda fh: ser.write_complex_csv(grid.points, u, fh)
        payload = {**report, "x": grid.points.tolist(),
                   "values": [[float(v.real), float(v.imag)] for v in u]}
        return lambda fh: fh.write(ser.dumps(payload))
    return job


def _prepare_parseval(params, fmt):
    _require(params, "input")
    obj = _load(params["input"])
    if not isinstance(obj, dict):
        raise ConfigError("parseval input must be a JSON object")
    _require(obj, "d", "atoms")
    try:
        B = ser.operator_from_json(obj)
        f = ser.integrand_from_json(obj)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed parseval input: {exc}") from None
    method = str(params.get("method", "regularized"))
    if method not in ("regularized", "growing_box"):
        raise ConfigError(f"method must be 'regularized' or 'growing_box', got {method!r}")
    if B.dimension > O.MAX_QUADRATURE_DIM:
        raise ConfigError(f"quadrature needs d <= {O.MAX_QUADRATURE_DIM}, got d={B.dimension}")

    def job():
        rhs = O.parseval_rhs(B, f)
        lhs = O.fresnel_quadrature_lhs(B, f, method)
        rel = abs(lhs - rhs) / abs(rhs) if rhs != 0 else abs(lhs - rhs)
        payload = {"lhs": ser.complex_to_json(lhs), "rhs": ser.complex_to_json(rhs),
                   "rel_err": rel, "method": method}
        return lambda fh: fh.write(ser.dumps(payload))
    return job


def _prepare_cylinder(params, fmt):
    _require(params, "input")
    spec = _spec(params)
    try:
        f = ser.cylinder_from_json(_load(params["input"]))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed cylinder function: {exc}") from None
    m = J.CylinderMarginal(spec, f.grid)
    method = str(params.get("method", "fourier"))
    if method not in ("fourier", "quadrature"):
        raise ConfigError(f"method must be 'fourier' or 'quadrature', got {method!r}")

    def job():
        value = J.eval_LJ(f, m, method)
        payload = {"p": spec.p, "alpha": ser.complex_to_json(spec.alpha),
                   "horizon": f.grid.horizon, "times": list(f.grid.times), "method": method,
                   "value": ser.complex_to_json(value), "norm": f.norm,
                   "within_bound": bool(abs(value) <= f.norm * (1 + 1e-12))}
        return lambda fh: fh.write(ser.dumps(payload))
    return job


def _prepare_check(params, fmt):
    seed = _int(params, "seed", checks.DEFAULT_SEED)
    if not 0 <= seed < 2**64:
        raise ConfigError(f"seed must fit in 64 unsigned bits, got {seed}")
    sections = params.get("sections")
    if sections is not None:
        bad = set(sections) - set(checks.SECTIONS)
        if bad:
            raise ConfigError(f"unknown check sections {sorted(bad)}")
    state = {}

    def job():
        rep = checks.run_invariant_suite(seed, sections)
        state["passed"] = rep.passed
        return lambda fh: fh.write(ser.dumps(rep.to_dict()))
    job.state = state
    return job


PREPARERS: dict[str, Callable] = {
    "kernel": _prepare_kernel,
    "tvgrowth": _prepare_tvgrowth,
    "fk": _prepare_fk,
    "parseval": _prepare_parseval,
    "cylinder": _prepare_cylinder,
    "check": _prepare_check,
}


def _emit(writer, output_path):
    if output_path in (None, "-"):
        writer(sys.stdout)
        return
    buf = io.StringIO()
    writer(buf)
    Path(output_path).write_text(buf.getvalue(), encoding="utf-8")


def run(config: RunConfig) -> int:
    """Validate, compute, write.  Returns the process exit status."""
    try:
        job = PREPARERS[config.command](config.params, config.format)
    except (ValueError, KeyError, TypeError) as exc:
        _report("config", exc)
        return EXIT_CONFIG
    try:
        writer = job()
    except PseudopathError as exc:
        _report("computation", exc)
        return EXIT_COMPUTE
    try:
        _emit(writer, config.output_path)
    except OSError as exc:
        _report("output", exc)
        return EXIT_COMPUTE
    state = getattr(job, "state", {})
    if state.get("passed") is False:
        return EXIT_COMPUTE
    return EXIT_OK


def _report(kind: str, exc: BaseException) -> None:
    msg = str(exc) if not isinstance(exc, KeyError) else f"missing key {exc}"
    print(f"pseudopath: {kind} error ({type(exc).__name__}): {msg}", file=sys.stderr)


def _spec_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--p", required=True, help="symbol order (integer >= 2)")
    p.add_argument("--alpha", required=True, help="complex coefficient as re,im")
    p.add_argument("--t-eps", dest="t_eps", default=None, help="smallest admissible time")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=None, help="output file (stdout if omitted)")
    p.add_argument("--format", default=None, choices=("csv", "json"))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pseudopath")
    sub = ap.add_subparsers(dest="command", required=True)

    k = sub.add_parser("kernel", help="sample a fundamental solution on a grid")
    _spec_args(k)
    k.add_argument("--t", required=True)
    k.add_argument("--grid", required=True, help="xmin,xmax,n")
    _common(k)

    tv = sub.add_parser("tvgrowth", help="total variation of n-slice marginals")
    _spec_args(tv)
    tv.add_argument("--t", required=True)
    tv.add_argument("--n", required=True)
    tv.add_argument("--grid", default=None, help="xmin,xmax,n for the slice kernel")
    _common(tv)

    fk = sub.add_parser("fk", help="time-sliced solver with a convergence report")
    _spec_args(fk)
    fk.add_argument("--t", required=True)
    fk.add_argument("--nslices", required=True)
    fk.add_argument("--grid", required=True)
    fk.add_argument("--u0", required=True, help="JSON atom list for the initial datum")
    fk.add_argument("--potential", required=True, help="JSON atom list for the potential")
    fk.add_argument("--ladder", default="4,8,16,32,64")
    fk.add_argument("--report", default=None, help="where to write the convergence report")
    _common(fk)

    pv = sub.add_parser("parseval", help="oscillatory integral by quadrature and in closed form")
    pv.add_argument("--input", required=True)
    pv.add_argument("--method", default="regularized")
    _common(pv)

    cy = sub.add_parser("cylinder", help="evaluate a finite-time functional on a cylinder function")
    _spec_args(cy)
    cy.add_argument("--input", required=True)
    cy.add_argument("--method", default="fourier")
    _common(cy)

    ch = sub.add_parser("check", help="run the invariant suite")
    ch.add_argument("--seed", default=checks.DEFAULT_SEED)
    _common(ch)

    rn = sub.add_parser("run", help="execute a JSON RunConfig")
    rn.add_argument("--config", required=True)
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    if ns.command == "run":
        try:
            obj = json.loads(Path(ns.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {ns.config!r}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {ns.config!r} is not valid JSON: {exc}") from None
        return RunConfig.from_json(obj)
    params = {k: v for k, v in vars(ns).items()
              if k not in ("command", "out", "format") and v is not None}
    return RunConfig(ns.command, params, ns.out, ns.format)


_NUMERIC = re.compile(r"^-[0-9.]")


def _attach_negative_values(argv):
    """``--alpha -1,0`` -> ``--alpha=-1,0`` so argparse does not read a flag."""
    out = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and _NUMERIC.match(tok):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    ns = build_parser().parse_args(_attach_negative_values(argv))
    try:
        config = config_from_args(ns)
    except ConfigError as exc:
        _report("config", exc)
        return EXIT_CONFIG
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
