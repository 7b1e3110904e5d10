"""Command-line front door: expansions, verification suites, and the
integrated-functional variations, with machine-readable JSON reports.

Report JSON (schema 1) goes to standard output (or ``--out``); a short
human summary goes to standard error.  Exit codes: 0 all gated checks pass,
1 gated failure, 2 configuration error, 3 numeric-domain error.
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .appendix import crosscheck_appendix, summarize_discrepancies
from .connes import (a4_density_series, bimetric_invariant_grid,
                     conformal_covariance_residual,
                     gradient_pairing_series, hessian_pairing_series,
                     laplacian_of_pairing_series, laplacian_product_series)
from .errors import ConfigError, NumericDomainError
from .exprs import parse_expr
from .functional import QuadratureGrid, hochschild_residual, wres_variations
from .geometry import (christoffel_series, inverse_metric_series,
                       perturbation_ratio_matrix, scalar_curvature_series,
                       volume_coefficients_closed_form, volume_density_series)
from .operators import (CONVENTIONS, conformal_laplacian_series_apply,
                        intertwining_residuals, laplacian_series_apply)
from .oracle import extract_series_fd, series_evaluator
from .scene import builtin_scene, builtin_scene_names, load_scene

SUITES = ("covariance", "invariants", "intertwining", "oracle", "appendix",
          "hochschild")
EXPAND_QUANTITIES = ("r", "gamma", "ginv", "lap", "clap", "t", "a", "b", "d",
                     "a4", "c")
DEFAULT_TOLERANCES = {
    "covariance": 1e-7,
    "invariants": 1e-7,
    "intertwining": 1e-8,
    "oracle": 1e-6,
    "integral": 1e-5,
}
_COVARIANCE_FACTORS = ("1.3 + 0.2*sin(x1)", "exp(0.15*cos(x2))",
                       "1.5 + 0.25*cos(x3)*sin(x4)")


# ---------------------------------------------------------------------------
# report plumbing
# ---------------------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if np.isfinite(v) else {"nonfinite": repr(v)}
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


@dataclass
class CheckRecord:
    name: str
    values: dict
    residual: float | None
    tolerance: float | None
    status: str   # "pass" | "fail" | "info"

    def as_json(self):
        return _jsonable({"name": self.name, "values": self.values,
                          "residual": self.residual,
                          "tolerance": self.tolerance,
                          "status": self.status})


@dataclass
class VerificationReport:
    command: str
    scene_id: str
    scene_digest: str
    parameters: dict
    checks: list = field(default_factory=list)
    timing_seconds: float = 0.0

    def gate(self, name, residual, tolerance, values=None):
        status = "pass" if residual <= tolerance else "fail"
        self.checks.append(CheckRecord(name, values or {}, float(residual),
                                       float(tolerance), status))

    def info(self, name, values, residual=None, tolerance=None):
        self.checks.append(CheckRecord(name, values, residual, tolerance,
                                       "info"))

    @property
    def passed(self):
        return all(c.status != "fail" for c in self.checks)

    def as_json(self):
        return {
            "schema": 1,
            "tool_version": __version__,
            "command": self.command,
            "scene": {"id": self.scene_id, "digest": self.scene_digest},
            "parameters": _jsonable(self.parameters),
            "checks": [c.as_json() for c in self.checks],
            "passed": self.passed,
            "timing_seconds": self.timing_seconds,
        }


def _emit(report: VerificationReport, out_path):
    payload = json.dumps(report.as_json(), indent=2, sort_keys=True)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)
    n_fail = sum(1 for c in report.checks if c.status == "fail")
    n_pass = sum(1 for c in report.checks if c.status == "pass")
    n_info = sum(1 for c in report.checks if c.status == "info")
    print(f"[{report.command}] scene={report.scene_id} "
          f"pass={n_pass} fail={n_fail} info={n_info} "
          f"({report.timing_seconds:.2f}s)", file=sys.stderr)
    for c in report.checks:
        if c.status == "fail":
            print(f"  FAIL {c.name}: residual={c.residual:.3e} "
                  f"tol={c.tolerance:.1e}", file=sys.stderr)


# ---------------------------------------------------------------------------
# shared argument handling
# ---------------------------------------------------------------------------

def _load_scene_arg(spec_str, seed):
    if spec_str in builtin_scene_names():
        return builtin_scene(spec_str, seed=seed), spec_str
    try:
        scene = load_scene(spec_str)
    except FileNotFoundError as exc:
        raise ConfigError(f"scene file not found: {spec_str}") from exc
    return scene, spec_str


def _parse_point(text, dim=4):
    try:
        coords = tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad --point value {text!r}") from exc
    if len(coords) != dim:
        raise ConfigError(f"--point needs {dim} comma-separated values")
    return coords


def _parse_tols(pairs):
    tols = dict(DEFAULT_TOLERANCES)
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(f"--tol expects NAME=VALUE, got {pair!r}")
        name, _, value = pair.partition("=")
        if name not in tols:
            raise ConfigError(f"unknown tolerance {name!r}; "
                              f"expected one of {sorted(tols)}")
        tols[name] = float(value)
    return tols


def _sample_points(seed, count=5, scale=0.8):
    rng = np.random.default_rng(seed)
    return [tuple(rng.uniform(-scale, scale, 4))
            for _ in range(count)]


def _series_values(series):
    return [np.asarray(c).tolist() for c in series]


# ---------------------------------------------------------------------------
# expand
# ---------------------------------------------------------------------------

def _expand_quantity(scene, point, order, name):
    f1, f2 = scene.probe("f1"), scene.probe("f2")
    if name == "r":
        s = scalar_curvature_series(scene, point, order)
        return {"series": _series_values(s.map(lambda j: j.value))}
    if name == "gamma":
        s = christoffel_series(scene, point, order)
        return {"series": _series_values(s.map(lambda j: j.value))}
    if name == "ginv":
        return {"series": _series_values(
            inverse_metric_series(scene, point, order).map(
                lambda j: j.value))}
    if name == "lap":
        return {"series": _series_values(
            laplacian_series_apply(scene, point, f1, order).values())}
    if name == "clap":
        return {"series": _series_values(
            conformal_laplacian_series_apply(scene, point, f1,
                                             order).values())}
    if name in ("t", "a", "b", "d"):
        fn = {"t": gradient_pairing_series, "a": laplacian_of_pairing_series,
              "b": hessian_pairing_series,
              "d": laplacian_product_series}[name]
        return {"series": _series_values(fn(scene, point, f1, f2, order))}
    if name == "a4":
        a4 = a4_density_series(scene, point, f1, f2, max(order, 2))
        return {"series": _series_values(a4.values()),
                "components": {str(k): _jsonable(a4.components(k))
                               for k in range(max(order, 2) + 1)}}
    if name == "c":
        G = perturbation_ratio_matrix(scene, point)
        c1, c2 = volume_coefficients_closed_form(G)
        return {"c1": float(c1), "c2": float(c2),
                "volume_ratio_series": _series_values(
                    volume_density_series(scene, point, max(order, 2)))}
    raise ConfigError(f"unknown quantity {name!r}; "
                      f"expected one of {EXPAND_QUANTITIES}")


def cmd_expand(args):
    scene, scene_id = _load_scene_arg(args.scene, args.seed)
    point = _parse_point(args.point)
    order = args.order
    report = VerificationReport(
        command="expand", scene_id=scene_id, scene_digest=scene.digest(),
        parameters={"point": list(point), "order": order,
                    "quantities": args.quantity, "seed": args.seed,
                    "threads": args.threads})
    for name in args.quantity or ["r"]:
        report.info(f"expand/{name}",
                    _expand_quantity(scene, point, order, name))
    return report


# ---------------------------------------------------------------------------
# verify suites
# ---------------------------------------------------------------------------

def _suite_covariance(scene, report, points, tols):
    for fi, factor in enumerate(_COVARIANCE_FACTORS):
        scn = scene.with_conformal_factor(parse_expr(factor))
        for pi, point in enumerate(points):
            f1, f2 = scn.probe("f1"), scn.probe("f2")
            base = a4_density_series(scn, point, f1, f2, 2).values()
            scale = max(max(abs(float(v)) for v in base), 1.0)
            res = conformal_covariance_residual(scn, point, f1, f2, 2)
            report.gate(f"covariance/factor{fi}/point{pi}",
                        max(res) / scale, tols["covariance"],
                        {"residuals": res, "factor": factor,
                         "point": list(point)})


def _suite_invariants(scene, report, points, tols):
    for fi, factor in enumerate(_COVARIANCE_FACTORS):
        scn = scene.with_conformal_factor(parse_expr(factor))
        scaled = scn.scaled_by(scn.conformal_factor)
        for pi, point in enumerate(points):
            f1, f2 = scn.probe("f1"), scn.probe("f2")
            base = bimetric_invariant_grid(scn, point, f1, f2, 2).entries
            resc = bimetric_invariant_grid(scaled, point, f1, f2, 2).entries
            rel = np.max(np.abs(resc - base) / np.maximum(np.abs(base), 1.0))
            report.gate(f"invariants/factor{fi}/point{pi}", float(rel),
                        tols["invariants"],
                        {"grid": base.tolist(), "factor": factor,
                         "point": list(point)})


def _suite_intertwining(scene, report, points, tols):
    factor = parse_expr(_COVARIANCE_FACTORS[0])
    scn = scene.with_conformal_factor(factor)
    u = scn.probe("f1")
    for pi, point in enumerate(points):
        per_conv = {conv: intertwining_residuals(scn, point, u, conv, 2)
                    for conv in CONVENTIONS}
        best = min(per_conv, key=lambda cv: per_conv[cv][0])
        report.gate(f"intertwining/order0/point{pi}", per_conv[best][0],
                    tols["intertwining"],
                    {"convention": best, "point": list(point)})
        report.info(f"intertwining/higher/point{pi}",
                    {"residuals_by_convention": per_conv,
                     "minimizing_convention": best, "point": list(point)})


_ORACLE_QUANTITIES = ("r", "lap", "clap", "t", "a", "b", "d", "a4",
                      "volratio")


def _engine_series(scene, quantity, point):
    f1, f2 = scene.probe("f1"), scene.probe("f2")
    if quantity == "r":
        return [float(c.value)
                for c in scalar_curvature_series(scene, point, 2)]
    if quantity == "lap":
        return [float(c) for c in
                laplacian_series_apply(scene, point, f1, 2).values()]
    if quantity == "clap":
        return [float(c) for c in
                conformal_laplacian_series_apply(scene, point, f1,
                                                 2).values()]
    if quantity == "volratio":
        return [float(c) for c in volume_density_series(scene, point, 2)]
    if quantity == "a4":
        return [float(c) for c in
                a4_density_series(scene, point, f1, f2, 2).values()]
    fn = {"t": gradient_pairing_series, "a": laplacian_of_pairing_series,
          "b": hessian_pairing_series, "d": laplacian_product_series}[
              quantity]
    return [float(c) for c in fn(scene, point, f1, f2, 2)]


def _suite_oracle(scene, report, points, tols):
    f1, f2 = scene.probe("f1"), scene.probe("f2")
    probes_for = {"lap": (f1,), "clap": (f1,), "t": (f1, f2), "a": (f1, f2),
                  "b": (f1, f2), "d": (f1, f2), "a4": (f1, f2)}
    for pi, point in enumerate(points):
        for quantity in _ORACLE_QUANTITIES:
            engine = _engine_series(scene, quantity, point)
            fd = extract_series_fd(
                series_evaluator(scene, quantity, point,
                                 probes_for.get(quantity)), order=2)
            scale = max(max(abs(v) for v in engine), 1.0)
            gap = max(abs(e - c)
                      for e, c in zip(engine, fd.coefficients))
            report.gate(f"oracle/{quantity}/point{pi}", gap / scale,
                        tols["oracle"],
                        {"engine": engine,
                         "oracle": list(fd.coefficients),
                         "oracle_error_estimates": list(fd.errors),
                         "point": list(point)})


def _suite_appendix(scene, report, scene_id, points):
    records = crosscheck_appendix([(scene_id, scene)], points)
    report.info("appendix/summary", summarize_discrepancies(records))
    for rec in records:
        report.info(f"appendix/{rec.coefficient}", rec.as_json())


def _suite_hochschild(scene, report, seed, grid_m):
    rng = np.random.default_rng(seed)
    grid = QuadratureGrid(m=grid_m)
    for qi in range(5):
        exprs = []
        for _ in range(4):
            a, b, c = rng.uniform(0.2, 0.6, 3)
            i, j = rng.integers(1, 5, 2)
            exprs.append(parse_expr(
                f"1 + {a:.6f}*sin(x{i}) + {b:.6f}*cos(x{j}) "
                f"- {c:.6f}*sin(x{i})*cos(x{j})"))
        residual, error_bar = hochschild_residual(scene, grid, *exprs)
        report.info(f"hochschild/quadruple{qi}",
                    {"residual": residual, "refinement_error_bar": error_bar,
                     "within_error_bar": bool(abs(residual) <= error_bar)})


def cmd_verify(args):
    scene, scene_id = _load_scene_arg(args.scene, args.seed)
    tols = _parse_tols(args.tol)
    seed = args.seed if args.seed is not None else secrets.randbits(32)
    if args.seed is None:
        print(f"[verify] drew seed {seed}", file=sys.stderr)
    points = _sample_points(seed)
    report = VerificationReport(
        command=f"verify/{args.suite}", scene_id=scene_id,
        scene_digest=scene.digest(),
        parameters={"suite": args.suite, "seed": seed, "tolerances": tols,
                    "grid": args.grid, "threads": args.threads})
    if args.suite == "covariance":
        _suite_covariance(scene, report, points, tols)
    elif args.suite == "invariants":
        _suite_invariants(scene, report, points, tols)
    elif args.suite == "intertwining":
        _suite_intertwining(scene, report, points, tols)
    elif args.suite == "oracle":
        _suite_oracle(scene, report, points, tols)
    elif args.suite == "appendix":
        _suite_appendix(scene, report, scene_id, points[:2])
    elif args.suite == "hochschild":
        _suite_hochschild(scene, report, seed, args.grid or 8)
    else:
        raise ConfigError(f"unknown suite {args.suite!r}; "
                          f"expected one of {SUITES}")
    return report


# ---------------------------------------------------------------------------
# wres
# ---------------------------------------------------------------------------

def cmd_wres(args):
    scene, scene_id = _load_scene_arg(args.scene, args.seed)
    m = args.grid or 16
    grid = QuadratureGrid(m=m)
    f0, f1, f2 = (scene.probe(k) for k in ("f0", "f1", "f2"))
    tols = _parse_tols(args.tol)
    report = VerificationReport(
        command="wres", scene_id=scene_id, scene_digest=scene.digest(),
        parameters={"grid": m, "seed": args.seed, "tolerances": tols,
                    "threads": args.threads})
    coarse = wres_variations(scene, grid, f0, f1, f2)
    fine = wres_variations(scene, grid.refined(), f0, f1, f2)
    refinement = max(abs(fine.value - coarse.value),
                     abs(fine.first_variation - coarse.first_variation),
                     abs(fine.second_variation - coarse.second_variation))
    fd = extract_series_fd(
        series_evaluator(scene, "wres", None, (f0, f1, f2), grid), order=2)
    oracle_first = fd.coefficients[1]
    oracle_second = 2.0 * fd.coefficients[2]
    scale = max(abs(coarse.value), 1.0)
    gap = max(abs(coarse.first_variation - oracle_first),
              abs(coarse.second_variation - oracle_second))
    report.gate("wres/fd_oracle", gap / scale, tols["integral"],
                {"value": coarse.value,
                 "first_variation": coarse.first_variation,
                 "second_variation": coarse.second_variation,
                 "oracle_first": oracle_first,
                 "oracle_second": oracle_second,
                 "oracle_error_estimates": list(fd.errors)})
    report.info("wres/refinement",
                {"m_coarse": m, "m_fine": 2 * m, "delta": refinement,
                 "fine_value": fine.value})
    return report


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="bimetric",
        description="Perturbation-series expansions and verification "
                    "campaigns for metric pairs gbar + eps*gper.")
    sub = parser.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--scene", required=True,
                       help="builtin scene name or scene JSON path "
                            f"(builtins: {', '.join(builtin_scene_names())})")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--grid", type=int, default=None,
                       help="quadrature subdivisions per axis")
        p.add_argument("--tol", action="append", metavar="NAME=VAL",
                       help=f"override a tolerance {sorted(DEFAULT_TOLERANCES)}")
        p.add_argument("--out", default=None, help="write report JSON here")
        p.add_argument("--threads", type=int, default=1,
                       help="recorded in the report; evaluation is "
                            "vectorized and deterministic")

    p_expand = sub.add_parser("expand", help="print perturbation series")
    common(p_expand)
    p_expand.add_argument("--point", required=True, metavar="CSV")
    p_expand.add_argument("--order", type=int, default=2)
    p_expand.add_argument("--quantity", action="append",
                          choices=EXPAND_QUANTITIES)
    p_expand.set_defaults(fn=cmd_expand)

    p_verify = sub.add_parser("verify", help="run a verification suite")
    common(p_verify)
    p_verify.add_argument("--suite", required=True, choices=SUITES)
    p_verify.set_defaults(fn=cmd_verify)

    p_wres = sub.add_parser("wres", help="integrated-functional variations")
    common(p_wres)
    p_wres.set_defaults(fn=cmd_wres)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    start = time.perf_counter()
    try:
        report = args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericDomainError as exc:
        print(f"numeric domain error: {exc}", file=sys.stderr)
        return 3
    report.timing_seconds = time.perf_counter() - start
    _emit(report, args.out)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
