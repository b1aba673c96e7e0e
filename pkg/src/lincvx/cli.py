"""Command-line driver: criterion suites, curvature probes, disc constructions,
hull queries and the counterexample pipeline.

Exit codes: 0 pass, 1 fail, 2 usage or spec error, 3 inconclusive, 4 I/O.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .curvature import CurvatureError, slice_second_order
from .discs import ConstructionError, chord_curve, chord_inequality_margin, construct_counterexample_discs
from .domains import (BOUNDARY_TOL, DegenerateBoundaryError, DomainError, boundary_point,
                      load_domain, project_to_boundary)
from .duality import (CenteredDiscSystem, DualityError, canonical_system, convex_hull_membership,
                      double_polar_membership)
from .pipeline import CRITERIA, DEFAULT_CRITERIA, DEFECT_BAND, ConfigError, SuiteConfig, counterexample_pipeline, run_suite
from .points import DimensionError, pairs, parse_point
from .report import (EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_IO, EXIT_PASS, EXIT_USAGE, dumps,
                     emit_report, exit_code, write_rows)


def _fail_usage(msg: str):
    click.echo(f"error: {msg}", err=True)
    sys.exit(EXIT_USAGE)


def _fail_io(exc: OSError):
    click.echo(f"error: {exc}", err=True)
    sys.exit(EXIT_IO)


def _domain(path: str):
    try:
        return load_domain(path)
    except OSError as exc:
        _fail_usage(str(exc))
    except DomainError as exc:
        _fail_usage(f"bad domain spec: {exc}")


def _point(text: str, n: int | None = None):
    try:
        return parse_point(text, n)
    except (ValueError, DimensionError) as exc:
        _fail_usage(f"bad point {text!r}: {exc}")


def _write_json(path: str | None, text: str):
    if path is None:
        click.echo(text, nl=False)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        _fail_io(exc)


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Numerical tests of linear convexity for domains in C^2."""


@main.command()
@click.argument("spec", type=click.Path(exists=True, dir_okay=False))
@click.option("--criteria", default=",".join(DEFAULT_CRITERIA), show_default=True,
              help=f"Comma-separated subset of {', '.join(CRITERIA)}.")
@click.option("--samples", type=click.IntRange(min=1), default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--tol", type=float, default=1e-9, show_default=True,
              help="Pass/fail tolerance, multiplied by the domain scale.")
@click.option("--json", "json_path", type=click.Path(dir_okay=False), help="Write the JSON report here.")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), help="Write per-sample margins here.")
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--timing/--no-timing", default=False, help="Include elapsed_ms in the JSON.")
def check(spec, criteria, samples, seed, tol, json_path, csv_path, workers, timing):
    """Run criterion suites on the domain in SPEC."""
    domain = _domain(spec)
    names = tuple(c.strip() for c in criteria.split(",") if c.strip())
    try:
        cfg = SuiteConfig(domain, names, samples, seed, tol, workers)
    except ConfigError as exc:
        _fail_usage(str(exc))
    reports = run_suite(cfg)
    for r in reports:
        click.echo(f"{r.name:<11} {r.verdict:<12} worst_margin={r.worst_margin:.6g}", err=True)
    if json_path is not None:
        _write_json(json_path, dumps(reports, cfg.to_dict(), timing))
    if csv_path is not None:
        try:
            emit_report(reports, "csv", csv_path)
        except OSError as exc:
            _fail_io(exc)
    sys.exit(exit_code(reports))


@main.command()
@click.argument("spec", type=click.Path(exists=True, dir_okay=False))
@click.option("--point", "point_text", required=True, help="Boundary point as x1,y1,x2,y2.")
@click.option("--step", type=float, default=None, help="Slice radius (default 1e-3 * scale).")
def defect(spec, point_text, step):
    """Slice coefficients and tangential defect at a boundary point.

    Points off the boundary are first moved onto it along the ray from the
    anchor.  Exit 1 when the defect is below -1e-4, 3 when within 1e-4.
    """
    domain = _domain(spec)
    z = _point(point_text, domain.n)
    try:
        if abs(float(domain.rho(z))) <= BOUNDARY_TOL * domain.scale:
            p = boundary_point(domain, z)
        else:
            p = project_to_boundary(domain, z)
        s = slice_second_order(domain, p, step=step)
    except (DegenerateBoundaryError, CurvatureError, DomainError, DimensionError) as exc:
        _fail_usage(str(exc))
    doc = {"point": pairs(p.point), "a22": [s.a22.real, s.a22.imag], "b22": s.b22,
           "defect": s.defect, "normalization": s.normalization}
    click.echo(json.dumps(doc, indent=2, sort_keys=True))
    band = DEFECT_BAND / domain.scale
    sys.exit(EXIT_FAIL if s.defect < -band else EXIT_INCONCLUSIVE if s.defect <= band else EXIT_PASS)


@main.command()
@click.option("--c", "c", type=float, required=True)
@click.option("--delta", type=float, required=True)
@click.option("--samples", type=click.IntRange(min=8), default=1024, show_default=True)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False),
              help="Write theta, x, rho_c/delta and the half quadratic along the rim of D1.")
def discs(c, delta, samples, csv_path):
    """The two counterexample discs for constants C and DELTA."""
    try:
        margins = chord_inequality_margin(c, delta, samples)
    except ConstructionError as exc:
        _fail_usage(str(exc))
    doc = {"c": c, "delta": delta, "disc_margin": margins.disc_margin,
           "discriminant": margins.discriminant, "quadratic_max": margins.quadratic_max,
           "valid": margins.valid}
    if margins.discriminant < 0:
        d1, d2 = construct_counterexample_discs(c, delta)
        doc["discs"] = [d1.to_dict(), d2.to_dict()]
    click.echo(json.dumps(doc, indent=2, sort_keys=True))
    if csv_path is not None:
        try:
            write_rows(csv_path, ["theta", "x", "rho_c_over_delta", "half_quadratic"],
                       chord_curve(c, delta, samples))
        except OSError as exc:
            _fail_io(exc)
    sys.exit(EXIT_PASS if margins.valid else EXIT_FAIL)


@main.command()
@click.option("--system", "system_spec", required=True,
              help="Disc system JSON file, or 'canonical'.")
@click.option("--query", required=True, help="Point as x1,y1,x2,y2.")
def hull(system_spec, query):
    """Convex hull and double polar membership of a point."""
    if system_spec == "canonical":
        system = canonical_system()
    else:
        try:
            system = CenteredDiscSystem.from_dict(json.loads(Path(system_spec).read_text()))
        except OSError as exc:
            _fail_usage(str(exc))
        except (ValueError, KeyError, TypeError) as exc:
            _fail_usage(f"bad disc system: {exc}")
    z = _point(query, len(system.center))
    try:
        in_hull = convex_hull_membership(system, z)
    except DualityError as exc:
        _fail_usage(str(exc))
    inside, value = double_polar_membership(system, z)
    doc = {"query": pairs(z), "in_convex_hull": in_hull, "in_double_polar": inside,
           "double_polar_value": value if np.isfinite(value) else None}
    click.echo(json.dumps(doc, indent=2, sort_keys=True))
    sys.exit(EXIT_PASS)


@main.command()
@click.argument("spec", type=click.Path(exists=True, dir_okay=False))
@click.option("--samples", type=click.IntRange(min=1), default=2000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--json", "json_path", type=click.Path(dir_okay=False),
              help="Write the report here instead of stdout.")
def pipeline(spec, samples, seed, json_path):
    """Defect scan, normalization, counterexample discs and hull test."""
    domain = _domain(spec)
    result = counterexample_pipeline(domain, samples, seed)
    config = {"domain": domain.to_dict(), "samples": samples, "seed": seed}
    text = json.dumps(result.document(config), indent=2, sort_keys=True, allow_nan=False) + "\n"
    _write_json(json_path, text)
    click.echo(f"status: {result.status}", err=True)
    sys.exit(result.exit_code)


if __name__ == "__main__":  # pragma: no cover
    main()
