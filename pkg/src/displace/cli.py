"""Command-line interface.

Exit codes follow one convention everywhere: 0 success, 1 bad input or
computation error, 2 a check failed or a verification report exceeded
its tolerance, 3 checks were inconclusive but none failed.  Reports are
emitted as deterministic JSON (17 significant digits, fixed key order),
solutions as CSV or JSON.  Set DISPLACE_LOG=debug|info|warning to log
progress to stderr.
"""

from __future__ import annotations

import json
import logging
import os
import random
import sys
from pathlib import Path
from typing import Optional

import click
import numpy as np

from . import calculus, displacement, solver
from .displacement import (BUILTIN_NAMES, DisplacementError, gauge_from_smooth,
                           make_builtin, spec_from_dict)
from .expr import ExprError, as_function, parse
from .gauge import Gauge, GaugeError
from .serialize import csv_lines, dumps

log = logging.getLogger("displace")

_ERRORS = (ExprError, GaugeError, DisplacementError, calculus.CalculusError,
           solver.SolverError, OSError, ValueError, KeyError,
           json.JSONDecodeError)


def _fail(exc: BaseException) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


def _load_spec(spec_path: Optional[str], builtin: Optional[str]):
    if (spec_path is None) == (builtin is None):
        raise DisplacementError("provide exactly one of --spec or --builtin")
    if builtin is not None:
        log.info("using builtin spec %s", builtin)
        return make_builtin(builtin)
    log.info("loading spec from %s", spec_path)
    with open(spec_path, "r", encoding="utf-8") as fh:
        return spec_from_dict(json.load(fh))


def _load_gauge(ref: str) -> Gauge:
    if ref == "identity":
        return Gauge.identity()
    if ref.startswith("extract:"):
        name = ref.split(":", 1)[1]
        log.info("extracting gauge from builtin %s", name)
        return gauge_from_smooth(make_builtin(name))
    log.info("loading gauge from %s", ref)
    with open(ref, "r", encoding="utf-8") as fh:
        return Gauge.from_dict(json.load(fh))


def _deliver(text: str, out: Optional[str]) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


def _seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed % (2 ** 32))


class _Cli(click.Group):
    """Group that reports command-line mistakes with exit code 1.

    Click's default usage-error code is 2, which this interface reserves
    for failed checks, so parsing problems are remapped onto the bad
    input code.
    """

    def main(self, *args, **kwargs):  # noqa: D102 (click's signature)
        kwargs["standalone_mode"] = False
        try:
            return super().main(*args, **kwargs)
        except click.exceptions.Abort:
            click.echo("aborted", err=True)
            sys.exit(1)
        except click.ClickException as exc:
            exc.show()
            sys.exit(1)


@click.group(cls=_Cli)
def main() -> None:
    """Displacement calculus: axiom checks, gauges, derivatives, solvers."""
    level = os.environ.get("DISPLACE_LOG", "").upper()
    if level in ("DEBUG", "INFO", "WARNING", "ERROR"):
        logging.basicConfig(stream=sys.stderr, level=getattr(logging, level),
                            format="%(name)s %(levelname)s %(message)s")


_CHECK_ORDER = ("h1", "h2usc", "h2prime", "h3", "h5", "d2")
_DEFAULT_CHECKS = {
    "smooth": ("h1", "h2usc", "h2prime", "h3", "h5", "d2"),
    "stieltjes": ("h1", "h2usc", "h2prime", "h3", "h5"),
    "graph": ("h1", "h2prime"),
    "angular": ("h1", "h2prime"),
}


@main.command()
@click.option("--spec", "spec_path", type=click.Path(exists=True),
              help="JSON displacement spec.")
@click.option("--builtin", type=click.Choice(BUILTIN_NAMES),
              help="Named example space.")
@click.option("--which", default=None,
              help="Comma-separated subset of h1,h2usc,h2prime,h3,h5,d2.")
@click.option("--samples", default=None, type=int,
              help="Sample grid size for the hypothesis checks.")
@click.option("--grid", default=64, type=int, show_default=True,
              help="Lattice size per axis for the d2 check.")
@click.option("--tol", default=None, type=float,
              help="Override the check tolerance.")
@click.option("--phi", default=None,
              help="Rescaling function of r for h2prime (default identity).")
@click.option("--shrink-levels", default=24, type=int, show_default=True,
              help="Shrink levels for the h2usc check.")
@click.option("--seed", default=0, type=int, show_default=True,
              help="Seed for sampled procedures.")
@click.option("--out", default=None, type=click.Path(),
              help="Write reports to a file instead of stdout.")
def check(spec_path, builtin, which, samples, grid, tol, phi, shrink_levels,
          seed, out):
    """Run hypothesis checks; one JSON report per line.

    Exits 0 when every check passes, 2 when any fails, 3 when none fail
    but at least one is inconclusive.
    """
    try:
        _seed_everything(seed)
        spec = _load_spec(spec_path, builtin)
        if which:
            names = [w.strip() for w in which.split(",") if w.strip()]
            for name in names:
                if name not in _CHECK_ORDER:
                    raise DisplacementError(
                        f"unknown check {name!r}; choose from "
                        + ",".join(_CHECK_ORDER))
        else:
            names = list(_DEFAULT_CHECKS[spec.kind])
        phi_expr = parse(phi, {"r"}) if phi else None

        reports = []
        for name in names:
            log.info("running %s", name)
            if name == "h1":
                kwargs = {"samples": samples or 101}
                if tol is not None:
                    kwargs["tol"] = tol
                reports.append(displacement.check_h1(spec, **kwargs))
            elif name == "h2usc":
                kwargs = {"samples": samples or 11,
                          "shrink_levels": shrink_levels}
                if tol is not None:
                    kwargs["tol"] = tol
                reports.append(displacement.check_h2_usc(spec, **kwargs))
            elif name == "h2prime":
                kwargs = {"phi": phi_expr, "samples": samples or 16}
                if tol is not None:
                    kwargs["tol"] = tol
                reports.append(displacement.check_h2prime(spec, **kwargs))
            elif name == "h3":
                kwargs = {"samples": samples or 21}
                if tol is not None:
                    kwargs["tol"] = tol
                reports.append(displacement.check_h3(spec, **kwargs))
            elif name == "h5":
                kwargs = {"samples": samples or 21}
                if tol is not None:
                    kwargs["tol"] = tol
                reports.append(displacement.check_h5(spec, **kwargs))
            else:
                kwargs = {"grid": grid}
                if tol is not None:
                    kwargs["tol"] = tol
                reports.append(displacement.check_d2_positive(spec, **kwargs))
        text = "\n".join(dumps(r.to_dict()) for r in reports)
        _deliver(text, out)
    except _ERRORS as exc:
        _fail(exc)
    verdicts = [r.verdict for r in reports]
    if "fail" in verdicts:
        sys.exit(2)
    if "inconclusive" in verdicts:
        sys.exit(3)
    sys.exit(0)


@main.command()
@click.option("--spec", "spec_path", type=click.Path(exists=True),
              help="JSON smooth spec to extract a gauge from.")
@click.option("--builtin", type=click.Choice(BUILTIN_NAMES),
              help="Builtin smooth spec to extract a gauge from.")
@click.option("--gauge", "gauge_ref", default=None,
              help="Load an existing gauge: path, extract:NAME, or identity.")
@click.option("--grid", default=101, type=int, show_default=True,
              help="Number of points in the sampled (t, g) table.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
              default="json", show_default=True)
@click.option("--out", default=None, type=click.Path(),
              help="Write the gauge JSON here.")
@click.option("--table", default=None, type=click.Path(),
              help="Write the sampled (t, g) CSV here.")
def gauge(spec_path, builtin, gauge_ref, grid, fmt, out, table):
    """Extract or load a gauge; emit its JSON and a sampled value table."""
    try:
        if gauge_ref is not None:
            g = _load_gauge(gauge_ref)
        else:
            spec = _load_spec(spec_path, builtin)
            g = gauge_from_smooth(spec)
        try:
            payload = g.to_dict()
        except GaugeError:
            payload = {
                "domain": [g.domain[0], g.domain[1]],
                "density": None,
                "jumps": [[t, s] for t, s in g.jumps],
                "flats": [[lo, hi] for lo, hi in g.flats],
            }
        a, b = g.domain
        rows = [(float(t), g(float(t))) for t in np.linspace(a, b, grid)]
        table_text = csv_lines(("t", "g"), rows)
        if out:
            _deliver(dumps(payload), out)
        if table:
            _deliver(table_text, table)
        if not out and not table:
            _deliver(table_text if fmt == "csv" else dumps(payload), None)
    except _ERRORS as exc:
        _fail(exc)
    sys.exit(0)


@main.command()
@click.option("--spec", "spec_path", type=click.Path(exists=True))
@click.option("--builtin", type=click.Choice(BUILTIN_NAMES))
@click.option("--x", required=True, type=float, help="Ball center.")
@click.option("--r", required=True, type=float, help="Ball radius.")
@click.option("--tol", default=1e-10, type=float, show_default=True,
              help="Bisection tolerance for the endpoints.")
@click.option("--out", default=None, type=click.Path())
def ball(spec_path, builtin, x, r, tol, out):
    """Displacement ball around x of radius r, as an interval."""
    try:
        spec = _load_spec(spec_path, builtin)
        result = displacement.delta_ball(spec, x, r, tol=tol)
        _deliver(dumps(result.to_dict()), out)
    except _ERRORS as exc:
        _fail(exc)
    sys.exit(0)


@main.command()
@click.option("--f", "f_src", required=True, help="Function of t.")
@click.option("--gauge", "gauge_ref", required=True,
              help="Gauge: path, extract:NAME, or identity.")
@click.option("--x", required=True, type=float)
@click.option("--shrink-levels", default=calculus.DEFAULT_SHRINK_LEVELS,
              type=int, show_default=True)
@click.option("--out", default=None, type=click.Path())
def derive(f_src, gauge_ref, x, shrink_levels, out):
    """Derivative of f against the gauge at x."""
    try:
        g = _load_gauge(gauge_ref)
        f = as_function(parse(f_src, {"t"}), "t")
        result = calculus.delta_derivative(f, g, x, shrink_levels=shrink_levels)
        _deliver(dumps(result.to_dict()), out)
    except _ERRORS as exc:
        _fail(exc)
    sys.exit(0)


@main.command()
@click.option("--f", "f_src", required=True, help="Integrand, function of t.")
@click.option("--gauge", "gauge_ref", required=True)
@click.option("--upper", default=None, type=float,
              help="Upper limit (default: right end of the domain); the "
                   "atom there is excluded.")
@click.option("--out", default=None, type=click.Path())
def integrate(f_src, gauge_ref, upper, out):
    """Half-open Stieltjes integral of f from the left end to upper."""
    try:
        g = _load_gauge(gauge_ref)
        f = as_function(parse(f_src, {"t"}), "t")
        u = g.domain[1] if upper is None else upper
        value = calculus.stieltjes_integral(f, g, u)
        _deliver(dumps({"upper": float(u), "value": value}), out)
    except _ERRORS as exc:
        _fail(exc)
    sys.exit(0)


@main.command("path-integrate")
@click.option("--f", "f_src", required=True, help="Integrand, function of t.")
@click.option("--alpha", "alpha_src", required=True,
              help="Base-point path, function of t.")
@click.option("--spec", "spec_path", type=click.Path(exists=True))
@click.option("--builtin", type=click.Choice(BUILTIN_NAMES))
@click.option("--upper", default=None, type=float)
@click.option("--quad-tol", default=1e-10, type=float, show_default=True)
@click.option("--out", default=None, type=click.Path())
def path_integrate(f_src, alpha_src, spec_path, builtin, upper, quad_tol, out):
    """Integral of f against the moving-base-point measure of a smooth space."""
    try:
        spec = _load_spec(spec_path, builtin)
        f = as_function(parse(f_src, {"t"}), "t")
        alpha = as_function(parse(alpha_src, {"t"}), "t")
        path = calculus.MeasurePath(alpha=alpha, description=alpha_src)
        u = spec.domain[1] if upper is None else upper
        value = calculus.path_integral(f, path, spec, u, quad_tol=quad_tol)
        _deliver(dumps({"upper": float(u), "value": value}), out)
    except _ERRORS as exc:
        _fail(exc)
    sys.exit(0)


@main.command()
@click.option("--f", "f_src", required=True, help="Integrand, function of t.")
@click.option("--gauge", "gauge_ref", required=True)
@click.option("--grid", default=101, type=int, show_default=True)
@click.option("--shrink-levels", default=calculus.DEFAULT_SHRINK_LEVELS,
              type=int, show_default=True)
@click.option("--tol", default=1e-4, type=float, show_default=True,
              help="Maximum allowed derivative-vs-integrand error.")
@click.option("--out", default=None, type=click.Path())
def ftc(f_src, gauge_ref, grid, shrink_levels, tol, out):
    """Differentiate the running integral of f and compare against f.

    Exits 2 when the maximum error exceeds --tol or any grid point fails
    to have a derivative.
    """
    try:
        g = _load_gauge(gauge_ref)
        f = as_function(parse(f_src, {"t"}), "t")
        report = calculus.ftc_forward_check(f, g, grid=grid,
                                            shrink_levels=shrink_levels)
        _deliver(dumps(report.to_dict()), out)
    except _ERRORS as exc:
        _fail(exc)
    sys.exit(2 if (report.max_error > tol or report.violations) else 0)


@main.command()
@click.option("--f", "f_src", required=True,
              help="Function of t to differentiate and rebuild.")
@click.option("--gauge", "gauge_ref", required=True)
@click.option("--grid", default=101, type=int, show_default=True)
@click.option("--shrink-levels", default=calculus.DEFAULT_SHRINK_LEVELS,
              type=int, show_default=True)
@click.option("--tol", default=1e-6, type=float, show_default=True,
              help="Maximum allowed reconstruction deviation.")
@click.option("--out", default=None, type=click.Path())
def ftc2(f_src, gauge_ref, grid, shrink_levels, tol, out):
    """Differentiate f against the gauge and rebuild it from the derivative.

    Exits 2 when the reconstruction deviates beyond --tol or the
    derivative fails to exist somewhere.
    """
    try:
        g = _load_gauge(gauge_ref)
        f = as_function(parse(f_src, {"t"}), "t")
        report = calculus.ftc2_check(f, g, grid=grid,
                                     shrink_levels=shrink_levels)
        _deliver(dumps(report.to_dict()), out)
    except _ERRORS as exc:
        _fail(exc)
    sys.exit(2 if (report.max_error > tol or report.violations) else 0)


@main.command("solve-ivp")
@click.option("--rhs", "rhs_src", required=True, help="Function of t and u.")
@click.option("--gauge", "gauge_ref", required=True)
@click.option("--u0", required=True, type=float)
@click.option("--step", required=True, type=float)
@click.option("--picard", default=0, type=int, show_default=True,
              help="Picard refinement sweeps after the Euler pass.")
@click.option("--verify-tol", default=None, type=float,
              help="Verify the integral-equation residual; exit 2 above this.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
              default="csv", show_default=True)
@click.option("--out", default=None, type=click.Path())
def solve_ivp_cmd(rhs_src, gauge_ref, u0, step, picard, verify_tol, fmt, out):
    """Integrate du = rhs dmu from the left end of the gauge domain."""
    try:
        g = _load_gauge(gauge_ref)
        rhs = as_function(parse(rhs_src, {"t", "u"}), "t", "u")
        problem = solver.IvpProblem(gauge=g, rhs=rhs, u0=u0)
        sol = solver.solve_ivp(problem, step, picard_sweeps=picard)
        residual = None
        if verify_tol is not None:
            residual = solver.verify_solution(problem, sol)
        if fmt == "csv":
            _deliver(sol.to_csv(), out)
            if residual is not None:
                click.echo(f"max_residual {residual.max_residual}", err=True)
        else:
            payload = sol.to_dict()
            if residual is not None:
                payload["residual"] = residual.to_dict()
            _deliver(dumps(payload), out)
    except _ERRORS as exc:
        _fail(exc)
    if residual is not None and residual.max_residual > verify_tol:
        sys.exit(2)
    sys.exit(0)


@main.command("solve-surface")
@click.option("--h", "h_src", required=True, help="Source term, function of t.")
@click.option("--gauge", "gauge_ref", required=True, help="Work gauge.")
@click.option("--terminal", "--C", "terminal", default=0.0, type=float,
              show_default=True, help="Terminal value at the right end.")
@click.option("--step", required=True, type=float)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
              default="csv", show_default=True)
@click.option("--out", default=None, type=click.Path())
def solve_surface_cmd(h_src, gauge_ref, terminal, step, fmt, out):
    """Solve the terminal-value decay problem against a work gauge."""
    try:
        g = _load_gauge(gauge_ref)
        h = as_function(parse(h_src, {"t"}), "t")
        problem = solver.SurfaceProblem(work_gauge=g, source=h,
                                        terminal_value=terminal)
        sol = solver.solve_surface(problem, step)
        _deliver(sol.to_csv() if fmt == "csv" else dumps(sol.to_dict()), out)
    except _ERRORS as exc:
        _fail(exc)
    sys.exit(0)


if __name__ == "__main__":
    main()
