"""Differentiation and integration against a gauge.

The derivative of f at x against a gauge g is the limit of
(f(y) - f(x)) / (g(y) - g(x)) as y -> x.  Three point classes arise:

* continuity points: the limit is two-sided and is estimated here from
  geometrically shrinking one-sided difference quotients, extrapolated
  by a Richardson tableau; the sides must agree or DerivativeError is
  raised carrying the diagnostic sequences.
* jump points of g: the limit reduces to the exact one-sided quotient
  (f(x+) - f(x)) / atom, where atom is the jump size.  f(x+) comes from
  a right_limit method when the callable provides one (the running
  integrals below do), otherwise from right-sided extrapolation.
* excluded points: interiors of constancy intervals and their isolated
  endpoints carry no measure and no derivative; queries within 1e-12 of
  them return a result classed 'excluded' with no value.

Integration is the half-open Stieltjes sum: integral of f over [a, u)
equals the density part plus the atoms f(tau) * size for tau < u, so
the atom at the upper endpoint is excluded.  Running integrals share
the insert-only quadrature cache with gauges, which keeps differences
of nearby values exact enough to feed back into difference quotients.

The two fundamental-theorem harnesses close the loop: ftc_forward_check
differentiates the running integral of f and compares against f on a
grid; ftc2_check differentiates a given F and rebuilds it from its
derivative, reporting points where the derivative fails to exist.
"""

from __future__ import annotations

import bisect
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .gauge import CumulativeQuadrature, DistinguishedSets, Gauge, SNAP_RADIUS

__all__ = [
    "CalculusError",
    "DerivativeError",
    "DerivativeResult",
    "delta_derivative",
    "pair_derivative",
    "CumulativeStieltjesIntegral",
    "stieltjes_integral",
    "MeasurePath",
    "path_integral",
    "FtcReport",
    "ftc_forward_check",
    "ftc2_check",
    "DEFAULT_SHRINK_LEVELS",
]

DEFAULT_SHRINK_LEVELS = 12
_EPS = float(np.finfo(float).eps)


class CalculusError(Exception):
    """Base class for differentiation and integration failures."""


class DerivativeError(CalculusError):
    """Difference quotients failed to converge to a two-sided limit."""

    def __init__(self, message: str, point: float,
                 diagnostics: Optional[dict] = None):
        self.point = point
        self.diagnostics = diagnostics or {}
        super().__init__(f"{message} at x = {point!r}")


@dataclass(frozen=True)
class DerivativeResult:
    """Derivative estimate at one point.

    point_class is 'continuity', 'jump', or 'excluded'; value is None
    exactly for excluded points.
    """

    value: Optional[float]
    point_class: str
    error_estimate: float
    samples_used: int

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "point_class": self.point_class,
            "error_estimate": self.error_estimate,
            "samples_used": self.samples_used,
        }


def _richardson(values: Sequence[float]) -> tuple[float, float]:
    """Extrapolate a step-halving sequence; return (estimate, spread).

    Assumes the error expands in integer powers of the step.  The
    estimate is taken from the tableau diagonal at the index where
    consecutive diagonal entries agree best, which keeps rounding noise
    from the deepest levels out of the answer.
    """
    n = len(values)
    tableau = [[v] for v in values]
    for i in range(1, n):
        for j in range(1, i + 1):
            prev = tableau[i][j - 1]
            tableau[i].append(prev + (prev - tableau[i - 1][j - 1])
                              / (2.0 ** j - 1.0))
    diag = [tableau[i][i] for i in range(n)]
    if n == 1:
        return diag[0], math.inf
    best_i = 1
    best_spread = abs(diag[1] - diag[0])
    for i in range(2, n):
        spread = abs(diag[i] - diag[i - 1])
        if spread <= best_spread:
            best_spread = spread
            best_i = i
    return diag[best_i], best_spread


def _right_limit_extrapolate(f: Callable[[float], float], x: float,
                             reach: float, levels: int) -> tuple[float, float, int]:
    """Estimate f(x+) from values at x + h with h shrinking geometrically."""
    h0 = reach
    values, used = [], 0
    for k in range(levels):
        h = h0 * 2.0 ** (-k)
        if h < 32.0 * _EPS * max(1.0, abs(x)):
            break
        values.append(float(f(x + h)))
        used += 1
    if len(values) < 2:
        raise DerivativeError("no room to the right for a one-sided limit", x)
    estimate, spread = _richardson(values)
    return estimate, spread, used


def _structure_points(g: Gauge, dsets: DistinguishedSets,
                      avoid: Sequence[float]) -> list[float]:
    pts = list(dsets.d_set) + list(dsets.n_set) + list(avoid)
    for lo, hi in dsets.c_set:
        pts.extend((lo, hi))
    return pts


def _reach(x: float, direction: int, g: Gauge, structures: Sequence[float]) -> float:
    a, b = g.domain
    limit = (b - x) if direction > 0 else (x - a)
    for p in structures:
        d = (p - x) if direction > 0 else (x - p)
        if d > SNAP_RADIUS:
            limit = min(limit, d)
    return 0.5 * limit


def _side_quotients(numerator: Callable[[float], float], g: Gauge, x: float,
                    gx: float, direction: int, reach: float,
                    levels: int) -> tuple[list[float], int]:
    values, used = [], 0
    for k in range(levels):
        h = reach * 2.0 ** (-k)
        if h < 32.0 * _EPS * max(1.0, abs(x)):
            break
        y = x + direction * h
        den = g(y) - gx
        used += 1
        if den == 0.0:
            continue
        values.append(numerator(y) / den)
    return values, used


def _two_sided_limit(numerator: Callable[[float], float], g: Gauge, x: float,
                     shrink_levels: int, dsets: DistinguishedSets,
                     avoid: Sequence[float]) -> tuple[float, float, int]:
    a, b = g.domain
    gx = g(x)
    structures = _structure_points(g, dsets, avoid)
    sides = []
    used_total = 0
    diagnostics = {}
    for direction in (+1, -1):
        reach = _reach(x, direction, g, structures)
        if reach < 1e3 * _EPS * max(1.0, abs(x)):
            continue
        values, used = _side_quotients(numerator, g, x, gx, direction,
                                       reach, shrink_levels)
        used_total += used
        key = "right" if direction > 0 else "left"
        diagnostics[key] = list(values)
        if not values:
            raise DerivativeError(
                "gauge increments vanish on one side", x, diagnostics)
        estimate, spread = _richardson(values)
        if not math.isfinite(estimate) or \
                spread > 1e-2 * (1.0 + abs(estimate)):
            raise DerivativeError(
                f"difference quotients do not converge on the {key} side",
                x, diagnostics)
        sides.append((estimate, spread))
    if not sides:
        raise DerivativeError("no side of x admits difference quotients",
                              x, diagnostics)
    if len(sides) == 2:
        (lr, er), (ll, el) = sides
        if abs(lr - ll) > 1e-3 * (1.0 + abs(lr) + abs(ll)):
            raise DerivativeError(
                "left and right difference quotients disagree", x, diagnostics)
        value = 0.5 * (lr + ll)
        error = max(er, el, 0.5 * abs(lr - ll))
    else:
        value, error = sides[0]
    return value, error, used_total


def _match_jump(x: float, dsets: DistinguishedSets) -> Optional[float]:
    for tau in dsets.d_set:
        if abs(x - tau) <= SNAP_RADIUS:
            return tau
    return None


def delta_derivative(f: Callable[[float], float], g: Gauge, x: float,
                     shrink_levels: int = DEFAULT_SHRINK_LEVELS,
                     dsets: Optional[DistinguishedSets] = None,
                     avoid: Sequence[float] = ()) -> DerivativeResult:
    """Derivative of f against the gauge g at x.

    Args:
        f: callable on the gauge domain; an optional right_limit method
            is used for exact jump quotients.
        g: the gauge.
        x: query point inside the domain.
        shrink_levels: number of geometric step halvings per side.
        dsets: precomputed distinguished sets (computed if omitted).
        avoid: extra points (e.g. breakpoints of f) that shrink the
            initial step so quotients never straddle them.

    Raises:
        DerivativeError: when the quotient sequences fail to converge or
            the two sides disagree; the exception carries the sequences.
    """
    if dsets is None:
        dsets = g.distinguished_sets()
    a, b = g.domain
    if not (a - SNAP_RADIUS <= x <= b + SNAP_RADIUS):
        raise CalculusError(f"point {x!r} outside the gauge domain")
    x = min(max(float(x), a), b)

    tau = _match_jump(x, dsets)
    if tau is not None and tau < b:
        atom = g.jump_at(tau)
        fx = float(f(tau))
        if hasattr(f, "right_limit"):
            fplus = float(f.right_limit(tau))
            spread, used = 0.0, 1
        else:
            structures = _structure_points(g, dsets, avoid)
            reach = _reach(tau, +1, g, structures)
            if reach < 1e3 * _EPS * max(1.0, abs(tau)):
                raise DerivativeError("no room to the right of the jump", tau)
            fplus, spread, used = _right_limit_extrapolate(
                f, tau, reach, shrink_levels)
        return DerivativeResult(value=(fplus - fx) / atom,
                                point_class="jump",
                                error_estimate=spread / atom,
                                samples_used=used + 1)

    if dsets.excludes(x):
        return DerivativeResult(value=None, point_class="excluded",
                                error_estimate=0.0, samples_used=0)

    fx = float(f(x))
    value, error, used = _two_sided_limit(
        lambda y: float(f(y)) - fx, g, x, shrink_levels, dsets, avoid)
    return DerivativeResult(value=value, point_class="continuity",
                            error_estimate=error, samples_used=used)


def pair_derivative(f: Callable[[float], float], g1: Gauge, delta2,
                    x: float, shrink_levels: int = DEFAULT_SHRINK_LEVELS,
                    dsets: Optional[DistinguishedSets] = None,
                    avoid: Sequence[float] = ()) -> DerivativeResult:
    """Derivative of f with displaced numerator and gauge denominator.

    The quotient is delta2(f(x), f(y)) / (g1(y) - g1(x)): the numerator
    measures the displacement between values of f in the target space
    delta2, the denominator is the source gauge increment.  Point
    classes and convergence rules match delta_derivative.
    """
    if dsets is None:
        dsets = g1.distinguished_sets()
    a, b = g1.domain
    if not (a - SNAP_RADIUS <= x <= b + SNAP_RADIUS):
        raise CalculusError(f"point {x!r} outside the gauge domain")
    x = min(max(float(x), a), b)

    tau = _match_jump(x, dsets)
    if tau is not None and tau < b:
        atom = g1.jump_at(tau)
        fx = float(f(tau))
        if hasattr(f, "right_limit"):
            fplus = float(f.right_limit(tau))
            spread, used = 0.0, 1
        else:
            structures = _structure_points(g1, dsets, avoid)
            reach = _reach(tau, +1, g1, structures)
            if reach < 1e3 * _EPS * max(1.0, abs(tau)):
                raise DerivativeError("no room to the right of the jump", tau)
            fplus, spread, used = _right_limit_extrapolate(
                f, tau, reach, shrink_levels)
        return DerivativeResult(value=delta2.delta(fx, fplus) / atom,
                                point_class="jump",
                                error_estimate=spread / atom,
                                samples_used=used + 1)

    if dsets.excludes(x):
        return DerivativeResult(value=None, point_class="excluded",
                                error_estimate=0.0, samples_used=0)

    fx = float(f(x))
    value, error, used = _two_sided_limit(
        lambda y: delta2.delta(fx, float(f(y))), g1, x, shrink_levels,
        dsets, avoid)
    return DerivativeResult(value=value, point_class="continuity",
                            error_estimate=error, samples_used=used)


class CumulativeStieltjesIntegral:
    """Running half-open integral F(u) = integral of f over [a, u).

    The density part integrates f times the gauge density through the
    shared monotone quadrature cache; atoms contribute f(tau) * size for
    tau < u, accumulated left to right in a fixed order.  right_limit(u)
    adds the atom at u itself, so jump quotients against F are exact.
    """

    def __init__(self, f: Callable[[float], float], g: Gauge,
                 f_breaks: Sequence[float] = ()):
        self.f = f
        self.g = g
        a, b = g.domain
        taus = [tau for tau, _ in g.jumps]
        seeds = list(taus) + [float(p) for p in f_breaks]
        for lo, hi in g.flats:
            seeds.extend((lo, hi))
        self._dens = CumulativeQuadrature(
            lambda t: float(f(t)) * float(g.density(t)), a, b,
            tol=g.quad_tol, breakpoints=seeds)
        self._taus = taus
        self._atoms = []
        prefix = [0.0]
        for tau, size in g.jumps:
            contribution = float(f(tau)) * size
            if not math.isfinite(contribution):
                raise CalculusError(
                    f"integrand is not finite at the jump point {tau!r}")
            self._atoms.append(contribution)
            prefix.append(prefix[-1] + contribution)
        self._atom_prefix = prefix

    def __call__(self, upper: float) -> float:
        return (self._dens.value(upper)
                + self._atom_prefix[bisect.bisect_left(self._taus, upper)])

    def right_limit(self, x: float) -> float:
        value = self(x)
        i = bisect.bisect_left(self._taus, x)
        if i < len(self._taus) and self._taus[i] == x:
            value = value + self._atoms[i]
        return value


def stieltjes_integral(f: Callable[[float], float], g: Gauge, upper: float,
                       f_breaks: Sequence[float] = ()) -> float:
    """Integral of f against g over [a, upper); the atom at upper is excluded."""
    return CumulativeStieltjesIntegral(f, g, f_breaks)(upper)


@dataclass(frozen=True)
class MeasurePath:
    """A base-point path t -> alpha(t) for path-dependent measures."""

    alpha: Callable[[float], float]
    description: str = ""


def path_integral(f: Callable[[float], float], path: MeasurePath, spec,
                  upper: float, quad_tol: float = 1e-10) -> float:
    """Integral of f against the moving-base-point measure of a smooth space.

    The measure seen along the path has density d2(alpha(t), t), so the
    value is the ordinary integral of f(t) * d2(alpha(t), t) dt from the
    left domain endpoint to upper.
    """
    if spec.kind != "smooth":
        raise CalculusError(
            f"path_integral requires a smooth variant, got {spec.kind!r}")
    a, b = spec.domain
    upper = float(upper)
    if not (a - SNAP_RADIUS <= upper <= b + SNAP_RADIUS):
        raise CalculusError(f"upper limit {upper!r} outside [{a!r}, {b!r}]")

    def integrand(t: float) -> float:
        return float(f(t)) * spec.d2(path.alpha(t), t)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, _ = integrate.quad(integrand, a, upper, epsabs=quad_tol,
                                  epsrel=1e-12, limit=200)
    if not math.isfinite(value):
        raise CalculusError("path integral is not finite")
    return value


@dataclass(frozen=True)
class FtcReport:
    """Grid comparison between a derivative and its target function."""

    max_error: float
    worst_point: Optional[float]
    checked: int
    excluded: tuple[float, ...]
    violations: tuple[dict, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "max_error": self.max_error,
            "worst_point": self.worst_point,
            "checked": self.checked,
            "excluded": list(self.excluded),
            "violations": list(self.violations),
        }


_F_BREAK_GUARD = 1e-6


def ftc_forward_check(f: Callable[[float], float], g: Gauge, grid: int = 101,
                      shrink_levels: int = DEFAULT_SHRINK_LEVELS,
                      f_breaks: Sequence[float] = ()) -> FtcReport:
    """Differentiate the running integral of f and compare against f.

    The running integral F of f is formed first; its derivative against
    g is then evaluated on interior grid points (plus nothing else) and
    compared with f pointwise.  Points excluded by the distinguished
    sets, and points within 1e-6 of a declared breakpoint of f where a
    two-sided derivative cannot exist, are skipped and reported in the
    excluded list.
    """
    F = CumulativeStieltjesIntegral(f, g, f_breaks)
    dsets = g.distinguished_sets()
    a, b = g.domain
    candidates = np.linspace(a, b, grid + 2)[1:-1]
    max_error = 0.0
    worst: Optional[float] = None
    excluded = []
    violations = []
    checked = 0
    for t in candidates:
        t = float(t)
        if dsets.excludes(t):
            excluded.append(t)
            continue
        if _match_jump(t, dsets) is None and any(
                abs(t - p) < _F_BREAK_GUARD for p in f_breaks):
            excluded.append(t)
            continue
        try:
            d = delta_derivative(F, g, t, shrink_levels, dsets, avoid=f_breaks)
        except DerivativeError as exc:
            violations.append({"point": t, "reason": str(exc)})
            continue
        if d.value is None:
            excluded.append(t)
            continue
        checked += 1
        err = abs(d.value - float(f(t)))
        if err > max_error:
            max_error = err
            worst = t
    return FtcReport(max_error=max_error, worst_point=worst, checked=checked,
                     excluded=tuple(excluded), violations=tuple(violations))


def ftc2_check(F: Callable[[float], float], g: Gauge, grid: int = 101,
               shrink_levels: int = DEFAULT_SHRINK_LEVELS) -> FtcReport:
    """Differentiate F and rebuild it from the derivative.

    The derivative of F against g is sampled on interior grid points and
    at every jump, interpolated linearly in between (constancy regions
    carry no measure, so values there are immaterial), and integrated
    back from the left endpoint.  The report's max_error is the maximum
    reconstruction deviation |F(a) + integral - F| over the comparison
    grid; points where the derivative fails to exist are reported as
    violations, which is what happens when F is not absolutely
    continuous for the gauge.
    """
    dsets = g.distinguished_sets()
    a, b = g.domain
    knots = set(float(t) for t in np.linspace(a, b, grid + 2)[1:-1])
    knots.add(a)
    knots.update(tau for tau, _ in g.jumps if tau < b)
    kx, kv = [], []
    excluded = []
    violations = []
    for t in sorted(knots):
        if dsets.excludes(t):
            excluded.append(t)
            continue
        try:
            d = delta_derivative(F, g, t, shrink_levels, dsets)
        except DerivativeError as exc:
            violations.append({"point": t, "reason": str(exc)})
            continue
        if d.value is None:
            excluded.append(t)
            continue
        kx.append(t)
        kv.append(d.value)
    if len(kx) < 2:
        raise CalculusError(
            "not enough derivative samples to attempt reconstruction")
    kx_arr, kv_arr = np.asarray(kx), np.asarray(kv)

    def integrand(t: float) -> float:
        return float(np.interp(t, kx_arr, kv_arr))

    R = CumulativeStieltjesIntegral(integrand, g, f_breaks=kx)
    base = float(F(a))
    max_error = 0.0
    worst: Optional[float] = None
    for t in np.linspace(a, b, grid):
        t = float(t)
        err = abs(base + R(t) - float(F(t)))
        if err > max_error:
            max_error = err
            worst = t
    return FtcReport(max_error=max_error, worst_point=worst, checked=len(kx),
                     excluded=tuple(excluded), violations=tuple(violations))
