"""Left-continuous monotone gauges and the interval measures they induce.

A gauge g on [a, b] is built from a nonnegative density, a finite sorted
list of positive jumps, and optional declared constancy (flat) intervals.
By convention g(a) = 0 and g(t) is the measure of [a, t), which makes g
left-continuous and nondecreasing; the jump at tau contributes to g(t)
only for t > tau.

Evaluation goes through an insert-only cumulative quadrature cache.  The
naive alternative, re-running an adaptive quadrature from a to t for
every query, produces values that are individually accurate but not
jointly monotone: two nearby queries can come back in the wrong order by
an ulp or two, which is enough to break interval bisection and the sign
of small increments g(y) - g(x).  The cache instead keeps a sorted
breakpoint table seeded with the domain endpoints, jump positions and
flat endpoints.  A new query point t is integrated only over the gap
from its nearest cached neighbor below, and the resulting cumulative
value is clamped into the interval spanned by the neighbors, so the
stored table is monotone by construction and differences of cached
values telescope exactly.
"""

from __future__ import annotations

import bisect
import math
import threading
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from . import expr as expr_mod

__all__ = [
    "GaugeError",
    "CumulativeQuadrature",
    "Gauge",
    "DistinguishedSets",
    "SNAP_RADIUS",
]

SNAP_RADIUS = 1e-12
_FLAT_SAMPLES = 1025


class GaugeError(ValueError):
    """Invalid gauge data or evaluation outside the domain."""


class CumulativeQuadrature:
    """Monotone-consistent running integral F(t) = integral of fn over [lo, t].

    Values are memoized in a sorted breakpoint table; a query at a new t
    integrates fn only across the gap from the nearest cached point below
    and clamps the result between the neighboring cached values.  With
    nonnegative=True the per-panel contributions are additionally clamped
    at zero, which keeps the table nondecreasing no matter how the
    quadrature rounds.  Thread-safe; behaves as if the cache were absent.
    """

    def __init__(self, fn: Callable[[float], float], lo: float, hi: float,
                 tol: float = 1e-10, breakpoints: Sequence[float] = (),
                 nonnegative: bool = False):
        self.fn = fn
        self.lo = float(lo)
        self.hi = float(hi)
        self.tol = float(tol)
        self.nonnegative = nonnegative
        self._ts = [self.lo]
        self._vals = [0.0]
        self._lock = threading.RLock()
        for t in sorted(set(float(p) for p in breakpoints)):
            if self.lo < t <= self.hi:
                self.value(t)

    def _panel(self, lo: float, hi: float) -> float:
        if hi <= lo:
            return 0.0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            value, _ = integrate.quad(self.fn, lo, hi, epsabs=self.tol,
                                      epsrel=1e-12, limit=200)
        if not math.isfinite(value):
            raise GaugeError(
                f"non-finite integral over [{lo!r}, {hi!r}]")
        if self.nonnegative and value < 0.0:
            value = 0.0
        return value

    def value(self, t: float) -> float:
        t = float(t)
        if t < self.lo - SNAP_RADIUS or t > self.hi + SNAP_RADIUS:
            raise GaugeError(f"point {t!r} outside [{self.lo!r}, {self.hi!r}]")
        t = min(max(t, self.lo), self.hi)
        with self._lock:
            i = bisect.bisect_left(self._ts, t)
            if i < len(self._ts) and self._ts[i] == t:
                return self._vals[i]
            left_t, left_v = self._ts[i - 1], self._vals[i - 1]
            v = left_v + self._panel(left_t, t)
            if self.nonnegative:
                if v < left_v:
                    v = left_v
                if i < len(self._ts) and v > self._vals[i]:
                    v = self._vals[i]
            self._ts.insert(i, t)
            self._vals.insert(i, v)
            return v

    def cached_points(self) -> tuple[tuple[float, float], ...]:
        with self._lock:
            return tuple(zip(self._ts, self._vals))


@dataclass(frozen=True)
class DistinguishedSets:
    """Jump points, constancy intervals, and their endpoints for a gauge.

    d_set holds the jump positions, c_set the maximal open constancy
    intervals, and n_set the constancy endpoints that are not themselves
    jumps.  Points of c_set and n_set carry no measure and are excluded
    from differentiation.
    """

    d_set: tuple[float, ...]
    c_set: tuple[tuple[float, float], ...]
    n_set: tuple[float, ...]

    @property
    def o_set(self) -> dict:
        return {"intervals": self.c_set, "points": self.n_set}

    def is_jump(self, x: float, snap: float = SNAP_RADIUS) -> bool:
        return any(abs(x - tau) <= snap for tau in self.d_set)

    def excludes(self, x: float, snap: float = SNAP_RADIUS) -> bool:
        """True when x sits inside a constancy interval or on an n_set point."""
        if self.is_jump(x, snap):
            return False
        for lo, hi in self.c_set:
            if lo + snap < x < hi - snap:
                return True
        return any(abs(x - p) <= snap for p in self.n_set)

    def to_dict(self) -> dict:
        return {
            "d_set": list(self.d_set),
            "c_set": [list(iv) for iv in self.c_set],
            "n_set": list(self.n_set),
        }


_MEASURE_KINDS = ("[)", "()", "[]", "(]", "{}")


class Gauge:
    """A left-continuous nondecreasing gauge on [a, b] with g(a) = 0.

    Args:
        domain: pair (a, b) with a < b.
        density: nonnegative integrable callable on [a, b].
        jumps: iterable of (tau, size) with a <= tau <= b and size > 0,
            strictly increasing in tau.
        flats: declared open constancy intervals, disjoint, inside (a, b);
            the density is expected to vanish on them.
        quad_tol: absolute tolerance per quadrature panel.
        density_source: optional expression text in the variable t that
            reproduces the density; required only for JSON serialization.

    Instances are immutable apart from the internal quadrature cache and
    are callable: g(t) evaluates the gauge.
    """

    def __init__(self, domain: tuple[float, float],
                 density: Callable[[float], float],
                 jumps: Sequence[tuple[float, float]] = (),
                 flats: Sequence[tuple[float, float]] = (),
                 quad_tol: float = 1e-10,
                 density_source: Optional[str] = None):
        a, b = float(domain[0]), float(domain[1])
        if not (math.isfinite(a) and math.isfinite(b) and a < b):
            raise GaugeError(f"invalid domain [{a!r}, {b!r}]")
        self._domain = (a, b)
        self._density = density
        self._quad_tol = float(quad_tol)
        self._density_source = density_source

        taus, sizes = [], []
        for tau, size in jumps:
            tau, size = float(tau), float(size)
            if not (a <= tau <= b):
                raise GaugeError(f"jump position {tau!r} outside [{a!r}, {b!r}]")
            if size <= 0.0:
                raise GaugeError(f"jump size {size!r} must be positive")
            if taus and tau <= taus[-1]:
                raise GaugeError("jump positions must be strictly increasing")
            taus.append(tau)
            sizes.append(size)
        self._taus = taus
        self._sizes = sizes
        prefix = [0.0]
        for s in sizes:
            prefix.append(prefix[-1] + s)
        self._jump_prefix = prefix

        flat_list = []
        for lo, hi in flats:
            lo, hi = float(lo), float(hi)
            if not (a <= lo < hi <= b):
                raise GaugeError(f"flat ({lo!r}, {hi!r}) outside the domain")
            if flat_list and lo < flat_list[-1][1]:
                raise GaugeError("flats must be disjoint and sorted")
            if any(lo < tau < hi for tau in taus):
                raise GaugeError(
                    f"flat ({lo!r}, {hi!r}) contains a jump in its interior")
            flat_list.append((lo, hi))
        self._flats = tuple(flat_list)

        for t in np.linspace(a, b, 17):
            if float(density(t)) < -1e-9:
                raise GaugeError(f"density is negative at t = {float(t)!r}")

        seeds = list(taus)
        for lo, hi in flat_list:
            seeds.extend((lo, hi))
        self._cum = CumulativeQuadrature(density, a, b, tol=self._quad_tol,
                                         breakpoints=seeds, nonnegative=True)
        self._dsets: Optional[DistinguishedSets] = None
        self._dsets_lock = threading.Lock()

    # --- basic accessors ---

    @property
    def domain(self) -> tuple[float, float]:
        return self._domain

    @property
    def density(self) -> Callable[[float], float]:
        return self._density

    @property
    def jumps(self) -> tuple[tuple[float, float], ...]:
        return tuple(zip(self._taus, self._sizes))

    @property
    def flats(self) -> tuple[tuple[float, float], ...]:
        return self._flats

    @property
    def quad_tol(self) -> float:
        return self._quad_tol

    @property
    def density_source(self) -> Optional[str]:
        return self._density_source

    # --- evaluation ---

    def __call__(self, t: float) -> float:
        """g(t) = measure of [a, t); left-continuous, g(a) = 0."""
        return self._cum.value(t) + self._jump_prefix[bisect.bisect_left(self._taus, t)]

    def jump_at(self, t: float) -> float:
        """Size of the jump at t, or 0.0; this is the atom mass of {t}."""
        i = bisect.bisect_left(self._taus, t)
        if i < len(self._taus) and self._taus[i] == t:
            return self._sizes[i]
        return 0.0

    def right_limit(self, t: float) -> float:
        """g(t+), i.e. g(t) plus the atom at t."""
        return self(t) + self.jump_at(t)

    # --- measures ---

    def measure(self, c: float, d: Optional[float] = None, kind: str = "[)") -> float:
        """Measure of an interval against this gauge.

        kind selects the interval form: '[)' for [c, d), '()' for (c, d),
        '[]' for [c, d], '(]' for (c, d], and '{}' for the singleton {c}
        (d is ignored).  Endpoints must satisfy c <= d and lie in the
        domain.
        """
        if kind not in _MEASURE_KINDS:
            raise GaugeError(f"unknown interval kind {kind!r}")
        a, b = self._domain
        c = float(c)
        if not (a - SNAP_RADIUS <= c <= b + SNAP_RADIUS):
            raise GaugeError(f"endpoint {c!r} outside [{a!r}, {b!r}]")
        if kind == "{}":
            return self.jump_at(c)
        if d is None:
            raise GaugeError("interval measure needs both endpoints")
        d = float(d)
        if not (a - SNAP_RADIUS <= d <= b + SNAP_RADIUS):
            raise GaugeError(f"endpoint {d!r} outside [{a!r}, {b!r}]")
        if c > d:
            raise GaugeError(f"endpoints out of order: {c!r} > {d!r}")
        if kind == "[)":
            return self(d) - self(c)
        if kind == "()":
            return self(d) - self(c) - self.jump_at(c)
        if kind == "[]":
            return self(d) + self.jump_at(d) - self(c)
        return self(d) + self.jump_at(d) - self(c) - self.jump_at(c)

    # --- distinguished sets ---

    def distinguished_sets(self, samples: int = _FLAT_SAMPLES) -> DistinguishedSets:
        """Jump set, constancy intervals and constancy endpoints.

        Declared flats are trusted verbatim.  Additional constancy
        intervals are detected by sampling the density on a uniform grid
        and collecting maximal runs that stay below a relative threshold;
        detection supplements declared flats, never overrides them.  The
        default-resolution result is cached.
        """
        if samples == _FLAT_SAMPLES and self._dsets is not None:
            return self._dsets
        result = self._compute_dsets(samples)
        if samples == _FLAT_SAMPLES:
            with self._dsets_lock:
                if self._dsets is None:
                    self._dsets = result
                result = self._dsets
        return result

    def _compute_dsets(self, samples: int) -> DistinguishedSets:
        a, b = self._domain
        ts = np.linspace(a, b, samples)
        dens = np.array([abs(float(self._density(t))) for t in ts])
        threshold = SNAP_RADIUS * (1.0 + float(dens.max()))
        flat_mask = dens <= threshold

        detected: list[tuple[float, float]] = []
        i = 0
        while i < samples:
            if not flat_mask[i]:
                i += 1
                continue
            j = i
            while j + 1 < samples and flat_mask[j + 1]:
                j += 1
            if j > i:
                lo, hi = float(ts[i]), float(ts[j])
                # a jump strictly inside splits the run
                cuts = [tau for tau in self._taus if lo < tau < hi]
                pieces = zip([lo] + cuts, cuts + [hi])
                for plo, phi in pieces:
                    if phi - plo > 2.0 * (b - a) / max(samples - 1, 1):
                        detected.append((plo, phi))
            i = j + 1

        merged = self._merge_intervals(list(self._flats) + detected)
        endpoints = sorted({p for iv in merged for p in iv})
        n_set = tuple(p for p in endpoints if self.jump_at(p) == 0.0)
        return DistinguishedSets(d_set=tuple(self._taus),
                                 c_set=tuple(merged),
                                 n_set=n_set)

    def _merge_intervals(self, intervals: list[tuple[float, float]]) -> list[tuple[float, float]]:
        if not intervals:
            return []
        intervals.sort()
        merged = [intervals[0]]
        for lo, hi in intervals[1:]:
            mlo, mhi = merged[-1]
            # overlapping pieces merge freely; pieces that only touch merge
            # when the shared endpoint carries no atom, since an atom there
            # breaks constancy across it
            if lo < mhi or (lo == mhi and self.jump_at(lo) == 0.0):
                merged[-1] = (mlo, max(mhi, hi))
            else:
                merged.append((lo, hi))
        return merged

    # --- constructors and serialization ---

    @classmethod
    def identity(cls, domain: tuple[float, float] = (0.0, 1.0)) -> "Gauge":
        """The gauge with unit density and no jumps: g(t) = t - a."""
        return cls(domain, lambda t: 1.0, density_source="1")

    def to_dict(self) -> dict:
        if self._density_source is None:
            raise GaugeError(
                "gauge density has no expression form; cannot serialize")
        return {
            "domain": [self._domain[0], self._domain[1]],
            "density": self._density_source,
            "jumps": [[tau, size] for tau, size in self.jumps],
            "flats": [[lo, hi] for lo, hi in self._flats],
        }

    @classmethod
    def from_dict(cls, data: dict, quad_tol: float = 1e-10) -> "Gauge":
        try:
            domain = (float(data["domain"][0]), float(data["domain"][1]))
            source = data["density"]
        except (KeyError, TypeError, IndexError) as exc:
            raise GaugeError(f"malformed gauge data: {exc}") from exc
        if not isinstance(source, str):
            raise GaugeError("gauge density must be an expression string")
        density_expr = expr_mod.parse(source, {"t"})
        density = expr_mod.as_function(density_expr, "t")
        jumps = tuple((float(t), float(s)) for t, s in data.get("jumps", ()))
        flats = tuple((float(lo), float(hi)) for lo, hi in data.get("flats", ()))
        return cls(domain, density, jumps=jumps, flats=flats,
                   quad_tol=quad_tol, density_source=source)
