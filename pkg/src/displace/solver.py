"""Initial and terminal value problems driven by a gauge measure.

solve_ivp integrates du = rhs(t, u) dmu(t) with a gauge-adapted explicit
Euler scheme: the mesh always contains every jump of the gauge, the
continuous part of each panel uses a trapezoid approximation of the
gauge increment, and crossing a jump applies the exact atom update

    u(tau+) = u(tau) + rhs(tau, u(tau)) * atom,

evaluated as that single arithmetic expression so the recorded jump
values satisfy it bit for bit.  Node values are the left limits,
matching the half-open integral convention; the atom at the right
endpoint of the interval, if any, is never applied.  Optional Picard
sweeps re-integrate rhs along the previous trajectory with the
trapezoid rule, which drives the integral-equation residual of
verify_solution toward zero.

solve_surface handles the terminal-value problem whose unknown decays
against a work gauge W: given a source h and terminal value C,

    u(x) = C + integral over [x, b) of H dW,   H(x) = integral a..x of h,

computed so that u(b) equals C exactly and each work-gauge jump j at tau
produces the exact kink u(tau+) - u(tau) = -H(tau) * j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .gauge import Gauge
from .serialize import format_float

__all__ = [
    "SolverError",
    "IvpProblem",
    "SurfaceProblem",
    "JumpRecord",
    "IvpSolution",
    "ResidualReport",
    "solve_ivp",
    "solve_surface",
    "verify_solution",
]


class SolverError(Exception):
    """Bad solver input or a non-finite state during stepping."""

    def __init__(self, message: str, t_last: Optional[float] = None,
                 u_last: Optional[float] = None):
        self.t_last = t_last
        self.u_last = u_last
        if t_last is not None:
            message = f"{message} (last good node t = {t_last!r}, u = {u_last!r})"
        super().__init__(message)


@dataclass(frozen=True)
class IvpProblem:
    """du = rhs(t, u) dmu with u(a) = u0, on interval or the gauge domain."""

    gauge: Gauge
    rhs: Callable[[float, float], float]
    u0: float
    interval: Optional[tuple[float, float]] = None


@dataclass(frozen=True)
class SurfaceProblem:
    """Terminal-value decay against a work gauge with source h."""

    work_gauge: Gauge
    source: Callable[[float], float]
    terminal_value: float
    interval: Optional[tuple[float, float]] = None


@dataclass(frozen=True)
class JumpRecord:
    tau: float
    u_before: float
    u_after: float

    def to_dict(self) -> dict:
        return {"tau": self.tau, "u_before": self.u_before,
                "u_after": self.u_after}


@dataclass(frozen=True)
class IvpSolution:
    """Mesh solution with left-limit node values and explicit jump records."""

    ts: np.ndarray
    us: np.ndarray
    jumps: tuple[JumpRecord, ...]
    method: str
    max_step: float

    def value(self, t: float) -> float:
        """Left-continuous, jump-aware linear interpolation."""
        ts, us = self.ts, self.us
        if t < ts[0] or t > ts[-1]:
            raise SolverError(f"point {t!r} outside the solution interval")
        i = int(np.searchsorted(ts, t, side="right")) - 1
        if i >= len(ts) - 1:
            return float(us[-1])
        if t == ts[i]:
            return float(us[i])
        start = float(us[i])
        for rec in self.jumps:
            if rec.tau == ts[i]:
                start = rec.u_after
                break
        frac = (t - ts[i]) / (ts[i + 1] - ts[i])
        return start + frac * (float(us[i + 1]) - start)

    def to_csv(self) -> str:
        """Rows of t,u; jump nodes appear twice, before then after."""
        jump_after = {rec.tau: rec.u_after for rec in self.jumps}
        lines = ["t,u"]
        for t, u in zip(self.ts, self.us):
            t, u = float(t), float(u)
            lines.append(f"{format_float(t)},{format_float(u)}")
            if t in jump_after:
                lines.append(f"{format_float(t)},{format_float(jump_after[t])}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "max_step": self.max_step,
            "nodes": [[float(t), float(u)] for t, u in zip(self.ts, self.us)],
            "jumps": [rec.to_dict() for rec in self.jumps],
        }


@dataclass(frozen=True)
class ResidualReport:
    """Maximum integral-equation residual of a solution over a grid."""

    max_residual: float
    worst_point: float
    grid: int

    def to_dict(self) -> dict:
        return {"max_residual": self.max_residual,
                "worst_point": self.worst_point, "grid": self.grid}


def _resolve_interval(gauge: Gauge, interval: Optional[tuple[float, float]]
                      ) -> tuple[float, float]:
    ga, gb = gauge.domain
    if interval is None:
        return ga, gb
    a, b = float(interval[0]), float(interval[1])
    if not (ga <= a < b <= gb):
        raise SolverError(
            f"interval [{a!r}, {b!r}] does not sit inside the gauge "
            f"domain [{ga!r}, {gb!r}]")
    return a, b


def _build_mesh(gauge: Gauge, a: float, b: float, step: float) -> np.ndarray:
    if not (step > 0.0 and math.isfinite(step)):
        raise SolverError(f"step must be positive and finite, got {step!r}")
    n = max(1, int(math.ceil((b - a) / step)))
    base = np.linspace(a, b, n + 1)
    taus = [tau for tau, _ in gauge.jumps if a <= tau <= b]
    mesh = np.unique(np.concatenate([base, np.asarray(taus, dtype=float)]))
    return mesh


def _mesh_data(gauge: Gauge, mesh: np.ndarray,
               ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    dens = np.array([float(gauge.density(float(t))) for t in mesh])
    atoms = np.array([gauge.jump_at(float(t)) for t in mesh])
    dt = np.diff(mesh)
    return dens, atoms, dt


def solve_ivp(problem: IvpProblem, step: float,
              picard_sweeps: int = 0) -> IvpSolution:
    """Integrate the measure-driven IVP with the gauge-adapted Euler scheme.

    Args:
        problem: gauge, rhs and initial value.
        step: target mesh width; jump positions are always inserted.
        picard_sweeps: trapezoid re-integrations of rhs along the
            previous trajectory after the Euler pass; each sweep reduces
            (never increases) the verify_solution residual.

    Raises:
        SolverError: on invalid input or when the state leaves the
            finite range; the error names the last good node.
    """
    g = problem.gauge
    rhs = problem.rhs
    a, b = _resolve_interval(g, problem.interval)
    mesh = _build_mesh(g, a, b, step)
    dens, atoms, dt = _mesh_data(g, mesh)
    n = len(mesh)

    us = np.empty(n)
    u = float(problem.u0)
    for k in range(n - 1):
        us[k] = u
        t = float(mesh[k])
        if atoms[k] > 0.0:
            u = u + rhs(t, u) * atoms[k]
        cont = 0.5 * (dens[k] + dens[k + 1]) * dt[k]
        u = u + rhs(t, u) * cont
        if not math.isfinite(u):
            raise SolverError("state is no longer finite",
                              t_last=t, u_last=float(us[k]))
    us[n - 1] = u

    for _ in range(max(0, int(picard_sweeps))):
        us = _picard_sweep(rhs, mesh, us, dens, atoms, dt, float(problem.u0))

    jumps = _jump_records(rhs, mesh, us, atoms)
    method = "g-euler" if picard_sweeps <= 0 else "g-euler+picard"
    max_step = float(dt.max()) if len(dt) else 0.0
    return IvpSolution(ts=mesh, us=us, jumps=jumps, method=method,
                       max_step=max_step)


def _jump_records(rhs, mesh: np.ndarray, us: np.ndarray,
                  atoms: np.ndarray) -> tuple[JumpRecord, ...]:
    records = []
    for k in range(len(mesh) - 1):
        if atoms[k] > 0.0:
            t, u_before = float(mesh[k]), float(us[k])
            u_after = u_before + rhs(t, u_before) * atoms[k]
            records.append(JumpRecord(tau=t, u_before=u_before,
                                      u_after=u_after))
    return tuple(records)


def _panel_weights(rhs, mesh: np.ndarray, us: np.ndarray, dens: np.ndarray,
                   atoms: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Integrand values rhs(t, u(t)) * density at panel starts and ends.

    The start of a panel sits just after any atom at its left node, so
    the post-jump state is used there; the end uses the left value.
    """
    n = len(mesh)
    w_left = np.empty(n)
    w_after = np.empty(n)
    for k in range(n):
        t, u_before = float(mesh[k]), float(us[k])
        w = rhs(t, u_before)
        w_left[k] = w * dens[k]
        if atoms[k] > 0.0:
            u_after = u_before + w * atoms[k]
            w_after[k] = rhs(t, u_after) * dens[k]
        else:
            w_after[k] = w_left[k]
    return w_left, w_after


def _picard_sweep(rhs, mesh: np.ndarray, us: np.ndarray, dens: np.ndarray,
                  atoms: np.ndarray, dt: np.ndarray, u0: float) -> np.ndarray:
    n = len(mesh)
    w_left, w_after = _panel_weights(rhs, mesh, us, dens, atoms)
    new = np.empty(n)
    running = u0
    new[0] = running
    for k in range(n - 1):
        if atoms[k] > 0.0:
            running += rhs(float(mesh[k]), float(us[k])) * atoms[k]
        running += 0.5 * (w_after[k] + w_left[k + 1]) * dt[k]
        if not math.isfinite(running):
            raise SolverError("state is no longer finite during refinement",
                              t_last=float(mesh[k]), u_last=float(us[k]))
        new[k + 1] = running
    return new


def verify_solution(problem: IvpProblem, solution: IvpSolution,
                    grid: int = 101) -> ResidualReport:
    """Residual of the integral equation u = u0 + integral rhs dmu.

    The right-hand side is re-integrated along the solution with the
    trapezoid rule on the solution's own mesh; the residual is evaluated
    at the mesh node nearest each grid point, so no interpolation error
    enters.
    """
    g = problem.gauge
    rhs = problem.rhs
    mesh, us = solution.ts, solution.us
    dens, atoms, dt = _mesh_data(g, mesh)
    n = len(mesh)
    w_left, w_after = _panel_weights(rhs, mesh, us, dens, atoms)
    S = np.empty(n)
    S[0] = 0.0
    for k in range(n - 1):
        inc = 0.5 * (w_after[k] + w_left[k + 1]) * dt[k]
        if atoms[k] > 0.0:
            inc += rhs(float(mesh[k]), float(us[k])) * atoms[k]
        S[k + 1] = S[k] + inc
    residuals = np.abs(us - float(problem.u0) - S)

    max_residual = -1.0
    worst = float(mesh[0])
    for t in np.linspace(mesh[0], mesh[-1], grid):
        k = int(np.searchsorted(mesh, t))
        if k >= n:
            k = n - 1
        elif k > 0 and abs(mesh[k - 1] - t) <= abs(mesh[k] - t):
            k -= 1
        if residuals[k] > max_residual:
            max_residual = float(residuals[k])
            worst = float(mesh[k])
    return ResidualReport(max_residual=max_residual, worst_point=worst,
                          grid=grid)


def solve_surface(problem: SurfaceProblem, step: float) -> IvpSolution:
    """Solve the terminal-value surface problem against the work gauge.

    Builds H as the running integral of the source, then the running
    work integral S of H, and sets u = C + (S(b) - S(.)), which makes
    u(b) = C exact.  Work-gauge jumps produce kinks computed by the
    exact atom expression u_after = u_before - H(tau) * atom.
    """
    g = problem.work_gauge
    a, b = _resolve_interval(g, problem.interval)
    mesh = _build_mesh(g, a, b, step)
    dens, atoms, dt = _mesh_data(g, mesh)
    n = len(mesh)

    h_vals = np.array([float(problem.source(float(t))) for t in mesh])
    if not np.all(np.isfinite(h_vals)):
        raise SolverError("source is not finite on the mesh")
    H = np.empty(n)
    H[0] = 0.0
    for k in range(n - 1):
        H[k + 1] = H[k] + 0.5 * (h_vals[k] + h_vals[k + 1]) * dt[k]

    S = np.empty(n)
    S[0] = 0.0
    for k in range(n - 1):
        inc = 0.5 * (H[k] * dens[k] + H[k + 1] * dens[k + 1]) * dt[k]
        if atoms[k] > 0.0:
            inc += H[k] * atoms[k]
        S[k + 1] = S[k] + inc

    C = float(problem.terminal_value)
    total = S[n - 1]
    us = C + (total - S)
    us[n - 1] = C

    records = []
    for k in range(n - 1):
        if atoms[k] > 0.0:
            u_before = float(us[k])
            u_after = u_before - H[k] * atoms[k]
            records.append(JumpRecord(tau=float(mesh[k]), u_before=u_before,
                                      u_after=u_after))
    max_step = float(dt.max()) if len(dt) else 0.0
    return IvpSolution(ts=mesh, us=us, jumps=tuple(records),
                       method="terminal", max_step=max_step)
