"""Descent flow for F + alpha_E * E with Armijo backtracking.

The gradient is the band-limited projection of the L^2 gradient (for
alpha_E = 0, minus J d phi(Z_phi) filtered).  Search directions come from a
limited-memory BFGS recursion on tangent fields, with vector transport by
re-projection onto the new tangent planes; every accepted step satisfies
the Armijo condition, so the objective never increases.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from sdl.errors import ConfigurationError, HomotopyEscapeError, StagnationError
from sdl.maps import (
    SphereMap,
    criticality_residual,
    energy_dirichlet,
    energy_symplectic,
    geodesic_step,
    gradient_E,
    gradient_F,
    project_tangent,
    tangent_inner,
)

logger = logging.getLogger(__name__)

__all__ = ["FlowParams", "FlowRecord", "FlowResult", "gradient_flow", "write_trajectory"]


@dataclass
class FlowParams:
    """Flow settings; ``alpha`` weights E, so ``alpha = 0`` is the pure F flow."""

    step: float = 1e-2
    max_steps: int = 500
    grad_tol: float = 1e-6
    hopf_drift_tol: float = 0.5
    alpha: float = 0.0
    hopf_every: int = 10
    armijo: float = 1e-4
    backtrack: float = 0.5
    min_step: float = 1e-12
    max_step: float = 10.0
    memory: int = 10
    filter_degree: int | None = None

    def __post_init__(self):
        if self.step <= 0 or self.grad_tol <= 0 or self.hopf_drift_tol <= 0:
            raise ConfigurationError("step and tolerances must be positive")
        if self.alpha < 0:
            raise ConfigurationError("alpha must be non-negative")


@dataclass
class FlowRecord:
    step: int
    E: float
    F: float
    total: float
    H: float | None
    residual_norm: float
    dt: float


@dataclass
class FlowResult:
    phi: SphereMap
    trajectory: list[FlowRecord] = field(default_factory=list)
    converged: bool = False


def _objective(phi: SphereMap, alpha: float) -> tuple[float, float, float]:
    F = energy_symplectic(phi)
    E = energy_dirichlet(phi) if alpha > 0 else 0.0
    return F + alpha * E, E, F


def _gradient(phi: SphereMap, alpha: float) -> np.ndarray:
    g = gradient_F(phi)
    if alpha > 0:
        g = g + alpha * gradient_E(phi)
    return g


def _lbfgs_direction(g, history, ip):
    q = g.copy()
    alphas = []
    for sk, yk, rho in reversed(history):
        a = rho * ip(sk, q)
        alphas.append(a)
        q -= a * yk
    if history:
        sk, yk, rho = history[-1]
        q *= 1.0 / (rho * ip(yk, yk))
    for (sk, yk, rho), a in zip(history, reversed(alphas)):
        b = rho * ip(yk, q)
        q += (a - b) * sk
    return -q


def gradient_flow(phi0: SphereMap, params: FlowParams | None = None) -> FlowResult:
    """Run the descent flow from ``phi0``.

    Raises
    ------
    StagnationError
        If backtracking drives the step below ``params.min_step``.
    HomotopyEscapeError
        If the Hopf invariant (S^3 domains) drifts by more than
        ``params.hopf_drift_tol``.
    """
    from sdl.topology import hopf_invariant

    p = params or FlowParams()
    M = phi0.manifold
    track_h = M.kind == "s3"
    phi = phi0
    H0 = hopf_invariant(phi) if track_h else None
    H = H0
    obj, E, F = _objective(phi, p.alpha)
    s = p.step
    result = FlowResult(phi)
    E_full = energy_dirichlet(phi)
    _, res = criticality_residual(phi)
    result.trajectory.append(FlowRecord(0, E_full, F, obj, H, res, 0.0))
    history: list[tuple[np.ndarray, np.ndarray, float]] = []
    ip = lambda a, b: tangent_inner(M, a, b)
    g = project_tangent(phi.values, M.project_smooth(_gradient(phi, p.alpha), p.filter_degree))
    for k in range(1, p.max_steps + 1):
        gnorm2 = ip(g, g)
        if np.sqrt(gnorm2) <= p.grad_tol:
            result.converged = True
            break
        direction = _lbfgs_direction(g, history, ip)
        slope = ip(g, direction)
        if slope >= -1e-12 * gnorm2:
            history.clear()
            direction, slope = -g, -gnorm2
        s = p.step if k == 1 or not history else 1.0
        stalled = False
        while True:
            trial = geodesic_step(phi, direction, s)
            t_obj, t_E, t_F = _objective(trial, p.alpha)
            if t_obj <= obj + p.armijo * s * slope:
                break
            s *= p.backtrack
            if s * abs(slope) < 1e-13 * max(abs(obj), 1.0):
                # predicted decrease below round-off: stationary to precision
                stalled = True
                break
            if s < p.min_step:
                raise StagnationError(f"step collapsed below {p.min_step} at iteration {k}")
        if stalled:
            result.converged = True
            break
        g_new = project_tangent(trial.values, M.project_smooth(_gradient(trial, p.alpha), p.filter_degree))
        n_new = trial.values
        sk = project_tangent(n_new, s * direction)
        yk = g_new - project_tangent(n_new, g)
        history = [(project_tangent(n_new, a), project_tangent(n_new, b), r) for a, b, r in history]
        sy = ip(sk, yk)
        if sy > 1e-12 * np.sqrt(ip(sk, sk) * ip(yk, yk)):
            history.append((sk, yk, 1.0 / sy))
            if len(history) > p.memory:
                history.pop(0)
        phi, obj, E, F, g = trial, t_obj, t_E, t_F, g_new
        if track_h and k % p.hopf_every == 0:
            H = hopf_invariant(phi)
            if abs(H - H0) > p.hopf_drift_tol:
                raise HomotopyEscapeError(f"Hopf invariant drifted from {H0:.6g} to {H:.6g}")
        _, res = criticality_residual(phi)
        result.trajectory.append(FlowRecord(k, energy_dirichlet(phi), F, obj, H, res, s))
        logger.debug("step %d: total=%.12g dt=%.3g residual=%.3g", k, obj, s, res)
    if track_h:
        H = hopf_invariant(phi)
        if abs(H - H0) > p.hopf_drift_tol:
            raise HomotopyEscapeError(f"Hopf invariant drifted from {H0:.6g} to {H:.6g}")
        result.trajectory[-1].H = H
    result.phi = phi
    return result


def write_trajectory(path, trajectory: list[FlowRecord]) -> None:
    """CSV with columns step, E, F, total, H, residual_norm, dt."""
    cols = ["step", "E", "F", "total", "H", "residual_norm", "dt"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for rec in trajectory:
            row = asdict(rec)
            row["H"] = "" if row["H"] is None else row["H"]
            w.writerow(row)
