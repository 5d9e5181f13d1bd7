"""Hopf invariant via a coexact potential, and the F >= H energy bound."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from sdl.dec import (
    DiffForm,
    DiscreteManifold,
    codifferential,
    exterior_derivative,
    hodge_laplacian,
    integrate,
    l2_norm,
    wedge,
)
from sdl.errors import DomainError, InputError, NumericalError

logger = logging.getLogger(__name__)

__all__ = [
    "PotentialSolve",
    "BoundCheck",
    "weighted_solve",
    "poisson_solve",
    "coexact_project",
    "solve_coexact_potential",
    "hopf_invariant",
    "hopf_class",
    "check_energy_bound",
]


def weighted_solve(M: DiscreteManifold, apply, rhs: np.ndarray, tol: float = 1e-10,
                   maxiter: int = 2000, L: int | None = None) -> tuple[np.ndarray, int]:
    """CG for a W-symmetric operator restricted to band-limited fields.

    ``apply`` maps a (ncomp, *grid) array to one of the same shape.
    Returns the solution and the iteration count.
    """
    P = lambda u: M.project_smooth(u, L)
    shape = rhs.shape
    sw = np.sqrt(M.weights)
    count = [0]

    def mv(u):
        count[0] += 1
        return (P(apply(P(u.reshape(shape) / sw))) * sw).ravel()

    n = int(np.prod(shape))
    b = (P(rhs) * sw).ravel()
    if not np.any(b):
        return np.zeros(shape), 0
    sol, info = cg(LinearOperator((n, n), matvec=mv), b, rtol=tol, maxiter=maxiter)
    if info != 0:
        raise NumericalError(f"CG did not converge in {maxiter} iterations")
    return P(sol.reshape(shape) / sw), count[0]


def poisson_solve(f: DiffForm, tol: float = 1e-12) -> DiffForm:
    """Mean-zero solution of Delta u = f for a 0-form f (mean removed first)."""
    M = f.manifold
    rhs = f.components - np.sum(M.weights * f.components[0]) / M.volume

    def apply(u):
        g = DiffForm(0, u, M)
        v = codifferential(exterior_derivative(g)).components
        # pin the constant mode so the operator is definite
        return v + np.sum(M.weights * u[0]) / M.volume
    sol, _ = weighted_solve(M, apply, rhs, tol=tol)
    return DiffForm(0, sol, M)


def coexact_project(v: DiffForm) -> DiffForm:
    """Remove the exact part of a 1-form: v - d Delta^{-1} delta v."""
    if v.degree != 1:
        raise DomainError("coexact projection is implemented for 1-forms")
    return v - exterior_derivative(poisson_solve(codifferential(v)))


@dataclass
class PotentialSolve:
    """Result of :func:`solve_coexact_potential`.

    ``residual`` is the normal-equation residual |delta(rho - dA)| / |delta rho|,
    which vanishes exactly when dA is the exact part of rho; ``defect`` is
    |rho - dA| / |rho|, the non-exact remainder of the sampled form.
    """

    A: DiffForm
    residual: float
    iterations: int
    defect: float = 0.0


def solve_coexact_potential(rho: DiffForm, tol: float = 1e-8, closed_tol: float = 1e-3,
                            restarts: int = 3) -> PotentialSolve:
    """Coexact 1-form A with dA equal to the (band-limited) exact 2-form rho.

    Solves the 1-form Hodge system Delta A = delta rho by CG, then projects
    A onto the coexact subspace; repeated until dA matches rho.

    Raises
    ------
    InputError
        If rho is not closed to ``closed_tol`` (relative).
    NumericalError
        If the solve does not reach ``tol``.
    """
    M = rho.manifold
    if M.kind != "s3":
        raise DomainError("potentials are solved on S^3 (trivial second cohomology)")
    if rho.degree != 2:
        raise InputError("potential solve expects a 2-form")
    nrm = l2_norm(rho)
    if nrm == 0.0:
        return PotentialSolve(DiffForm(1, np.zeros((3,) + M.shape), M), 0.0, 0)
    closed = l2_norm(exterior_derivative(rho)) / nrm
    if closed > closed_tol:
        raise InputError(f"2-form is not closed: |d rho| / |rho| = {closed:.3e}")
    target = DiffForm(2, M.project_smooth(rho.components), M)
    apply = lambda u: hodge_laplacian(DiffForm(1, u, M)).components
    A = DiffForm(1, np.zeros((3,) + M.shape), M)
    iters = 0
    res = np.inf
    scale = l2_norm(codifferential(target))
    for _ in range(restarts):
        rhs = codifferential(target - exterior_derivative(A))
        corr, k = weighted_solve(M, apply, rhs.components, tol=tol * 1e-2)
        iters += k
        A = coexact_project(A + DiffForm(1, corr, M))
        res = l2_norm(codifferential(target - exterior_derivative(A))) / scale
        if res <= tol:
            break
    if res > tol:
        raise NumericalError(f"potential residual {res:.3e} above tolerance {tol:.1e}")
    defect = l2_norm(target - exterior_derivative(A)) / l2_norm(target)
    return PotentialSolve(A, res, iters, defect)


def hopf_invariant(phi, tol: float = 1e-8) -> float:
    """H = int dA ^ A with dA = phi^* omega (target area pi, so H(Hopf) = pi^2)."""
    from sdl.maps import pullback_omega

    if phi.manifold.kind != "s3":
        raise DomainError("the Hopf invariant is defined for maps from S^3")
    sol = solve_coexact_potential(pullback_omega(phi), tol=tol)
    return integrate(wedge(exterior_derivative(sol.A), sol.A))


def hopf_class(H: float) -> tuple[int, float]:
    """Nearest integer class label H / pi^2 and the rounding gap."""
    x = H / np.pi**2
    k = int(np.rint(x))
    return k, float(abs(x - k))


@dataclass
class BoundCheck:
    H: float
    F: float
    slack: float
    potential_norm_sq: float
    passed: bool
    solver_iterations: int = 0
    residual: float = 0.0

    @property
    def H_normalized(self) -> float:
        return self.H / np.pi**2

    def as_dict(self) -> dict:
        return {"H": self.H, "H_normalized": self.H_normalized, "F": self.F, "slack": self.slack,
                "solver_iterations": self.solver_iterations, "residual": self.residual}


def check_energy_bound(phi, rel_tol: float = 0.01, closed_tol: float = 1e-3) -> BoundCheck:
    """Both sides of H(phi) <= F(phi) on the round sphere, with slack F - H."""
    from sdl.maps import energy_symplectic, pullback_omega

    M = phi.manifold
    if M.kind != "s3" or M.t != 1.0:
        raise DomainError("the energy bound uses lambda_1 = 4 of the round S^3")
    sol = solve_coexact_potential(pullback_omega(phi), closed_tol=closed_tol)
    H = integrate(wedge(exterior_derivative(sol.A), sol.A))
    F = energy_symplectic(phi)
    slack = F - H
    return BoundCheck(H=H, F=F, slack=slack, potential_norm_sq=l2_norm(sol.A) ** 2,
                      passed=slack >= -rel_tol * F, solver_iterations=sol.iterations,
                      residual=sol.residual)
