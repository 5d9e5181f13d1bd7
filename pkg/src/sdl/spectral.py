"""Coexact Hodge spectra, second variations of F and E, and the stability scan.

Vector fields along a map follow the conventions of :mod:`sdl.maps`: ambient
3-vectors orthogonal to ``n`` in the radius-1/2 metric, re-projected after
each operator application.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator, lobpcg

from sdl.dec import (
    DiffForm,
    DiscreteManifold,
    codifferential,
    exterior_derivative,
    hodge_laplacian,
)
from sdl.errors import DomainError, NumericalError, PreconditionError
from sdl.maps import (
    SphereMap,
    criticality_residual,
    energy_dirichlet,
    energy_symplectic,
    geodesic_step,
    project_tangent,
    pullback_omega,
    pushforward,
    tangent_inner,
)
from sdl.topology import coexact_project

logger = logging.getLogger(__name__)

__all__ = [
    "SpectrumResult",
    "ThresholdScan",
    "coexact_one_form_spectrum",
    "jacobi_apply",
    "energy_jacobi_apply",
    "hessian_coclosed_form",
    "second_variation_fd",
    "galerkin_fields",
    "hessian_matrices",
    "hessian_spectrum",
    "stability_threshold_scan",
    "symmetry_defect",
]


@dataclass
class SpectrumResult:
    """Smallest eigenpairs of a symmetric operator.

    ``residuals[i]`` is ``|A v - lambda v| / |v|`` for the i-th pair.
    """

    eigenvalues: np.ndarray
    eigenvectors: list | None
    operator_tag: str
    residuals: np.ndarray
    alpha: float | None = None
    resolution: tuple | None = None
    t: float | None = None

    def as_dict(self) -> dict:
        out = {
            "operator_tag": self.operator_tag,
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "residuals": [float(x) for x in self.residuals],
            "resolution": list(self.resolution) if self.resolution else None,
            "t": self.t,
        }
        if self.alpha is not None:
            out["alpha"] = self.alpha
        return out


# ---------------------------------------------------------------- coexact


def coexact_one_form_spectrum(M: DiscreteManifold, k: int = 1, tol: float = 1e-6,
                              penalty: float = 1.0, maxiter: int = 400,
                              seed: int = 0) -> SpectrumResult:
    """k smallest eigenvalues of the Hodge Laplacian on coexact 1-forms.

    Works in the band-limited space of the grid.  Exact forms are removed
    from the starting block by a Poisson solve and are pushed up the
    spectrum during iteration by the penalty ``penalty * d delta``; the
    returned eigenvectors are projected once more.

    Raises
    ------
    DomainError
        If M is not an S^3 grid or k < 1.
    NumericalError
        If LOBPCG does not reach ``tol``.
    """
    if M.kind != "s3":
        raise DomainError("the coexact spectrum is computed on S^3")
    if k < 1 or k > 10:
        raise DomainError("k must lie in 1..10")
    shape = (3,) + M.shape
    sw = np.sqrt(M.weights)
    P = M.project_smooth
    big = 50.0

    def op(u):
        f = DiffForm(1, u, M)
        return (hodge_laplacian(f) + penalty * exterior_derivative(codifferential(f))).components

    def mv(x):
        X = x.reshape(shape + (-1,)) if x.ndim == 2 else x.reshape(shape)
        cols = [X] if x.ndim == 1 else [X[..., j] for j in range(X.shape[-1])]
        out = []
        for c in cols:
            u = c / sw
            pu = P(u)
            r = P(op(pu)) + big * (u - pu)
            out.append((r * sw).ravel())
        return out[0] if x.ndim == 1 else np.stack(out, axis=1)

    n = int(np.prod(shape))
    A = LinearOperator((n, n), matvec=mv, matmat=mv, dtype=float)
    rng = np.random.default_rng(seed)
    block = max(k + 5, 8)
    X0 = []
    for _ in range(block):
        u = P(rng.standard_normal(shape))
        u = coexact_project(DiffForm(1, u, M)).components
        X0.append((u * sw).ravel())
    X0 = np.stack(X0, axis=1)
    with warnings.catch_warnings():
        # convergence is judged below from explicit residuals
        warnings.simplefilter("ignore", UserWarning)
        vals, vecs = lobpcg(A, X0, tol=tol * 0.1, maxiter=maxiter, largest=False)
    order = np.argsort(vals)[:k]
    vals, vecs = vals[order], vecs[:, order]
    forms, residuals = [], []
    for j in range(k):
        u = vecs[:, j].reshape(shape) / sw
        v = coexact_project(DiffForm(1, u, M))
        r = op(v.components) - vals[j] * v.components
        nv = np.sqrt(np.sum(M.weights * v.components**2))
        residuals.append(np.sqrt(np.sum(M.weights * r**2)) / nv)
        forms.append(v * (1.0 / nv))
    residuals = np.array(residuals)
    if np.any(residuals > tol * max(1.0, float(np.max(np.abs(vals))))):
        raise NumericalError(f"coexact eigensolver residuals {residuals} above {tol}")
    return SpectrumResult(np.asarray(vals), forms, "hodge_coexact_1forms", residuals,
                          resolution=M.resolution, t=M.t)


# ---------------------------------------------------------------- operators


def _require_critical(phi: SphereMap, tol: float) -> None:
    _, res = criticality_residual(phi)
    if res > tol:
        raise PreconditionError(f"map is not critical: residual {res:.3e} > {tol:.1e}")


def _transport(phi: SphereMap, V: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Pullback covariant derivative nabla_V Y for a frame-component field V."""
    M = phi.manifold
    dY = M.frame_derivatives(Y)
    return project_tangent(phi.values, np.einsum("a...,ac...->c...", V, dY))


def _interior_pullback(phi: SphereMap, Y: np.ndarray, dn=None) -> DiffForm:
    """The 1-form phi^*(Y _| omega), components omega(Y, d phi e_a)."""
    dn = pushforward(phi) if dn is None else dn
    nY = np.cross(phi.values, Y, axis=0)
    return DiffForm(1, np.einsum("c...,ac...->a...", nY, dn), phi.manifold)


def jacobi_apply(phi: SphereMap, Y: np.ndarray, crit_tol: float = 1e-6,
                 check: bool = True) -> np.ndarray:
    """Jacobi operator of F at a critical map.

    ``L Y = -J { nabla_Z Y + d phi [ sharp delta d phi^*(Y _| omega) ] }``
    with ``Z = sharp delta phi^* omega``.

    Raises
    ------
    PreconditionError
        If the criticality residual exceeds ``crit_tol``.
    """
    if check:
        _require_critical(phi, crit_tol)
    n = phi.values
    Y = project_tangent(n, Y)
    dn = pushforward(phi)
    Z = codifferential(pullback_omega(phi)).components
    theta = _interior_pullback(phi, Y, dn)
    W = codifferential(exterior_derivative(theta)).components
    inner = _transport(phi, Z, Y) + np.einsum("a...,ac...->c...", W, dn)
    return project_tangent(n, -np.cross(n, inner, axis=0))


def energy_jacobi_apply(phi: SphereMap, Y: np.ndarray) -> np.ndarray:
    """Jacobi operator of E for the radius-1/2 target (sectional curvature 4).

    ``J_E Y = P_T(Delta Y) - 4 |d phi|^2 Y`` with Delta the positive
    Laplacian acting on ambient components.
    """
    M = phi.manifold
    n = phi.values
    Y = project_tangent(n, Y)
    lap = np.array([codifferential(exterior_derivative(DiffForm(0, c[None], M))).components[0]
                    for c in Y])
    dn = pushforward(phi)
    e = np.sum(dn**2, axis=(0, 1))
    return project_tangent(n, lap - 4.0 * e * Y)


def hessian_coclosed_form(phi: SphereMap, X: np.ndarray, tol: float = 1e-6) -> float:
    """``|d phi^*(X _| omega)|^2``, the F-Hessian when phi^* omega is coclosed.

    Raises
    ------
    PreconditionError
        If ``|delta phi^* omega|`` exceeds ``tol``.
    """
    M = phi.manifold
    z = codifferential(pullback_omega(phi)).components
    dz = float(np.sqrt(np.sum(M.weights * z**2)))
    if dz > tol:
        raise PreconditionError(f"pullback form is not coclosed: |delta| = {dz:.3e}")
    d = exterior_derivative(_interior_pullback(phi, project_tangent(phi.values, X))).components
    return float(np.sum(M.weights * d**2))


def second_variation_fd(phi: SphereMap, Y: np.ndarray, energy: str = "F",
                        h: float = 1e-2) -> float:
    """Five-point second derivative of E or F along the geodesic variation by Y."""
    fn = {"F": energy_symplectic, "E": energy_dirichlet}[energy]
    Y = project_tangent(phi.values, Y)
    vals = [fn(geodesic_step(phi, Y, j * h)) for j in (-2, -1, 0, 1, 2)]
    return (-vals[0] + 16 * vals[1] - 30 * vals[2] + 16 * vals[3] - vals[4]) / (12 * h * h)


def symmetry_defect(phi: SphereMap, op, X: np.ndarray, Y: np.ndarray) -> float:
    """``|<X, A Y> - <A X, Y>| / (|X| |A Y|)`` for an operator ``op(phi, Y)``."""
    M = phi.manifold
    AY, AX = op(phi, Y), op(phi, X)
    a = tangent_inner(M, X, AY)
    b = tangent_inner(M, AX, Y)
    scale = np.sqrt(tangent_inner(M, X, X) * tangent_inner(M, AY, AY))
    return abs(a - b) / scale if scale > 0 else 0.0


# ---------------------------------------------------------------- Galerkin


def _monomials(M: DiscreteManifold, degree: int) -> list[np.ndarray]:
    x = M.embedding
    out = []
    for d in (degree - 1, degree):
        if d < 0:
            continue
        for combo in combinations_with_replacement(range(x.shape[0]), d):
            m = np.ones(M.shape)
            for i in combo:
                m = m * x[i]
            out.append(m)
    return out


def galerkin_fields(phi: SphereMap, degree: int = 3) -> list[np.ndarray]:
    """Tangent fields p * d phi(e_a), p a polynomial of degree <= ``degree``, a >= 2.

    Monomials of degrees ``degree`` and ``degree - 1`` restrict to a basis of
    all polynomials of degree <= ``degree`` on the sphere.  Requires the
    horizontal push-forwards to span the tangent plane (as for the Hopf map).
    """
    M = phi.manifold
    if M.kind != "s3":
        raise DomainError("Galerkin fields are built on S^3")
    dn = pushforward(phi)
    frame = [dn[1], dn[2]]
    det = np.abs(np.sum(phi.values * np.cross(frame[0], frame[1], axis=0), axis=0))
    if det.min() < 1e-8:
        raise PreconditionError("push-forwards of e2, e3 do not span the tangent planes")
    return [m * T for T in frame for m in _monomials(M, degree)]


@dataclass
class HessianMatrices:
    gram: np.ndarray
    A_E: np.ndarray
    A_F: np.ndarray
    asymmetry_E: float
    asymmetry_F: float
    fields: list = field(repr=False, default_factory=list)


def hessian_matrices(phi: SphereMap, degree: int = 3, crit_tol: float = 1e-6) -> HessianMatrices:
    """Gram and stiffness matrices of the E and F Hessians on Galerkin fields."""
    _require_critical(phi, crit_tol)
    M = phi.manifold
    B = galerkin_fields(phi, degree)
    LF = [jacobi_apply(phi, b, check=False) for b in B]
    LE = [energy_jacobi_apply(phi, b) for b in B]
    W = M.weights
    flat = lambda fs: np.stack([(f * np.sqrt(W)).ravel() for f in fs])
    Bm = flat(B)
    G = Bm @ Bm.T
    AF = Bm @ flat(LF).T
    AE = Bm @ flat(LE).T
    asym = lambda A: float(np.abs(A - A.T).max() / np.abs(A).max())
    return HessianMatrices(G, 0.5 * (AE + AE.T), 0.5 * (AF + AF.T), asym(AE), asym(AF), B)


def _reduced_eigs(A: np.ndarray, G: np.ndarray, k: int):
    # orthonormalize the (possibly ill-conditioned) Gram matrix first
    s, U = np.linalg.eigh(G)
    keep = s > 1e-10 * s.max()
    T = U[:, keep] / np.sqrt(s[keep])
    Ar = T.T @ A @ T
    vals, vecs = scipy.linalg.eigh(0.5 * (Ar + Ar.T))
    res = np.linalg.norm(Ar @ vecs - vecs * vals, axis=0)
    return vals[:k], T @ vecs[:, :k], res[:k]


def hessian_spectrum(phi: SphereMap, alpha: float | None = None, k: int = 6,
                     degree: int = 3, mats: HessianMatrices | None = None) -> SpectrumResult:
    """Smallest eigenvalues of Hess F (``alpha=None``) or Hess(E + alpha F)."""
    mats = mats or hessian_matrices(phi, degree)
    A = mats.A_F if alpha is None else mats.A_E + alpha * mats.A_F
    vals, coef, res = _reduced_eigs(A, mats.gram, k)
    vecs = [sum(c * b for c, b in zip(col, mats.fields)) for col in coef.T] if mats.fields else None
    tag = "hessian_F" if alpha is None else f"hessian_total({alpha:g})"
    M = phi.manifold
    return SpectrumResult(vals, vecs, tag, res, alpha=alpha, resolution=M.resolution, t=M.t)


@dataclass
class ThresholdScan:
    alphas: np.ndarray
    min_eigenvalues: np.ndarray
    alpha_star: float | None
    monotone: bool
    zero_tol: float

    def as_dict(self) -> dict:
        return {
            "alphas": [float(a) for a in self.alphas],
            "min_eigenvalues": [float(x) for x in self.min_eigenvalues],
            "alpha_star": self.alpha_star,
            "monotone": self.monotone,
        }


def stability_threshold_scan(phi: SphereMap, alpha_grid, degree: int = 3,
                             zero_tol: float = 1e-6, bisect_tol: float = 1e-4) -> ThresholdScan:
    """Smallest eigenvalue of Hess(E + alpha F) over ``alpha_grid``.

    An eigenvalue counts as negative below ``-zero_tol`` (isometries give
    exact zero modes).  ``alpha_star`` is located by bisection between the
    last negative and the first non-negative grid value.
    """
    M = phi.manifold
    if M.kind != "s3" or M.t != 1.0:
        raise DomainError("the stability scan runs on the round S^3")
    mats = hessian_matrices(phi, degree)
    lam = lambda a: _reduced_eigs(mats.A_E + a * mats.A_F, mats.gram, 1)[0][0]
    alphas = np.sort(np.asarray(alpha_grid, dtype=float))
    mins = np.array([lam(a) for a in alphas])
    monotone = bool(np.all(np.diff(mins) >= -zero_tol))
    neg = mins < -zero_tol
    star = None
    if neg.any() and not neg.all():
        i = int(np.nonzero(neg)[0].max())
        lo, hi = alphas[i], alphas[i + 1] if i + 1 < len(alphas) else None
        if hi is not None:
            while hi - lo > bisect_tol:
                mid = 0.5 * (lo + hi)
                if lam(mid) < -zero_tol:
                    lo = mid
                else:
                    hi = mid
            star = 0.5 * (lo + hi)
    return ThresholdScan(alphas, mins, star, monotone, zero_tol)
