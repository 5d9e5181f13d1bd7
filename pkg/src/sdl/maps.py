"""Maps into the radius-1/2 sphere, their pullback area form and energies.

A map is stored as a unit vector field ``n``; its actual value is ``n / 2``.
Tangent vectors to the target (variations, push-forwards) are ambient
3-vectors orthogonal to ``n`` measured in the radius-1/2 metric, so the
complex structure is ``J Y = n x Y`` and the area form is
``omega(U, V) = n . (U x V)`` (total area pi).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from sdl.dec import (
    DiffForm,
    basis,
    DiscreteManifold,
    codifferential,
    exterior_derivative,
    hodge_star,
)
from sdl.errors import DomainError, UsageError

logger = logging.getLogger(__name__)

__all__ = [
    "SphereMap",
    "EnergyReport",
    "hopf_map",
    "constant_map",
    "antihopf_map",
    "conformal_rescale",
    "perturbed_map",
    "random_tangent",
    "degree_map_t2",
    "pushforward",
    "pullback_omega",
    "energy_dirichlet",
    "energy_symplectic",
    "energy_total",
    "criticality_residual",
    "gradient_F",
    "gradient_E",
    "tangent_inner",
    "pullback_density_2d",
    "geodesic_step",
]


def _normalize(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=0, keepdims=True)


def project_tangent(n: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return Y - np.sum(n * Y, axis=0) * n


@dataclass(eq=False)
class SphereMap:
    """Sampled map M -> S^2(1/2); ``values`` has shape (3, *grid)."""

    values: np.ndarray
    manifold: DiscreteManifold = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (3,) + self.manifold.shape:
            raise UsageError(f"map values need shape {(3,) + self.manifold.shape}, got {v.shape}")
        self.values = _normalize(v)

    @property
    def manifold_id(self) -> int:
        return self.manifold.id


@dataclass
class EnergyReport:
    E: float
    F: float
    alpha: float
    total: float
    H: float | None
    residual_norm: float

    def as_dict(self) -> dict:
        return {"E": self.E, "F": self.F, "alpha": self.alpha, "total": self.total,
                "H": self.H, "residual_norm": self.residual_norm}


def hopf_map(M: DiscreteManifold) -> SphereMap:
    """(z1, z2) -> (2 z1 conj(z2), |z1|^2 - |z2|^2), fibres along d/dxi1 + d/dxi2."""
    if M.kind != "s3":
        raise DomainError("the Hopf map needs an S^3 domain")
    x = M.embedding
    z1, z2 = x[0] + 1j * x[1], x[2] + 1j * x[3]
    w = 2 * z1 * np.conj(z2)
    return SphereMap(np.stack([w.real, w.imag, np.abs(z1) ** 2 - np.abs(z2) ** 2]), M)


def constant_map(M: DiscreteManifold, value=(0.0, 0.0, 1.0)) -> SphereMap:
    v = np.asarray(value, dtype=float).reshape((3,) + (1,) * M.dim)
    return SphereMap(v * np.ones((3,) + M.shape), M)


def antihopf_map(M: DiscreteManifold) -> SphereMap:
    """Hopf map precomposed with (z1, z2) -> (z1, conj(z2)); Hopf invariant -pi^2."""
    p = hopf_map(M)
    eta, x1, x2 = M.mesh
    s2 = np.sin(2 * eta)
    return SphereMap(np.stack([s2 * np.cos(x1 + x2), s2 * np.sin(x1 + x2), p.values[2]]), M)


def conformal_rescale(phi: SphereMap, k: float) -> SphereMap:
    """Compose with the Moebius dilation w -> k w in the stereographic chart."""
    n = phi.values
    # w = (n1 + i n2) / (1 - n3); written via (1 + n3) to stay finite at the north pole
    a = n[0] + 1j * n[1]
    # |w|^2 = (1 + n3) / (1 - n3); new n3 = (k^2 |w|^2 - 1) / (k^2 |w|^2 + 1)
    num = k**2 * (1 + n[2]) - (1 - n[2])
    den = k**2 * (1 + n[2]) + (1 - n[2])
    w_dir = 2 * k * a / den
    return SphereMap(np.stack([w_dir.real, w_dir.imag, num / den]), phi.manifold)


def _poly_field(M: DiscreteManifold, rng: np.random.Generator, degree: int) -> np.ndarray:
    """Random smooth R^3-valued field of low frequency on M."""
    if M.kind == "s3":
        x = M.embedding
        feats = [np.ones(M.shape)] + list(x)
        if degree >= 2:
            feats += [x[i] * x[j] for i in range(4) for j in range(i, 4)]
    else:
        X, Y = (2 * np.pi * m / L for m, L in zip(M.mesh, M.lengths))
        feats = [np.ones(M.shape)]
        for kx in range(-degree, degree + 1):
            for ky in range(-degree, degree + 1):
                if (kx, ky) != (0, 0):
                    feats += [np.cos(kx * X + ky * Y), np.sin(kx * X + ky * Y)]
    feats = np.array(feats)
    c = rng.normal(size=(3, len(feats)))
    return np.einsum("ck,k...->c...", c, feats)


def perturbed_map(phi: SphereMap, amplitude: float, seed: int, degree: int = 2) -> SphereMap:
    """``normalize(n + amplitude * P)`` with a random low-frequency field P, max |P| = 1."""
    rng = np.random.default_rng(seed)
    P = _poly_field(phi.manifold, rng, degree)
    P /= np.linalg.norm(P, axis=0).max()
    return SphereMap(phi.values + amplitude * P, phi.manifold)


def random_tangent(phi: SphereMap, seed: int, degree: int = 2) -> np.ndarray:
    """Random smooth variation field along ``phi`` with unit L^2 norm."""
    rng = np.random.default_rng(seed)
    Y = project_tangent(phi.values, _poly_field(phi.manifold, rng, degree))
    return Y / np.sqrt(tangent_inner(phi.manifold, Y, Y))


def _theta1(z: np.ndarray, q: float, terms: int = 12) -> np.ndarray:
    out = np.zeros_like(z, dtype=complex)
    for n in range(terms):
        out += (-1) ** n * q ** ((n + 0.5) ** 2) * np.sin((2 * n + 1) * np.pi * z)
    return 2 * out


def degree_map_t2(M: DiscreteManifold, degree: int = 1) -> SphereMap:
    """Smooth map T^2 -> S^2 of the given degree built from theta-function quotients.

    With lattice coordinates z = x/L1 + tau y/L2 (tau = i L2/L1), the quotient
    prod theta(z - a_k) / prod theta(z - b_k), times a unimodular factor
    fixing the tau-periodicity, is a doubly periodic function with |degree|
    zeros and poles; its inverse stereographic image has that degree.
    """
    if M.kind != "t2":
        raise DomainError("degree_map_t2 needs a torus domain")
    L1, L2 = M.lengths
    tau = 1j * L2 / L1
    q = np.exp(1j * np.pi * tau).real
    X, Y = M.mesh
    u, v = X / L1, Y / L2
    d = abs(int(degree))
    z = u + tau * v
    P = np.ones(M.shape, dtype=complex)
    Q = np.ones(M.shape, dtype=complex)
    shift = 0.0
    for k in range(d):
        # equal imaginary parts keep sum(a - b) real, so the fix-up factor is unimodular
        a = (k + 0.25) / d + 0.45 * tau
        b = (k + 0.75) / d + 0.45 * tau
        P *= _theta1(z - a, q)
        Q *= _theta1(z - b, q)
        shift += (a - b).real
    P *= np.exp(-2j * np.pi * shift * v)
    w = P * np.conj(Q)
    n = np.stack([2 * w.real, 2 * w.imag, np.abs(P) ** 2 - np.abs(Q) ** 2]) / (np.abs(P) ** 2 + np.abs(Q) ** 2)
    # the quotient is orientation-reversing for the coframe orientation dx ^ dy
    if degree > 0:
        n[1] *= -1
    return SphereMap(n, M)


def pushforward(phi: SphereMap) -> np.ndarray:
    """``d phi(e_a)`` for each frame vector, shape (dim, 3, *grid)."""
    return 0.5 * phi.manifold.frame_derivatives(phi.values)


def pullback_omega(phi: SphereMap) -> DiffForm:
    """Pullback of the radius-1/2 area form, components in the coframe basis."""
    M = phi.manifold
    n = phi.values
    dn = pushforward(phi)
    comps = [np.sum(n * np.cross(dn[a], dn[b], axis=0), axis=0) for a, b in basis(M.dim, 2)]
    return DiffForm(2, np.array(comps), M)


def tangent_inner(M: DiscreteManifold, X: np.ndarray, Y: np.ndarray) -> float:
    """L^2 inner product of two fields along a map."""
    return float(np.sum(M.weights * np.sum(X * Y, axis=0)))


def energy_dirichlet(phi: SphereMap) -> float:
    dn = pushforward(phi)
    return 0.5 * float(np.sum(phi.manifold.weights * np.sum(dn**2, axis=(0, 1))))


def energy_symplectic(phi: SphereMap) -> float:
    rho = pullback_omega(phi)
    return 0.5 * float(np.sum(phi.manifold.weights * np.sum(rho.components**2, axis=0)))


def criticality_residual(phi: SphereMap, rho: DiffForm | None = None) -> tuple[np.ndarray, float]:
    """``d phi(Z)`` with ``Z = sharp(delta phi^* omega)`` and its L^2 norm."""
    if rho is None:
        rho = pullback_omega(phi)
    Z = codifferential(rho).components
    dn = pushforward(phi)
    field_ = np.einsum("a...,ac...->c...", Z, dn)
    return field_, float(np.sqrt(tangent_inner(phi.manifold, field_, field_)))


def gradient_F(phi: SphereMap) -> np.ndarray:
    """L^2 gradient of F: dF(X) = <X, grad> with grad = -J d phi(Z)."""
    r, _ = criticality_residual(phi)
    return -np.cross(phi.values, r, axis=0)


def gradient_E(phi: SphereMap) -> np.ndarray:
    """L^2 gradient of E, minus the tension field: P_T(Delta u) with u = n / 2."""
    M = phi.manifold
    lap = np.array([codifferential(exterior_derivative(DiffForm(0, c[None], M))).components[0]
                    for c in phi.values])
    return project_tangent(phi.values, 0.5 * lap)


def energy_total(phi: SphereMap, alpha: float, with_hopf: bool = True) -> EnergyReport:
    """E, F, E + alpha F, the Hopf invariant (S^3) and the criticality residual."""
    E = energy_dirichlet(phi)
    rho = pullback_omega(phi)
    F = 0.5 * float(np.sum(phi.manifold.weights * np.sum(rho.components**2, axis=0)))
    _, res = criticality_residual(phi, rho)
    H = None
    if with_hopf and phi.manifold.kind == "s3":
        from sdl.topology import hopf_invariant
        H = hopf_invariant(phi)
    return EnergyReport(E=E, F=F, alpha=float(alpha), total=E + alpha * F, H=H, residual_norm=res)


def geodesic_step(phi: SphereMap, X: np.ndarray, s: float) -> SphereMap:
    """Move each value along the target geodesic with initial velocity ``s X``.

    ``X`` is measured in the radius-1/2 metric, so n rotates by angle 2 s |X|.
    """
    n = phi.values
    speed = np.linalg.norm(X, axis=0)
    ang = 2.0 * s * speed
    safe = np.where(speed > 0, speed, 1.0)
    new = np.cos(ang) * n + np.sin(ang) * X / safe
    return SphereMap(np.where(speed > 0, new, n), phi.manifold)


def pullback_density_2d(phi: SphereMap) -> tuple[np.ndarray, float, float]:
    """Density f with phi^* omega = f vol, its mean and relative standard deviation."""
    M = phi.manifold
    if M.dim != 2:
        raise DomainError("pullback density is defined on 2-dimensional domains")
    f = hodge_star(pullback_omega(phi)).components[0]
    w = M.weights / M.weights.sum()
    mean = float(np.sum(w * f))
    std = float(np.sqrt(np.sum(w * (f - mean) ** 2)))
    rel = std / abs(mean) if mean != 0 else (0.0 if std == 0 else np.inf)
    return f, mean, rel
