"""Collocation exterior calculus on S^3 (Berger metrics) and flat tori.

Forms are stored by their components in an orthonormal coframe, one array
per increasing multi-index.  On S^3 the coframe is the left-invariant one
built from the Hopf fibre direction, so form components are smooth global
functions and the only coordinate singularities are in the conversion of
frame derivatives to Hopf-coordinate derivatives.  Coordinate derivatives
are spectral along every axis: the Hopf coordinates extend to a 2*pi
periodic eta-line through the symmetries (-eta, xi1, xi2 + pi) and
(pi - eta, xi1 + pi, xi2), which is why the xi resolutions must be even.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from math import comb

import numpy as np

from sdl.errors import ConfigurationError, DegreeError, DomainError, UsageError

__all__ = [
    "DiscreteManifold",
    "DiffForm",
    "build_s3_grid",
    "build_t2_grid",
    "exterior_derivative",
    "hodge_star",
    "codifferential",
    "hodge_laplacian",
    "wedge",
    "l2_inner",
    "l2_norm",
    "integrate",
    "pointwise_inner",
    "zero_form",
    "constant_form",
    "volume_form",
    "basis",
]

_ids = itertools.count(1)


def basis(dim: int, degree: int) -> list[tuple[int, ...]]:
    """Increasing multi-indices labelling the components of a degree-k form."""
    return list(itertools.combinations(range(dim), degree))


def _perm_sign(seq) -> int:
    """Sign of the permutation sorting ``seq`` (0 if it has repeats)."""
    seq = list(seq)
    if len(set(seq)) < len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def _spectral_diff(f: np.ndarray, axis: int, period: float) -> np.ndarray:
    n = f.shape[axis]
    fh = np.fft.rfft(f, axis=axis)
    k = 2.0 * np.pi / period * np.arange(fh.shape[axis])
    if n % 2 == 0:
        k[-1] = 0.0
    shape = [1] * f.ndim
    shape[axis] = -1
    return np.fft.irfft(fh * (1j * k).reshape(shape), n=n, axis=axis)


def _fd4_diff(f: np.ndarray, axis: int, period: float) -> np.ndarray:
    h = period / f.shape[axis]
    return (
        -np.roll(f, -2, axis) + 8.0 * np.roll(f, -1, axis)
        - 8.0 * np.roll(f, 1, axis) + np.roll(f, 2, axis)
    ) / (12.0 * h)


class DiscreteManifold:
    """Sampled Riemannian domain with an orthonormal frame and quadrature.

    Use :func:`build_s3_grid` or :func:`build_t2_grid` rather than the
    constructor.

    Attributes
    ----------
    kind : {"s3", "t2"}
    resolution : tuple of int
    t : float or None
        Berger parameter (S^3 only).
    lengths : tuple of float or None
        Periods (torus only).
    coords : tuple of ndarray
        1-D coordinate samples per axis.
    weights : ndarray
        Per-node volume weights.
    frame_coef : ndarray, shape (dim, dim, *grid)
        ``frame_coef[a, c]`` is the coefficient of the c-th coordinate
        vector field in the frame vector ``e_a``.
    structure : ndarray, shape (dim, dim, dim)
        ``[e_a, e_b] = sum_c structure[a, b, c] e_c`` (constant).
    scheme : {"spectral", "fd4"}
        Differentiation scheme for coordinate derivatives.
    """

    def __init__(self, kind, resolution, coords, weights, frame_coef, structure,
                 periods, t=None, lengths=None, scheme="spectral"):
        self.kind = kind
        self.resolution = tuple(int(r) for r in resolution)
        self.coords = coords
        self.weights = weights
        self.frame_coef = frame_coef
        self.structure = structure
        self.periods = periods
        self.t = t
        self.lengths = lengths
        self.scheme = scheme
        self.id = next(_ids)

    def __repr__(self) -> str:
        extra = f"t={self.t}" if self.kind == "s3" else f"lengths={self.lengths}"
        return f"DiscreteManifold({self.kind}, {self.resolution}, {extra}, scheme={self.scheme!r})"

    @property
    def dim(self) -> int:
        return len(self.resolution)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.resolution

    @property
    def volume(self) -> float:
        return float(self.weights.sum())

    def descriptor(self) -> dict:
        """JSON-friendly description sufficient to rebuild the grid."""
        d = {"kind": self.kind, "resolution": list(self.resolution), "scheme": self.scheme}
        if self.kind == "s3":
            d["t"] = self.t
            d["orientation"] = "theta1^theta2^theta3 (fibre, horizontal, horizontal) positive"
        else:
            d["lengths"] = list(self.lengths)
        return d

    @cached_property
    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.coords, indexing="ij"))

    @cached_property
    def metric(self) -> np.ndarray:
        """Coordinate-frame metric, shape (*grid, dim, dim)."""
        fr = np.moveaxis(self.frame_coef, (0, 1), (-2, -1))
        coframe = np.linalg.inv(fr)  # (grid, coord, a)
        return np.einsum("...ca,...da->...cd", coframe, coframe)

    @cached_property
    def embedding(self) -> np.ndarray:
        """Node positions in R^4 (S^3) or the coordinate plane (torus)."""
        if self.kind == "s3":
            eta, x1, x2 = self.mesh
            return np.stack([np.cos(eta) * np.cos(x1), np.cos(eta) * np.sin(x1),
                             np.sin(eta) * np.cos(x2), np.sin(eta) * np.sin(x2)])
        return np.stack(self.mesh)

    @cached_property
    def fiber_direction(self) -> np.ndarray | None:
        """Unit vertical vector in coordinate components (S^3 only)."""
        if self.kind != "s3":
            return None
        return self.frame_coef[0].copy()

    def _extend_eta(self, f: np.ndarray) -> np.ndarray:
        n1, n2 = self.resolution[1] // 2, self.resolution[2] // 2
        rev = f[..., ::-1, :, :]
        return np.concatenate([
            f,
            np.roll(rev, n1, axis=-2),
            np.roll(np.roll(f, n1, axis=-2), n2, axis=-1),
            np.roll(rev, n2, axis=-1),
        ], axis=-3)

    def partial(self, f: np.ndarray, c: int) -> np.ndarray:
        """Coordinate derivative along axis ``c`` of a (batched) grid array."""
        axis = f.ndim - self.dim + c
        diff = _spectral_diff if self.scheme == "spectral" else _fd4_diff
        if self.kind == "s3" and c == 0:
            ext = self._extend_eta(f)
            return diff(ext, axis, 2.0 * np.pi)[..., : self.resolution[0], :, :]
        return diff(f, axis, self.periods[c])

    def frame_derivatives(self, f: np.ndarray) -> np.ndarray:
        """``e_a f`` for every frame vector; result shape (dim, *f.shape)."""
        parts = [self.partial(f, c) for c in range(self.dim)]
        out = np.zeros((self.dim,) + f.shape)
        for a in range(self.dim):
            for c in range(self.dim):
                coef = self.frame_coef[a, c]
                if np.any(coef != 0.0):
                    out[a] += coef * parts[c]
        return out

    def directional(self, f: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Derivative of ``f`` along the vector field with frame components ``v``."""
        grads = self.frame_derivatives(f)
        return sum(v[a] * grads[a] for a in range(self.dim))

    @property
    def band_limit(self) -> int:
        """Largest polynomial degree L for which grid operators act exactly.

        Restrictions of polynomials of degree <= L on R^4 are differentiated
        exactly by the spectral stencils, and products of two of them are
        integrated exactly by the quadrature.  On the torus L is the largest
        resolved Fourier wavenumber.
        """
        if self.kind == "s3":
            ne, n1, n2 = self.resolution
            return min(n1 // 2 - 1, n2 // 2 - 1, ne - 1)
        return min(self.resolution) // 2 - 1

    def _eta_projectors(self, L: int) -> dict:
        cache = self.__dict__.setdefault("_proj_cache", {})
        if L in cache:
            return cache[L]
        eta = self.coords[0]
        w = 0.25 * _fejer_weights(self.resolution[0])
        mats = {}
        for p in range(L + 1):
            for q in range(L + 1 - p):
                J = (L - p - q) // 2
                B = np.array([np.cos(eta) ** p * np.sin(eta) ** q * np.cos(2 * j * eta)
                              for j in range(J + 1)]).T
                Q, _ = np.linalg.qr(np.sqrt(w)[:, None] * B)
                Q = Q / np.sqrt(w)[:, None]
                mats[p, q] = (Q * w[:, None]).T, Q
        cache[L] = mats
        return mats

    def project_smooth(self, f: np.ndarray, L: int | None = None) -> np.ndarray:
        """L^2-orthogonal projection of (batched) grid arrays onto degree <= L.

        On S^3 the target space is the restriction of polynomials of degree
        <= L in the ambient coordinates; on the torus it is the Fourier
        modes with |k_i| <= L.
        """
        L = self.band_limit if L is None else int(L)
        if self.kind == "t2":
            fh = np.fft.fft2(f, axes=(-2, -1))
            k1 = np.abs(np.fft.fftfreq(self.resolution[0], 1.0 / self.resolution[0]))
            k2 = np.abs(np.fft.fftfreq(self.resolution[1], 1.0 / self.resolution[1]))
            mask = (k1[:, None] <= L) & (k2[None, :] <= L)
            return np.fft.ifft2(fh * mask, axes=(-2, -1)).real
        ne, n1, n2 = self.resolution
        fh = np.fft.fft2(f, axes=(-2, -1))
        out = np.zeros_like(fh)
        for (p, q), (left, Q) in self._eta_projectors(L).items():
            i1 = sorted({p % n1, (-p) % n1})
            i2 = sorted({q % n2, (-q) % n2})
            for a in i1:
                for b in i2:
                    out[..., :, a, b] = np.einsum("ij,...j->...i", Q, np.einsum("ij,...j->...i", left, fh[..., :, a, b]))
        return np.fft.ifft2(out, axes=(-2, -1)).real

    @cached_property
    def christoffel(self) -> np.ndarray:
        """``<nabla_{e_a} e_b, e_c>`` for the constant-structure frame."""
        C = self.structure
        # Koszul formula for an orthonormal frame with constant brackets.
        # <nabla_a e_b, e_c> = (C_abc - C_bca + C_cab) / 2
        return 0.5 * (C - np.transpose(C, (2, 0, 1)) + np.transpose(C, (1, 2, 0)))


def _fejer_weights(n: int) -> np.ndarray:
    theta = (2 * np.arange(n) + 1) * np.pi / (2 * n)
    j = np.arange(1, n // 2 + 1)
    s = (np.cos(2 * np.outer(theta, j)) / (4 * j**2 - 1)).sum(axis=1)
    return 2.0 / n * (1.0 - 2.0 * s)


def build_s3_grid(resolution, t: float = 1.0, scheme: str = "spectral") -> DiscreteManifold:
    """Hopf-coordinate grid on the Berger sphere (S^3, t^2 g_V + g_H).

    Nodes sit at eta = (i + 1/2) pi / (2 N_eta), xi_k = 2 pi k / N_k.  The
    orthonormal frame is e1 = V / t, e2, e3 with V = d/dxi1 + d/dxi2 the
    unit Hopf fibre field of the round metric.

    Raises
    ------
    ConfigurationError
        If any resolution is below 8 or an xi resolution is odd.
    DomainError
        If ``t`` is not in (0, 1].
    """
    res = tuple(int(r) for r in resolution)
    if len(res) != 3 or min(res) < 8:
        raise ConfigurationError(f"S^3 grid needs three resolutions >= 8, got {resolution}")
    if res[1] % 2 or res[2] % 2:
        raise ConfigurationError("xi resolutions must be even (pole continuation shifts by pi)")
    if not (0.0 < t <= 1.0):
        raise DomainError(f"Berger parameter must lie in (0, 1], got {t}")
    if scheme not in ("spectral", "fd4"):
        raise ConfigurationError(f"unknown differentiation scheme {scheme!r}")
    ne, n1, n2 = res
    eta = (np.arange(ne) + 0.5) * np.pi / (2 * ne)
    xi1 = 2 * np.pi * np.arange(n1) / n1
    xi2 = 2 * np.pi * np.arange(n2) / n2
    E, X1, X2 = np.meshgrid(eta, xi1, xi2, indexing="ij")
    psi = X1 + X2
    tan, cot = np.tan(E), 1.0 / np.tan(E)
    one, zero = np.ones_like(E), np.zeros_like(E)
    coef = np.array([
        [zero, one / t, one / t],
        [np.cos(psi), tan * np.sin(psi), -cot * np.sin(psi)],
        [np.sin(psi), -tan * np.cos(psi), cot * np.cos(psi)],
    ])
    C = np.zeros((3, 3, 3))
    C[0, 1, 2], C[1, 0, 2] = -2.0 / t, 2.0 / t
    C[1, 2, 0], C[2, 1, 0] = -2.0 * t, 2.0 * t
    C[2, 0, 1], C[0, 2, 1] = -2.0 / t, 2.0 / t
    w_eta = 0.25 * _fejer_weights(ne)
    weights = t * w_eta[:, None, None] * (2 * np.pi / n1) * (2 * np.pi / n2) * np.ones(res)
    return DiscreteManifold("s3", res, (eta, xi1, xi2), weights, coef, C,
                            periods=(2 * np.pi, 2 * np.pi, 2 * np.pi), t=float(t), scheme=scheme)


def build_t2_grid(resolution, lengths, scheme: str = "spectral") -> DiscreteManifold:
    """Flat periodic torus [0, L1) x [0, L2) with the coordinate frame."""
    res = tuple(int(r) for r in resolution)
    if len(res) != 2 or min(res) < 8:
        raise ConfigurationError(f"torus grid needs two resolutions >= 8, got {resolution}")
    L = tuple(float(x) for x in lengths)
    if len(L) != 2 or min(L) <= 0:
        raise DomainError(f"torus lengths must be positive, got {lengths}")
    if scheme not in ("spectral", "fd4"):
        raise ConfigurationError(f"unknown differentiation scheme {scheme!r}")
    coords = tuple(L[i] * np.arange(res[i]) / res[i] for i in range(2))
    coef = np.zeros((2, 2) + res)
    coef[0, 0] = coef[1, 1] = 1.0
    weights = np.full(res, L[0] * L[1] / (res[0] * res[1]))
    return DiscreteManifold("t2", res, coords, weights, coef, np.zeros((2, 2, 2)),
                            periods=L, lengths=L, scheme=scheme)


@dataclass(eq=False)
class DiffForm:
    """Degree-k form; ``components[i]`` pairs with ``basis(dim, k)[i]``."""

    degree: int
    components: np.ndarray
    manifold: DiscreteManifold = field(repr=False)

    def __post_init__(self):
        self.components = np.asarray(self.components, dtype=float)
        ncomp = comb(self.manifold.dim, self.degree)
        if self.components.shape != (ncomp,) + self.manifold.shape:
            raise UsageError(
                f"degree-{self.degree} form on {self.manifold.shape} needs shape "
                f"{(ncomp,) + self.manifold.shape}, got {self.components.shape}")

    @property
    def manifold_id(self) -> int:
        return self.manifold.id

    def _check(self, other: "DiffForm") -> None:
        if other.manifold is not self.manifold:
            raise UsageError("forms live on different manifolds")

    def __add__(self, other):
        self._check(other)
        if other.degree != self.degree:
            raise DegreeError("cannot add forms of different degree")
        return DiffForm(self.degree, self.components + other.components, self.manifold)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, c):
        return DiffForm(self.degree, np.asarray(c) * self.components, self.manifold)

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def component(self, idx: tuple[int, ...]) -> np.ndarray:
        return self.components[basis(self.manifold.dim, self.degree).index(tuple(idx))]


def zero_form(M: DiscreteManifold, degree: int) -> DiffForm:
    return DiffForm(degree, np.zeros((comb(M.dim, degree),) + M.shape), M)


def constant_form(M: DiscreteManifold, degree: int, values) -> DiffForm:
    """Form with constant frame components ``values`` (length C(dim, k))."""
    values = np.asarray(values, dtype=float).reshape((-1,) + (1,) * M.dim)
    return DiffForm(degree, values * np.ones(M.shape), M)


def volume_form(M: DiscreteManifold) -> DiffForm:
    return DiffForm(M.dim, np.ones((1,) + M.shape), M)


def _eval(form_comps: np.ndarray, index: dict, idx) -> tuple[int, int]:
    """Position and sign of an unsorted multi-index, or (None, 0)."""
    s = _perm_sign(idx)
    if s == 0:
        return None, 0
    return index[tuple(sorted(idx))], s


def exterior_derivative(f: DiffForm) -> DiffForm:
    """Exterior derivative via the invariant formula in the orthonormal frame."""
    M, k = f.manifold, f.degree
    if k >= M.dim:
        raise DegreeError(f"no exterior derivative of a top-degree ({k}) form")
    src = basis(M.dim, k)
    index = {I: i for i, I in enumerate(src)}
    grads = M.frame_derivatives(f.components)  # (a, comp, grid)
    C = M.structure
    out = np.zeros((comb(M.dim, k + 1),) + M.shape)
    for n, J in enumerate(basis(M.dim, k + 1)):
        acc = out[n]
        for m, j in enumerate(J):
            rest = J[:m] + J[m + 1:]
            acc += (-1) ** m * grads[j, index[rest]]
        for m in range(len(J)):
            for l in range(m + 1, len(J)):
                rest = tuple(x for i, x in enumerate(J) if i not in (m, l))
                for c in range(M.dim):
                    coeff = C[J[m], J[l], c]
                    if coeff == 0.0:
                        continue
                    pos, s = _eval(f.components, index, (c,) + rest)
                    if s:
                        acc += (-1) ** (m + l) * coeff * s * f.components[pos]
    return DiffForm(k + 1, out, M)


def hodge_star(f: DiffForm) -> DiffForm:
    """Pointwise Hodge star for the orientation e_1 ^ ... ^ e_n."""
    M, k = f.manifold, f.degree
    n = M.dim
    tgt = basis(n, n - k)
    tindex = {I: i for i, I in enumerate(tgt)}
    out = np.zeros((len(tgt),) + M.shape)
    for i, I in enumerate(basis(n, k)):
        Ic = tuple(x for x in range(n) if x not in I)
        out[tindex[Ic]] = _perm_sign(I + Ic) * f.components[i]
    return DiffForm(n - k, out, M)


def codifferential(f: DiffForm) -> DiffForm:
    """Formal L^2 adjoint of d: (-1)^(n(k+1)+1) * d *."""
    M, k = f.manifold, f.degree
    if k == 0:
        raise DegreeError("codifferential of a 0-form is undefined")
    sign = (-1) ** (M.dim * (k + 1) + 1)
    return sign * hodge_star(exterior_derivative(hodge_star(f)))


def hodge_laplacian(f: DiffForm) -> DiffForm:
    """Positive Hodge Laplacian d delta + delta d."""
    k, n = f.degree, f.manifold.dim
    out = zero_form(f.manifold, k)
    if k > 0:
        out = out + exterior_derivative(codifferential(f))
    if k < n:
        out = out + codifferential(exterior_derivative(f))
    return out


def wedge(f: DiffForm, g: DiffForm) -> DiffForm:
    f._check(g)
    M = f.manifold
    j, k = f.degree, g.degree
    if j + k > M.dim:
        raise DegreeError(f"wedge of degrees {j} and {k} exceeds dimension {M.dim}")
    tindex = {I: i for i, I in enumerate(basis(M.dim, j + k))}
    out = np.zeros((len(tindex),) + M.shape)
    for a, I in enumerate(basis(M.dim, j)):
        for b, J in enumerate(basis(M.dim, k)):
            s = _perm_sign(I + J)
            if s:
                out[tindex[tuple(sorted(I + J))]] += s * f.components[a] * g.components[b]
    return DiffForm(j + k, out, M)


def pointwise_inner(f: DiffForm, g: DiffForm) -> np.ndarray:
    f._check(g)
    if f.degree != g.degree:
        raise DegreeError("inner product needs equal degrees")
    return np.einsum("i...,i...->...", f.components, g.components)


def integrate(f: DiffForm) -> float:
    """Integral of a top-degree form."""
    if f.degree != f.manifold.dim:
        raise DegreeError("only top-degree forms can be integrated")
    return float(np.sum(f.manifold.weights * f.components[0]))


def l2_inner(f: DiffForm, g: DiffForm) -> float:
    return float(np.sum(f.manifold.weights * pointwise_inner(f, g)))


def l2_norm(f: DiffForm) -> float:
    return float(np.sqrt(max(l2_inner(f, f), 0.0)))
