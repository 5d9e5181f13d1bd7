"""Homogeneous fibrations of flag manifolds of SU(n) and their f-structures.

Everything is evaluated at the identity coset.  The metric on su(n) is
minus the Killing form, ``B(X, Y) = -2n tr(XY)``; the factor ``2n`` is kept
in :attr:`RootSystemData.killing_factor` so the trace-form normalization can
be recovered.  For a naturally reductive space the Levi-Civita connection
acts on invariant tensors through ``Lambda(X) Y = 1/2 [X, Y]_m``.

The module also contains :func:`phwc_coderivative_numeric`, which checks the
general coderivative formula for PHWC submersions on sampled S^3 maps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from sdl.errors import ConfigurationError, InputError, UnsupportedTargetError

__all__ = [
    "RootSystemData",
    "FlagFibration",
    "build_root_system",
    "parse_simple_roots",
    "build_fibration",
    "structure_tensor",
    "divergence_f",
    "coderivative_pullback",
    "coderivative_direct",
    "orthogonality_check",
    "killing_invariance_defect",
    "complex_structure_invariance_defect",
    "cosymplectic_defect",
    "perturbed_f",
    "fibration_record",
    "phwc_coderivative_numeric",
]


def _unit(n: int, i: int, j: int) -> np.ndarray:
    E = np.zeros((n, n), dtype=complex)
    E[i, j] = 1.0
    return E


@dataclass
class RootSystemData:
    """A_{n-1} root data with elementary-matrix root vectors.

    ``roots[k]`` is the integer vector e_i - e_j and ``root_pairs[k]`` the
    index pair (i, j), so the root space is spanned by ``E_ij``.
    """

    n: int
    roots: list[tuple[int, ...]]
    root_pairs: list[tuple[int, int]]
    positive_roots: list[int]
    simple_roots: list[int]
    root_spaces: list[np.ndarray] = field(repr=False)

    @property
    def killing_factor(self) -> float:
        """Ratio of minus the Killing form to minus the trace form."""
        return 2.0 * self.n

    def inner(self, X: np.ndarray, Y: np.ndarray) -> float:
        """Minus the Killing form on su(n)."""
        return float(-self.killing_factor * np.trace(X @ Y).real)

    def simple_coefficients(self, k: int) -> np.ndarray:
        """Coefficients of root k in the simple roots."""
        i, j = self.root_pairs[k]
        c = np.zeros(self.n - 1, dtype=int)
        lo, hi = min(i, j), max(i, j)
        c[lo:hi] = 1 if i < j else -1
        return c

    def index_of(self, i: int, j: int) -> int:
        return self.root_pairs.index((i, j))


def build_root_system(n: int) -> RootSystemData:
    """Roots e_i - e_j of sl(n, C), positive for i < j.

    Raises
    ------
    ConfigurationError
        If n is outside 2..8.
    """
    if not (2 <= int(n) <= 8):
        raise ConfigurationError(f"su(n) requires 2 <= n <= 8, got {n}")
    n = int(n)
    roots, pairs, spaces = [], [], []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            v = [0] * n
            v[i], v[j] = 1, -1
            roots.append(tuple(v))
            pairs.append((i, j))
            spaces.append(_unit(n, i, j))
    positive = [k for k, (i, j) in enumerate(pairs) if i < j]
    simple = [pairs.index((i, i + 1)) for i in range(n - 1)]
    return RootSystemData(n, roots, pairs, positive, simple, spaces)


def parse_simple_roots(labels, n: int) -> tuple[int, ...]:
    """Simple-root labels (``"a1,a3"``, ``[1, 3]`` or ``""``) as sorted 1-based ints."""
    if labels is None:
        return ()
    if isinstance(labels, str):
        items = [s.strip() for s in labels.replace(" ", ",").split(",") if s.strip()]
    else:
        items = list(labels)
    out = []
    for it in items:
        s = str(it).lower().lstrip("a")
        if not s.isdigit() or not (1 <= int(s) <= n - 1):
            raise InputError(f"unknown simple root {it!r} for su({n})")
        out.append(int(s))
    return tuple(sorted(set(out)))


def _in_span(R: RootSystemData, k: int, subset: tuple[int, ...]) -> bool:
    c = R.simple_coefficients(k)
    return all(c[s - 1] == 0 for s in range(1, R.n) if s not in subset)


@dataclass
class FlagFibration:
    """Fibration G/K0 -> G/K0' at the identity coset.

    ``m0_basis`` is ordered as pairs (X_alpha, Y_alpha) per positive root
    outside [Pi0], with J X_alpha = Y_alpha; ``roots`` lists those roots.
    """

    R: RootSystemData
    pi0: tuple[int, ...]
    pi0_prime: tuple[int, ...]
    roots: list[int]
    m0_basis: list[np.ndarray] = field(repr=False)
    f_matrix: np.ndarray = field(repr=False)
    J_matrix: np.ndarray = field(repr=False)
    vertical: list[int]
    horizontal: list[int]
    dilation: float = 1.0

    @property
    def dim_m0(self) -> int:
        return len(self.m0_basis)

    def gram(self) -> np.ndarray:
        B = self.m0_basis
        return np.array([[self.R.inner(a, b) for b in B] for a in B])

    def coords(self, Z: np.ndarray) -> np.ndarray:
        """Components of the m0 part of Z (orthonormal basis)."""
        return np.array([self.R.inner(e, Z) for e in self.m0_basis])


def build_fibration(R: RootSystemData, pi0, pi0_prime) -> FlagFibration:
    """Homogeneous fibration for nested simple-root subsets.

    The target must be Hermitian symmetric: Pi minus Pi0' is one simple root
    (every A_{n-1} simple root has coefficient 1 in the highest root), or is
    empty, in which case the target is a point.

    Raises
    ------
    InputError
        If the subsets are not nested.
    UnsupportedTargetError
        If the target is not Hermitian symmetric.
    """
    n = R.n
    p0 = parse_simple_roots(pi0, n)
    p1 = parse_simple_roots(pi0_prime, n)
    if not set(p0) <= set(p1):
        raise InputError(f"Pi0 = {p0} is not contained in Pi0' = {p1}")
    if len(p1) < n - 2:
        raise UnsupportedTargetError(
            f"target G/K0' with Pi0' = {p1} is not Hermitian symmetric for su({n})")
    c = 1.0 / np.sqrt(2.0 * R.killing_factor)
    roots, basis, vertical, horizontal = [], [], [], []
    for k in R.positive_roots:
        if _in_span(R, k, p0):
            continue
        i, j = R.root_pairs[k]
        E = _unit(n, i, j)
        idx = len(basis)
        basis += [c * (E - E.T), 1j * c * (E + E.T)]
        roots.append(k)
        (vertical if _in_span(R, k, p1) else horizontal).extend([idx, idx + 1])
    m = len(basis)
    J = np.zeros((m, m))
    for a in range(0, m, 2):
        J[a + 1, a], J[a, a + 1] = 1.0, -1.0
    P = np.zeros((m, m))
    P[horizontal, horizontal] = 1.0
    f = J @ P
    return FlagFibration(R, p0, p1, roots, basis, f, J, vertical, horizontal)


def structure_tensor(F: FlagFibration) -> np.ndarray:
    """``C[a, b, c] = <[e_a, e_b], e_c>`` on m0."""
    B = F.m0_basis
    m = len(B)
    C = np.zeros((m, m, m))
    for a in range(m):
        for b in range(a + 1, m):
            v = F.coords(B[a] @ B[b] - B[b] @ B[a])
            C[a, b], C[b, a] = v, -v
    return C


def divergence_f(F: FlagFibration, f: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    """``div f = sum_a (nabla_{e_a} f) e_a = 1/2 sum_a [e_a, f e_a]_m`` at o."""
    f = F.f_matrix if f is None else f
    C = structure_tensor(F)
    v = 0.5 * np.einsum("ba,abc->c", f, C)
    return v, float(np.linalg.norm(v))


def coderivative_pullback(F: FlagFibration, f: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    """``delta phi^* omega = -lambda^2 flat(div f)`` (horizontally homothetic case)."""
    v, _ = divergence_f(F, f)
    out = -F.dilation**2 * v
    return out, float(np.linalg.norm(out))


def coderivative_direct(F: FlagFibration, f: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    """delta of the invariant 2-form beta(X, Y) = lambda^2 g(f X, Y) from its definition.

    ``delta beta(Y) = -sum_a (nabla_{e_a} beta)(e_a, Y)`` with the
    connection acting by ``Lambda(e_a) = 1/2 ad(e_a)_m``.
    """
    f = F.f_matrix if f is None else f
    C = structure_tensor(F)
    out = 0.5 * F.dilation**2 * np.einsum("ba,acb->c", f, C)
    return out, float(np.linalg.norm(out))


def _real_basis(R: RootSystemData, k: int) -> list[np.ndarray]:
    i, j = R.root_pairs[k]
    i, j = min(i, j), max(i, j)
    E = _unit(R.n, i, j)
    c = 1.0 / np.sqrt(2.0 * R.killing_factor)
    return [c * (E - E.T), 1j * c * (E + E.T)]


def orthogonality_check(R: RootSystemData, alpha: int, beta: int) -> float:
    """max |<nabla_X Y, Z>| with X, Y in (g_alpha + g_-alpha) cap g, Z in the beta space.

    ``alpha`` and ``beta`` index ``R.roots`` and must be positive roots.
    The connection is that of G/T (m = all root spaces).
    """
    if alpha not in R.positive_roots or beta not in R.positive_roots:
        raise InputError("orthogonality check expects positive roots")
    worst = 0.0
    for X in _real_basis(R, alpha):
        for Y in _real_basis(R, alpha):
            br = X @ Y - Y @ X
            # the m-part of [X, Y] paired with Z; Lambda(X) Y = 1/2 [X, Y]_m
            for Z in _real_basis(R, beta):
                worst = max(worst, abs(0.5 * R.inner(br, Z)))
    return worst


def killing_invariance_defect(R: RootSystemData, trials: int = 20, seed: int = 0) -> float:
    """max |<[X,Y],Z> + <Y,[X,Z]>| over random su(n) triples."""
    rng = np.random.default_rng(seed)

    def rand():
        A = rng.standard_normal((R.n, R.n)) + 1j * rng.standard_normal((R.n, R.n))
        A = A - A.conj().T
        return A - np.trace(A) / R.n * np.eye(R.n)

    worst = 0.0
    for _ in range(trials):
        X, Y, Z = rand(), rand(), rand()
        worst = max(worst, abs(R.inner(X @ Y - Y @ X, Z) + R.inner(Y, X @ Z - Z @ X)))
    return worst


def complex_structure_invariance_defect(F: FlagFibration) -> float:
    """Largest component of [k0^C, m0^{1,0}] outside m0^{1,0}."""
    R, n = F.R, F.R.n
    k0 = [np.diag(np.r_[np.zeros(i), 1.0, -1.0, np.zeros(n - i - 2)]).astype(complex)
          for i in range(n - 1)]
    k0 += [R.root_spaces[k] for k in range(len(R.roots)) if _in_span(R, k, F.pi0)]
    mask = np.zeros((n, n), dtype=bool)
    for k in F.roots:
        mask[R.root_pairs[k]] = True
    worst = 0.0
    for K in k0:
        for k in F.roots:
            E = R.root_spaces[k]
            br = K @ E - E @ K
            worst = max(worst, float(np.abs(br[~mask]).max(initial=0.0)))
    return worst


def cosymplectic_defect(F: FlagFibration) -> float:
    """|delta omega| at o for the Kaehler form g(J., .) of G/K0 itself."""
    _, nrm = coderivative_direct(F, F.J_matrix)
    return nrm


def perturbed_f(F: FlagFibration, eps: float = 1e-2, seed: int = 0) -> np.ndarray:
    """f plus a small random skew matrix (no longer K0-invariant)."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((F.dim_m0, F.dim_m0))
    return F.f_matrix + eps * (A - A.T)


def fibration_record(F: FlagFibration, tol: float = 1e-10) -> dict:
    """JSON-ready summary with the list of checks that passed."""
    f = F.f_matrix
    _, div = divergence_f(F)
    _, cod = coderivative_pullback(F)
    _, direct = coderivative_direct(F)
    checks = {
        "gram_identity": float(np.abs(F.gram() - np.eye(F.dim_m0)).max(initial=0.0)) <= 1e-12,
        "f_structure": float(np.abs(f @ f @ f + f).max(initial=0.0)) <= 1e-12,
        "f_skew": float(np.abs(f + f.T).max(initial=0.0)) <= 1e-12,
        "div_f": div <= tol,
        "coderivative": cod <= tol,
        "coderivative_direct": direct <= tol,
        "complex_structure_invariant": complex_structure_invariance_defect(F) <= 1e-12,
        "cosymplectic": cosymplectic_defect(F) <= tol,
        "killing_ad_invariant": killing_invariance_defect(F.R) <= 1e-12,
    }
    return {
        "n": F.R.n,
        "Pi0": [f"a{i}" for i in F.pi0],
        "Pi0_prime": [f"a{i}" for i in F.pi0_prime],
        "dim_m0": F.dim_m0,
        "div_f_norm": div,
        "coderivative_norm": cod,
        "checks_passed": [k for k, ok in checks.items() if ok],
        "checks_failed": [k for k, ok in checks.items() if not ok],
    }


def phwc_coderivative_numeric(phi, rank_tol: float = 1e-8) -> dict:
    """Residual of the PHWC coderivative formula for a sampled S^3 map.

    Evaluates ``delta phi^* omega`` directly and through
    ``f div f _| phi^* omega - sum_a h(phi_* f e_a, nabla d phi(e_a, .))``
    with ``f = (d phi)^+ J d phi``, and returns both L^2 norms and the
    relative residual.
    """
    from sdl.dec import DiffForm, basis, codifferential, l2_norm
    from sdl.maps import pullback_omega, pushforward

    M = phi.manifold
    dim = M.dim
    n = phi.values
    dn = pushforward(phi)                        # (a, 3, grid)
    D = np.moveaxis(dn, (0, 1), (-1, -2))        # (grid, 3, a)
    Jm = np.zeros(M.shape + (3, 3))
    nn = np.moveaxis(n, 0, -1)
    Jm[..., 0, 1], Jm[..., 0, 2] = -nn[..., 2], nn[..., 1]
    Jm[..., 1, 0], Jm[..., 1, 2] = nn[..., 2], -nn[..., 0]
    Jm[..., 2, 0], Jm[..., 2, 1] = -nn[..., 1], nn[..., 0]
    Dp = np.linalg.pinv(D, rcond=rank_tol)
    fm = Dp @ Jm @ D                             # (grid, b, a): f e_a = sum_b f[b, a] e_b
    f = np.moveaxis(fm, (-2, -1), (0, 1))        # (b, a, grid)
    G = M.christoffel                            # G[a, b, c] = <nabla_a e_b, e_c>
    df = M.frame_derivatives(f)                  # (d, b, a, grid)
    divf = (np.einsum("aca...->c...", df)
            + np.einsum("ba...,abc->c...", f, G)
            - np.einsum("aad,cd...->c...", G, f))
    fdiv = np.einsum("cd...,d...->c...", f, divf)
    rho = pullback_omega(phi)
    R = np.zeros((dim, dim) + M.shape)
    for i, (a, b) in enumerate(basis(dim, 2)):
        R[a, b], R[b, a] = rho.components[i], -rho.components[i]
    term1 = np.einsum("a...,ab...->b...", fdiv, R)
    # nabla d phi(e_a, e_b) = P_T[e_a(d phi e_b)] - d phi(nabla_a e_b)
    ddn = M.frame_derivatives(dn)                # (a, b, 3, grid)
    ddn = ddn - np.einsum("abx...,x...->ab...", ddn, n)[:, :, None] * n[None, None]
    hess = ddn - np.einsum("abc,cx...->abx...", G, dn)
    pf = np.einsum("ba...,bx...->ax...", f, dn)  # phi_* f e_a
    term2 = np.einsum("ax...,abx...->b...", pf, hess)
    lhs = codifferential(rho)
    rhs = DiffForm(1, term1 - term2, M)
    nl = l2_norm(lhs)
    diff = l2_norm(lhs - rhs)
    return {
        "delta_norm": nl,
        "formula_norm": l2_norm(rhs),
        "residual": diff,
        "relative_residual": diff / nl if nl > 0 else diff,
    }


def dumps(record: dict) -> str:
    return json.dumps(record, indent=2, sort_keys=True)
