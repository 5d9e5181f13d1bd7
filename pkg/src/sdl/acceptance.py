"""The ten acceptance checks, shared by the test suite and ``sdl verify``.

Each ``check_*`` function returns a :class:`CheckResult` holding the
measured quantities and whether every stated tolerance was met.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from sdl import lie
from sdl.dec import (
    DiffForm,
    build_s3_grid,
    build_t2_grid,
    codifferential,
    exterior_derivative,
    hodge_star,
    l2_inner,
    l2_norm,
)
from sdl.errors import NumericalError
from sdl.flow import FlowParams, gradient_flow
from sdl.maps import (
    antihopf_map,
    constant_map,
    criticality_residual,
    degree_map_t2,
    energy_dirichlet,
    energy_symplectic,
    hopf_map,
    perturbed_map,
    pullback_density_2d,
    pullback_omega,
    random_tangent,
    tangent_inner,
)
from sdl.spectral import (
    coexact_one_form_spectrum,
    jacobi_apply,
    second_variation_fd,
    stability_threshold_scan,
)
from sdl.topology import check_energy_bound, hopf_invariant

__all__ = ["CheckResult", "CHECKS", "run_all", "timed"]

PI2 = np.pi**2


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.name} ({self.seconds:.1f} s)"


def _rel(a, b):
    return abs(a - b) / abs(b)


def _random_form(M, degree, seed):
    from math import comb

    rng = np.random.default_rng(seed)
    c = rng.standard_normal((comb(M.dim, degree),) + M.shape)
    return DiffForm(degree, M.project_smooth(c, M.band_limit // 2), M)


def check_operators(res: int = 24) -> CheckResult:
    """1. Volume of S^3, d^2 = 0 and adjointness of d and delta."""
    M = build_s3_grid((res,) * 3)
    T = build_t2_grid((32, 32), (1.0, 1.5))
    vol_err = _rel(M.volume, 2 * PI2)
    d2, adj = 0.0, 0.0
    for G in (M, T):
        for k in range(G.dim - 1):
            a = _random_form(G, k, 10 + k)
            da = exterior_derivative(a)
            d2 = max(d2, l2_norm(exterior_derivative(da)) / l2_norm(da))
        for k in range(G.dim):
            a, b = _random_form(G, k, 20 + k), _random_form(G, k + 1, 30 + k)
            da = exterior_derivative(a)
            lhs, rhs = l2_inner(da, b), l2_inner(a, codifferential(b))
            adj = max(adj, abs(lhs - rhs) / (l2_norm(da) * l2_norm(b)))
    ok = vol_err <= 5e-3 and d2 <= 1e-6 and adj <= 1e-6
    return CheckResult(1, "volume and operator sanity", ok,
                       {"volume_rel_error": vol_err, "d2_rel": d2, "adjointness_rel": adj})


def _dstar_ratio(phi, factor):
    rho = pullback_omega(phi)
    lhs = exterior_derivative(hodge_star(rho))
    return l2_norm(lhs - rho * factor) / l2_norm(rho * factor)


def check_hopf_identities(res: int = 24) -> CheckResult:
    """2. Pointwise unit pullback, d*pi^*omega = 2t pi^*omega, criticality."""
    M = build_s3_grid((res,) * 3)
    h = hopf_map(M)
    rho = pullback_omega(h)
    unit = float(np.abs(np.sqrt(np.sum(rho.components**2, axis=0)) - 1).max())
    round_err = _dstar_ratio(h, 2.0)
    B = build_s3_grid((res,) * 3, t=0.5)
    berger_err = _dstar_ratio(hopf_map(B), 2 * 0.5)
    _, crit = criticality_residual(h)
    F = energy_symplectic(h)
    ok = unit <= 1e-6 and round_err <= 1e-2 and berger_err <= 1e-2 and crit <= 1e-6 * F
    return CheckResult(2, "Hopf-map identities", ok,
                       {"unit_defect": unit, "dstar_rel_error": round_err,
                        "berger_dstar_rel_error": berger_err, "criticality_residual": crit, "F": F})


def check_energy_constants(res: int = 24) -> CheckResult:
    """3. F = pi^2, E = 2 pi^2 and F_t = t pi^2."""
    h = hopf_map(build_s3_grid((res,) * 3))
    F, E = energy_symplectic(h), energy_dirichlet(h)
    d = {"F": F, "E": E}
    ok = _rel(F, PI2) <= 1e-2 and _rel(E, 2 * PI2) <= 1e-2
    for t in (0.25, 0.5, 0.75):
        Ft = energy_symplectic(hopf_map(build_s3_grid((res,) * 3, t=t)))
        d[f"F_t{t}"] = Ft
        ok = ok and _rel(Ft, t * PI2) <= 1e-2
    return CheckResult(3, "energy constants", ok, d)


def check_spectral_constant(res: int = 24, fine: int = 32) -> CheckResult:
    """4. lambda_1 = 4 on coexact 1-forms, refinement, Berger bound."""
    lam = coexact_one_form_spectrum(build_s3_grid((res,) * 3), 1).eigenvalues[0]
    lam_f = coexact_one_form_spectrum(build_s3_grid((fine,) * 3), 1).eigenvalues[0]
    lam_b = coexact_one_form_spectrum(build_s3_grid((res,) * 3, t=0.5), 1).eigenvalues[0]
    # "improving" allows for both errors sitting at the solver tolerance
    improving = abs(lam_f - 4) <= abs(lam - 4) + 1e-6
    ok = _rel(lam, 4.0) <= 2e-2 and improving and lam_b >= 1.0 - 1e-6
    return CheckResult(4, "coexact spectral constant", ok,
                       {"lambda1": lam, "lambda1_fine": lam_f, "lambda1_berger_0.5": lam_b})


def _random_map(M, seed):
    rng = np.random.default_rng(seed)
    base = [hopf_map, antihopf_map, constant_map][seed % 3](M)
    return perturbed_map(base, float(rng.uniform(0.05, 0.4)), seed)


def check_hopf_bound(res: int = 24, sweep_res: int = 24, count: int = 100) -> CheckResult:
    """5. H(pi) = pi^2, F - H = 0 at pi, F >= H over random maps."""
    bc = check_energy_bound(hopf_map(build_s3_grid((res,) * 3)))
    S = build_s3_grid((sweep_res,) * 3)
    worst = np.inf
    for seed in range(count):
        # sampling defects of strongly perturbed maps reach ~1e-3
        b = check_energy_bound(_random_map(S, seed), closed_tol=1e-2)
        worst = min(worst, b.slack / b.F)
    ok = _rel(bc.H, PI2) <= 1e-2 and abs(bc.slack) <= 1e-2 * bc.F and worst >= -1e-2
    return CheckResult(5, "Hopf invariant and energy bound", ok,
                       {"H": bc.H, "F": bc.F, "slack": bc.slack, "min_relative_slack": worst,
                        "maps": count})


def check_flow_minimality(res: int = 16, seeds=(0, 1, 2), amplitude: float = 0.05) -> CheckResult:
    """6. Perturbed Hopf maps flow back to F = pi^2 without changing H."""
    M = build_s3_grid((res,) * 3)
    h = hopf_map(M)
    out, ok = {}, True
    for s in seeds:
        phi0 = perturbed_map(h, amplitude, s)
        H0 = hopf_invariant(phi0)
        r = gradient_flow(phi0, FlowParams(max_steps=300, grad_tol=1e-8))
        F, H = energy_symplectic(r.phi), r.trajectory[-1].H
        drift = abs(H - H0)
        out[f"seed{s}"] = {"F0": energy_symplectic(phi0), "F": F, "H": H, "drift": drift}
        ok = ok and _rel(F, PI2) <= 1e-2 and drift <= 1e-2 * PI2
    return CheckResult(6, "minimality via pure-F flow", ok, out)


def check_stability_threshold(res: int = 24, directions: int = 20) -> CheckResult:
    """7. alpha* = 1 and the analytic Hessian against finite differences."""
    M = build_s3_grid((res,) * 3)
    h = hopf_map(M)
    grid = np.round(np.arange(0.0, 2.0001, 0.1), 10)
    scan = stability_threshold_scan(h, grid)
    worst = 0.0
    for s in range(directions):
        Y = random_tangent(h, 100 + s)
        q = tangent_inner(M, Y, jacobi_apply(h, Y))
        worst = max(worst, _rel(q, second_variation_fd(h, Y, "F")))
    at = dict(zip(grid, scan.min_eigenvalues))
    # the -1% band is taken relative to the unit eigenvalue scale of the round sphere
    ok = (scan.alpha_star is not None and abs(scan.alpha_star - 1) <= 0.05 and worst <= 1e-3
          and scan.monotone and at[2.0] >= -1e-2 and at[0.5] < -scan.zero_tol)
    return CheckResult(7, "stability threshold", ok,
                       {"alpha_star": scan.alpha_star, "min_eig_alpha_0.5": at[0.5],
                        "min_eig_alpha_2": at[2.0], "monotone": scan.monotone,
                        "fd_max_rel_error": worst})


def check_riemann_surface(res: int = 48, max_steps: int = 600, filter_degree: int = 8) -> CheckResult:
    """8. Degree-1 flow on T^2 towards F = pi^2 / (2 vol) with constant density."""
    T = build_t2_grid((res, res), (1.0, 1.0))
    target = PI2 / (2 * T.volume)
    try:
        r = gradient_flow(degree_map_t2(T, 1),
                          FlowParams(step=1e-3, max_steps=max_steps, grad_tol=1e-9,
                                     filter_degree=filter_degree))
        phi = r.phi
    except NumericalError as exc:
        return CheckResult(8, "Riemann-surface flow", False, {"error": str(exc), "F_target": target})
    F = energy_symplectic(phi)
    _, mean, rel_std = pullback_density_2d(phi)
    ok = _rel(F, target) <= 1e-2 and rel_std <= 1e-3
    return CheckResult(8, "Riemann-surface flow", ok,
                       {"F": F, "F_target": target, "F_ratio": F / target,
                        "density_mean": mean, "density_rel_std": rel_std,
                        "steps": len(r.trajectory) - 1, "converged": r.converged})


def check_lie(tol: float = 1e-10) -> CheckResult:
    """9. div f and delta phi^*omega vanish for SU(3) and SU(4) fibrations."""
    out, ok = {}, True
    for n, p0, p1 in ((3, "", "a1"), (4, "a2", "a2,a3")):
        R = lie.build_root_system(n)
        F = lie.build_fibration(R, p0, p1)
        _, div = lie.divergence_f(F)
        _, cod = lie.coderivative_pullback(F)
        orth = max(lie.orthogonality_check(R, a, b) for a in R.positive_roots for b in R.positive_roots)
        _, neg = lie.divergence_f(F, lie.perturbed_f(F))
        out[f"su{n}"] = {"div_f": div, "coderivative": cod, "orthogonality": orth,
                         "perturbed_div_f": neg}
        ok = ok and div <= tol and cod <= tol and orth <= 1e-12 and neg > 1e-6
    return CheckResult(9, "Lie-theoretic coclosedness", ok, out)


def check_phwc(res: int = 24) -> CheckResult:
    """10. The PHWC coderivative formula on the Hopf map."""
    r = lie.phwc_coderivative_numeric(hopf_map(build_s3_grid((res,) * 3)))
    return CheckResult(10, "PHWC coderivative formula", r["relative_residual"] <= 1e-2, r)


CHECKS = [
    check_operators,
    check_hopf_identities,
    check_energy_constants,
    check_spectral_constant,
    check_hopf_bound,
    check_flow_minimality,
    check_stability_threshold,
    check_riemann_surface,
    check_lie,
    check_phwc,
]


def timed(fn, *args, **kwargs) -> CheckResult:
    t0 = time.perf_counter()
    r = fn(*args, **kwargs)
    r.seconds = time.perf_counter() - t0
    return r


def run_all(echo=print) -> list[CheckResult]:
    results = []
    for fn in CHECKS:
        r = timed(fn)
        if echo:
            echo(r.line())
        results.append(r)
    return results
