import numpy as np
import pytest

from conftest import smooth_form
from sdl.dec import (
    DiffForm,
    build_s3_grid,
    codifferential,
    exterior_derivative,
    hodge_star,
    integrate,
    l2_norm,
    wedge,
    zero_form,
)
from sdl.errors import DomainError, InputError
from sdl.maps import antihopf_map, constant_map, energy_symplectic, hopf_map, perturbed_map, pullback_omega
from sdl.topology import (
    check_energy_bound,
    coexact_project,
    hopf_class,
    hopf_invariant,
    solve_coexact_potential,
)

PI2 = np.pi**2


def test_hopf_potential_is_half_star(hopf24):
    rho = pullback_omega(hopf24)
    sol = solve_coexact_potential(rho)
    ref = hodge_star(rho) * 0.5
    assert l2_norm(sol.A - ref) <= 1e-2 * l2_norm(ref)
    assert l2_norm(codifferential(sol.A)) <= 1e-8 * l2_norm(sol.A)
    assert sol.residual <= 1e-8


def test_zero_form_potential(s3_16):
    sol = solve_coexact_potential(zero_form(s3_16, 2))
    assert l2_norm(sol.A) == 0.0


def test_recovers_coexact_potential(s3_16):
    beta = coexact_project(smooth_form(s3_16, 1, 4, L=4))
    sol = solve_coexact_potential(exterior_derivative(beta))
    assert l2_norm(sol.A - beta) <= 1e-6 * l2_norm(beta)


def test_rejects_non_closed(s3_16):
    rho = smooth_form(s3_16, 2, 8, L=4)
    with pytest.raises(InputError):
        solve_coexact_potential(rho)


def test_torus_rejected(torus):
    with pytest.raises(DomainError):
        solve_coexact_potential(zero_form(torus, 2))


def test_hopf_invariant_values(hopf24, s3_16):
    assert hopf_invariant(hopf24) == pytest.approx(PI2, rel=1e-2)
    assert abs(hopf_invariant(constant_map(s3_16))) <= 1e-6
    assert hopf_invariant(antihopf_map(s3_16)) == pytest.approx(-PI2, rel=1e-2)


def test_metric_independence():
    H = hopf_invariant(hopf_map(build_s3_grid((16, 16, 16), t=0.5)))
    assert H == pytest.approx(PI2, rel=1e-2)


@pytest.mark.parametrize("t", [0.25, 0.5, 0.75, 1.0])
def test_berger_chain(t):
    h = hopf_map(build_s3_grid((16, 16, 16), t=t))
    assert energy_symplectic(h) == pytest.approx(t * hopf_invariant(h), rel=1e-2)


def test_gauge_independence(s3_16):
    phi = perturbed_map(hopf_map(s3_16), 0.1, 5)
    A = solve_coexact_potential(pullback_omega(phi)).A
    H = integrate(wedge(exterior_derivative(A), A))
    b = smooth_form(s3_16, 0, 6, L=4)
    A2 = A + exterior_derivative(b)
    H2 = integrate(wedge(exterior_derivative(A2), A2))
    assert abs(H2 - H) <= 1e-6 * abs(H)


def test_homotopy_invariance(s3_16):
    h = hopf_map(s3_16)
    H0 = hopf_invariant(h)
    for seed in range(3):
        assert abs(hopf_invariant(perturbed_map(h, 0.02, seed)) - H0) <= 1e-3 * abs(H0)


def test_bound_and_potential_norm(s3_16):
    for seed, base in enumerate([hopf_map, antihopf_map, constant_map]):
        phi = perturbed_map(base(s3_16), 0.2, seed)
        b = check_energy_bound(phi)
        assert b.passed and b.slack >= -1e-2 * b.F
        assert b.potential_norm_sq <= 0.5 * b.F * 1.01


def test_bound_equality_and_record(hopf24, s3_16):
    b = check_energy_bound(hopf24)
    assert abs(b.slack) <= 1e-2 * b.F
    rec = b.as_dict()
    assert set(rec) == {"H", "H_normalized", "F", "slack", "solver_iterations", "residual"}
    c = check_energy_bound(constant_map(s3_16))
    assert c.F == 0 and abs(c.H) < 1e-12
    with pytest.raises(DomainError):
        check_energy_bound(hopf_map(build_s3_grid((8, 8, 8), t=0.5)))


def test_class_label():
    assert hopf_class(PI2 * 1.002) == (1, pytest.approx(0.002))
    assert hopf_class(-PI2)[0] == -1
