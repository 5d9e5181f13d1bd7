import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdl.dec import build_s3_grid, build_t2_grid, codifferential, exterior_derivative, hodge_star, l2_norm
from sdl.errors import DomainError, UsageError
from sdl.maps import (
    SphereMap,
    antihopf_map,
    conformal_rescale,
    constant_map,
    criticality_residual,
    degree_map_t2,
    energy_dirichlet,
    energy_symplectic,
    energy_total,
    geodesic_step,
    gradient_E,
    gradient_F,
    hopf_map,
    perturbed_map,
    pullback_density_2d,
    pullback_omega,
    random_tangent,
    tangent_inner,
)

PI2 = np.pi**2


def test_values_are_unit(hopf16):
    assert np.abs(np.linalg.norm(hopf16.values, axis=0) - 1).max() < 1e-12
    raw = SphereMap(2 * hopf16.values + 0.1, hopf16.manifold)
    assert np.abs(np.linalg.norm(raw.values, axis=0) - 1).max() < 1e-12


def test_hopf_needs_s3(torus):
    with pytest.raises(DomainError):
        hopf_map(torus)


def test_hopf_pullback_unit_norm(hopf24):
    rho = pullback_omega(hopf24)
    assert np.abs(np.linalg.norm(rho.components, axis=0) - 1).max() < 1e-10


@pytest.mark.parametrize("t", [1.0, 0.5, 0.25])
def test_dstar_identity(t):
    M = build_s3_grid((16, 16, 16), t=t)
    rho = pullback_omega(hopf_map(M))
    lhs = exterior_derivative(hodge_star(rho))
    assert l2_norm(lhs - rho * (2 * t)) <= 1e-2 * l2_norm(rho * (2 * t))


def test_codifferential_of_hopf(hopf24):
    # delta rho = (-1) * d * rho in dimension 3 for 2-forms; equals -2 * star rho
    rho = pullback_omega(hopf24)
    delta = codifferential(rho)
    star = hodge_star(rho)
    target = star * (2.0 if l2_norm(delta - star * 2.0) < l2_norm(delta + star * 2.0) else -2.0)
    assert l2_norm(delta - target) <= 1e-2 * l2_norm(target)


def test_constant_map(s3_16):
    c = constant_map(s3_16)
    assert np.abs(pullback_omega(c).components).max() == 0
    assert energy_symplectic(c) == 0 and energy_dirichlet(c) == 0


def test_energy_constants(hopf24):
    assert energy_symplectic(hopf24) == pytest.approx(PI2, rel=1e-2)
    assert energy_dirichlet(hopf24) == pytest.approx(2 * PI2, rel=1e-2)


@pytest.mark.parametrize("t", [0.25, 0.5, 0.75])
def test_berger_energy(t):
    h = hopf_map(build_s3_grid((16, 16, 16), t=t))
    assert energy_symplectic(h) == pytest.approx(t * PI2, rel=1e-2)


def test_energy_report(hopf16):
    rep = energy_total(hopf16, 0.7)
    assert rep.total == rep.E + 0.7 * rep.F
    assert rep.E >= 0 and rep.F >= 0
    assert rep.H == pytest.approx(PI2, rel=1e-2)
    assert set(rep.as_dict()) >= {"E", "F", "alpha", "total", "H", "residual_norm"}


def test_criticality(hopf24, s3_16):
    _, r = criticality_residual(hopf24)
    assert r <= 1e-6 * PI2
    _, rp = criticality_residual(perturbed_map(hopf_map(s3_16), 0.05, 0))
    assert rp > 1e-3


def test_criticality_of_coclosed_torus_map(torus):
    # a map through the equator has zero pullback, hence coclosed
    X, _ = torus.mesh
    a = 2 * np.pi * X / torus.lengths[0]
    phi = SphereMap(np.stack([np.cos(a), np.sin(a), 0 * a]), torus)
    _, r = criticality_residual(phi)
    assert r < 1e-12


@pytest.mark.parametrize("d", [1, 2, -1])
def test_degree_map_integral(d):
    T = build_t2_grid((64, 64), (1.0, 1.0))
    f, mean, _ = pullback_density_2d(degree_map_t2(T, d))
    assert mean * T.volume == pytest.approx(d * np.pi, rel=5e-3)


def test_density_statistics(torus):
    _, _, rel = pullback_density_2d(perturbed_map(degree_map_t2(torus, 1), 0.3, 2))
    assert rel > 1e-3
    with pytest.raises(DomainError):
        pullback_density_2d(hopf_map(build_s3_grid((8, 8, 8))))


def test_antihopf_and_rescale(s3_16):
    assert energy_symplectic(antihopf_map(s3_16)) == pytest.approx(PI2, rel=1e-2)
    r = conformal_rescale(hopf_map(s3_16), 1.0)
    assert np.allclose(r.values, hopf_map(s3_16).values, atol=1e-12)


@settings(max_examples=5, deadline=None)
@given(seed=st.integers(0, 1000))
def test_first_variation(s3_16, seed):
    phi = perturbed_map(hopf_map(s3_16), 0.2, seed)
    X = random_tangent(phi, seed + 1)
    eps = 1e-4
    fd = (energy_symplectic(geodesic_step(phi, X, eps))
          - energy_symplectic(geodesic_step(phi, X, -eps))) / (2 * eps)
    an = tangent_inner(s3_16, X, gradient_F(phi))
    assert fd == pytest.approx(an, rel=1e-3, abs=1e-8)


def test_first_variation_E(s3_16):
    phi = perturbed_map(hopf_map(s3_16), 0.2, 3)
    X = random_tangent(phi, 4)
    eps = 1e-4
    fd = (energy_dirichlet(geodesic_step(phi, X, eps))
          - energy_dirichlet(geodesic_step(phi, X, -eps))) / (2 * eps)
    assert fd == pytest.approx(tangent_inner(s3_16, X, gradient_E(phi)), rel=1e-3)


def test_geodesic_step_preserves_norm(hopf16):
    X = random_tangent(hopf16, 0)
    assert np.abs(np.linalg.norm(geodesic_step(hopf16, X, 0.3).values, axis=0) - 1).max() < 1e-12


def test_seed_determinism(s3_16):
    a = perturbed_map(hopf_map(s3_16), 0.1, 9).values
    b = perturbed_map(hopf_map(s3_16), 0.1, 9).values
    assert np.array_equal(a, b)


def test_tangent_inner_mismatch(s3_16):
    phi = hopf_map(s3_16)
    with pytest.raises(UsageError):
        SphereMap(np.zeros((3, 8, 8, 8)), s3_16)
    assert tangent_inner(s3_16, phi.values, phi.values) == pytest.approx(s3_16.volume)
