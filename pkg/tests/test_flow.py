import csv

import numpy as np
import pytest

from sdl.errors import ConfigurationError, HomotopyEscapeError, StagnationError
from sdl.flow import FlowParams, gradient_flow, write_trajectory
from sdl.maps import constant_map, energy_symplectic, hopf_map, perturbed_map

PI2 = np.pi**2


def _descends(traj):
    tot = [r.total for r in traj]
    return all(b <= a + 1e-12 * abs(a) for a, b in zip(tot, tot[1:]))


def test_params_validation():
    with pytest.raises(ConfigurationError):
        FlowParams(step=0)
    with pytest.raises(ConfigurationError):
        FlowParams(grad_tol=-1)
    with pytest.raises(ConfigurationError):
        FlowParams(alpha=-1)


def test_constant_map_stays(s3_16):
    r = gradient_flow(constant_map(s3_16), FlowParams(max_steps=5))
    assert r.converged and energy_symplectic(r.phi) == 0


def test_flow_returns_to_hopf(s3_16):
    r = gradient_flow(perturbed_map(hopf_map(s3_16), 0.05, 1), FlowParams(max_steps=200))
    assert energy_symplectic(r.phi) == pytest.approx(PI2, rel=1e-2)
    assert _descends(r.trajectory)
    assert r.trajectory[-1].H == pytest.approx(PI2, rel=1e-2)


def test_faddeev_flow_descends(s3_16):
    r = gradient_flow(perturbed_map(hopf_map(s3_16), 0.1, 2), FlowParams(alpha=0.5, max_steps=15))
    assert _descends(r.trajectory)
    assert r.trajectory[-1].total < r.trajectory[0].total


def test_homotopy_escape(s3_16):
    with pytest.raises(HomotopyEscapeError):
        gradient_flow(perturbed_map(hopf_map(s3_16), 0.1, 3),
                      FlowParams(max_steps=4, hopf_every=2, hopf_drift_tol=1e-14))


def test_stagnation(s3_16):
    with pytest.raises(StagnationError):
        gradient_flow(perturbed_map(hopf_map(s3_16), 0.1, 4),
                      FlowParams(step=1e-2, armijo=0.999, min_step=1e-3, max_steps=50))


def test_trajectory_csv(tmp_path, s3_16):
    r = gradient_flow(perturbed_map(hopf_map(s3_16), 0.05, 0), FlowParams(max_steps=3))
    p = tmp_path / "traj.csv"
    write_trajectory(p, r.trajectory)
    rows = list(csv.DictReader(open(p)))
    assert list(rows[0]) == ["step", "E", "F", "total", "H", "residual_norm", "dt"]
    assert len(rows) == len(r.trajectory)
