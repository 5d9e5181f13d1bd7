import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdl.dec import build_s3_grid
from sdl.errors import ConfigurationError, InputError, UnsupportedTargetError
from sdl.lie import (
    build_fibration,
    build_root_system,
    coderivative_direct,
    coderivative_pullback,
    divergence_f,
    dumps,
    fibration_record,
    killing_invariance_defect,
    orthogonality_check,
    parse_simple_roots,
    perturbed_f,
    phwc_coderivative_numeric,
)
from sdl.maps import conformal_rescale, constant_map, hopf_map


@pytest.mark.parametrize("n", range(2, 9))
def test_root_counts(n):
    R = build_root_system(n)
    assert len(R.roots) == n * (n - 1)
    assert len(R.positive_roots) == n * (n - 1) // 2
    assert len(R.simple_roots) == n - 1


def test_root_vectors_are_eigenvectors():
    R = build_root_system(4)
    h = np.diag([0.3, -1.1, 0.5, 0.3]).astype(complex)
    for k, E in enumerate(R.root_spaces):
        a = np.dot(R.roots[k], np.diag(h).real)
        assert np.allclose(h @ E - E @ h, a * E)
        i, j = R.root_pairs[k]
        Em = R.root_spaces[R.index_of(j, i)]
        br = E @ Em - Em @ E
        assert np.allclose(br, np.diag(np.diag(br)))


@pytest.mark.parametrize("n", [1, 9, 0])
def test_root_system_range(n):
    with pytest.raises(ConfigurationError):
        build_root_system(n)


def test_parse_simple_roots():
    assert parse_simple_roots("a2, a1", 3) == (1, 2)
    assert parse_simple_roots([3], 4) == (3,)
    assert parse_simple_roots("", 3) == ()
    with pytest.raises(InputError):
        parse_simple_roots("a5", 3)
    with pytest.raises(InputError):
        parse_simple_roots("b1", 3)


def test_killing_ad_invariance():
    assert killing_invariance_defect(build_root_system(5)) < 1e-12


@pytest.mark.parametrize("n, p0, p1, dim", [
    (3, "", "a1", 6),
    (2, "", "", 2),
    (4, "", "a1,a2", 12),
    (4, "a1", "a1,a3", 10),
])
def test_fibration_examples(n, p0, p1, dim):
    F = build_fibration(build_root_system(n), p0, p1)
    assert F.dim_m0 == dim
    f = F.f_matrix
    assert np.allclose(F.gram(), np.eye(dim), atol=1e-12)
    assert np.allclose(f @ f @ f + f, 0) and np.allclose(f, -f.T)
    h, v = F.horizontal, F.vertical
    assert np.allclose(f[np.ix_(h, h)] @ f[np.ix_(h, h)], -np.eye(len(h)))
    assert np.allclose(f[:, v], 0)
    rec = fibration_record(F)
    assert rec["checks_failed"] == [] and rec["dim_m0"] == dim
    assert rec["div_f_norm"] <= 1e-10 and rec["coderivative_norm"] <= 1e-10
    json.loads(dumps(rec))


def test_fibration_errors():
    R = build_root_system(4)
    with pytest.raises(InputError):
        build_fibration(R, "a2", "a1")
    with pytest.raises(UnsupportedTargetError):
        build_fibration(R, "", "a1")


def test_orthogonality_all_pairs():
    R = build_root_system(4)
    for a in R.positive_roots:
        for b in R.positive_roots:
            if a != b:
                assert orthogonality_check(R, a, b) <= 1e-12
    with pytest.raises(InputError):
        orthogonality_check(R, R.index_of(1, 0), R.positive_roots[0])


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_direct_coderivative_is_minus_divergence(seed):
    F = build_fibration(build_root_system(4), "", "a1,a2")
    f = perturbed_f(F, 0.1, seed)
    v, _ = divergence_f(F, f)
    w, _ = coderivative_direct(F, f)
    assert np.allclose(w, -v, atol=1e-12)
    _, cod = coderivative_pullback(F, f)
    assert cod > 1e-4


def test_phwc_numeric(s3_16):
    assert phwc_coderivative_numeric(hopf_map(s3_16))["relative_residual"] <= 1e-10
    # the rescaled map is less smooth; 16^3 resolves it to about 1e-6
    r = phwc_coderivative_numeric(conformal_rescale(hopf_map(s3_16), 0.5))
    assert r["relative_residual"] <= 1e-4
    c = phwc_coderivative_numeric(constant_map(s3_16))
    assert c["delta_norm"] == 0 and c["formula_norm"] == 0
    assert phwc_coderivative_numeric(hopf_map(build_s3_grid((16, 16, 16), t=0.5)))["relative_residual"] <= 1e-10
