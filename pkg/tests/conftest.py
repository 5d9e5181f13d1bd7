import numpy as np
import pytest

from sdl.dec import build_s3_grid, build_t2_grid
from sdl.maps import hopf_map


@pytest.fixture(scope="session")
def s3_16():
    return build_s3_grid((16, 16, 16))


@pytest.fixture(scope="session")
def s3_24():
    return build_s3_grid((24, 24, 24))


@pytest.fixture(scope="session")
def berger_16():
    return build_s3_grid((16, 16, 16), t=0.5)


@pytest.fixture(scope="session")
def torus():
    return build_t2_grid((32, 32), (1.0, 1.5))


@pytest.fixture(scope="session")
def hopf16(s3_16):
    return hopf_map(s3_16)


@pytest.fixture(scope="session")
def hopf24(s3_24):
    return hopf_map(s3_24)


def smooth_form(M, degree, seed, L=None):
    """Random band-limited form (degree <= L polynomials / Fourier modes)."""
    from math import comb

    from sdl.dec import DiffForm

    rng = np.random.default_rng(seed)
    c = rng.standard_normal((comb(M.dim, degree),) + M.shape)
    return DiffForm(degree, M.project_smooth(c, M.band_limit // 2 if L is None else L), M)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
