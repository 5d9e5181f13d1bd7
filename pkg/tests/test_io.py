import numpy as np
import pytest

from conftest import smooth_form
from sdl.dec import build_s3_grid
from sdl.errors import InputError
from sdl.io import load_form, load_map, save_form, save_map


@pytest.mark.parametrize("binary", [False, True])
def test_form_round_trip(tmp_path, berger_16, torus, binary):
    for M in (berger_16, torus):
        b = smooth_form(M, 1, 0)
        p = tmp_path / f"form_{M.kind}.dat"
        save_form(b, p, binary=binary)
        c = load_form(p)
        assert c.degree == 1 and c.manifold.descriptor() == M.descriptor()
        assert np.array_equal(c.components, b.components)
        assert load_form(p, M).manifold is M


@pytest.mark.parametrize("binary", [False, True])
def test_map_round_trip(tmp_path, hopf16, binary):
    p = tmp_path / "map.dat"
    save_map(hopf16, p, binary=binary)
    # loading renormalizes, which may move the last bit
    assert np.allclose(load_map(p, hopf16.manifold).values, hopf16.values, rtol=0, atol=1e-15)


def test_header_mismatch(tmp_path, s3_16, hopf16):
    p = tmp_path / "form.csv"
    save_form(smooth_form(s3_16, 2, 1), p)
    with pytest.raises(InputError):
        load_form(p, build_s3_grid((16, 16, 16), t=0.5))
    with pytest.raises(InputError):
        load_map(p)
    q = tmp_path / "map.csv"
    save_map(hopf16, q)
    with pytest.raises(InputError):
        load_form(q)


def test_garbage_file(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("not a header\n1,2,3\n")
    with pytest.raises(InputError):
        load_form(p)
    p.write_text("# {broken\n1,2,3\n")
    with pytest.raises(InputError):
        load_form(p)
