"""Text and binary serialization of forms and maps.

Both formats carry a JSON header (kind, t or lengths, resolution, scheme,
and the form degree or ``"map"``) followed by the component arrays in
row-major order.  The text variant is CSV with one grid node per row and a
``#``-prefixed header line; the binary variant is::

    b"SDL1" | uint32 header length | header JSON | float64 little-endian data
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from sdl.dec import DiffForm, DiscreteManifold, build_s3_grid, build_t2_grid
from sdl.errors import InputError
from sdl.maps import SphereMap

__all__ = ["save_form", "load_form", "save_map", "load_map", "manifold_from_header"]

_MAGIC = b"SDL1"


def _header(M: DiscreteManifold, **extra) -> dict:
    h = {"kind": M.kind, "resolution": list(M.resolution), "scheme": M.scheme}
    if M.kind == "s3":
        h["t"] = M.t
    else:
        h["lengths"] = list(M.lengths)
    h.update(extra)
    return h


def manifold_from_header(h: dict) -> DiscreteManifold:
    if h.get("kind") == "s3":
        return build_s3_grid(h["resolution"], t=h["t"], scheme=h.get("scheme", "spectral"))
    if h.get("kind") == "t2":
        return build_t2_grid(h["resolution"], h["lengths"], scheme=h.get("scheme", "spectral"))
    raise InputError(f"unknown manifold kind in header: {h.get('kind')!r}")


def _matches(M: DiscreteManifold, h: dict) -> bool:
    return _header(M) == {k: h[k] for k in _header(M) if k in h}


def _write(path, header: dict, data: np.ndarray, binary: bool) -> None:
    path = Path(path)
    # rows are grid nodes, columns are components
    rows = data.reshape(data.shape[0], -1).T
    if binary:
        hb = json.dumps(header).encode()
        with open(path, "wb") as fh:
            fh.write(_MAGIC + struct.pack("<I", len(hb)) + hb)
            fh.write(np.ascontiguousarray(rows, dtype="<f8").tobytes())
    else:
        with open(path, "w") as fh:
            fh.write("# " + json.dumps(header) + "\n")
            np.savetxt(fh, rows, delimiter=",", fmt="%.17g")


def _read(path) -> tuple[dict, np.ndarray]:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] == _MAGIC:
        (hl,) = struct.unpack("<I", raw[4:8])
        header = json.loads(raw[8:8 + hl].decode())
        rows = np.frombuffer(raw[8 + hl:], dtype="<f8")
    else:
        text = raw.decode()
        first, _, body = text.partition("\n")
        if not first.startswith("#"):
            raise InputError(f"{path} has no header line")
        try:
            header = json.loads(first[1:])
        except json.JSONDecodeError as exc:
            raise InputError(f"{path} has a malformed header: {exc}") from None
        rows = np.loadtxt(body.splitlines(), delimiter=",", ndmin=2) if body.strip() else np.zeros(0)
    npts = int(np.prod(header["resolution"]))
    rows = np.asarray(rows, dtype=float).reshape(npts, -1)
    return header, rows.T.reshape((-1,) + tuple(header["resolution"]))


def save_form(form: DiffForm, path, binary: bool = False) -> None:
    _write(path, _header(form.manifold, degree=form.degree), form.components, binary)


def load_form(path, manifold: DiscreteManifold | None = None) -> DiffForm:
    """Read a form; reuse ``manifold`` when its descriptor matches the header.

    Raises
    ------
    InputError
        If the header describes a different manifold or is not a form.
    """
    h, data = _read(path)
    if not isinstance(h.get("degree"), int):
        raise InputError(f"{path} does not contain a differential form")
    M = _check_manifold(h, manifold)
    return DiffForm(int(h["degree"]), data, M)


def save_map(phi: SphereMap, path, binary: bool = False) -> None:
    _write(path, _header(phi.manifold, degree="map"), phi.values, binary)


def load_map(path, manifold: DiscreteManifold | None = None) -> SphereMap:
    h, data = _read(path)
    if h.get("degree") != "map":
        raise InputError(f"{path} does not contain a sphere-valued map")
    return SphereMap(data, _check_manifold(h, manifold))


def _check_manifold(h: dict, manifold):
    if manifold is None:
        return manifold_from_header(h)
    if not _matches(manifold, h):
        raise InputError("file header does not match the supplied manifold")
    return manifold
