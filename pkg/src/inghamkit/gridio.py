"""Grid files and CSV export.

Grid file layout (all sections consecutive)::

    INGHAMGRID 1\\n
    <one line of JSON header>\\n
    <row-major complex128 little-endian samples>

The header carries ``dims``, ``origin``, ``spacing``, ``shape``, ``convention``,
``label`` and a free-form ``metadata`` mapping.  Headers are written with sorted
keys so identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .errors import InputError
from .grid import CONVENTION, SampledFunction

__all__ = ["save_grid", "load_grid", "read_header", "export_csv", "to_bytes", "from_bytes"]

MAGIC = b"INGHAMGRID 1\n"
_DTYPE = np.dtype("<c16")


def to_bytes(f: SampledFunction, metadata: dict | None = None) -> bytes:
    header = {
        "dims": f.dims,
        "origin": [float(v) for v in f.origin],
        "spacing": [float(v) for v in f.spacing],
        "shape": [int(n) for n in f.shape],
        "convention": CONVENTION,
        "label": f.label,
        "dtype": _DTYPE.str,
        "metadata": metadata or {},
    }
    text = json.dumps(header, sort_keys=True, separators=(",", ":"))
    body = np.ascontiguousarray(f.values, dtype=_DTYPE).tobytes(order="C")
    return MAGIC + text.encode("utf-8") + b"\n" + body


def from_bytes(data: bytes) -> tuple:
    if not data.startswith(MAGIC):
        raise InputError("not a grid file (bad magic line)")
    rest = data[len(MAGIC):]
    newline = rest.find(b"\n")
    if newline < 0:
        raise InputError("grid file header is truncated")
    try:
        header = json.loads(rest[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise InputError(f"grid file header is not valid JSON: {exc}") from exc
    for key in ("dims", "origin", "spacing", "shape", "convention"):
        if key not in header:
            raise InputError(f"grid file header lacks '{key}'")
    if header["convention"] != CONVENTION:
        raise InputError(f"unsupported Fourier convention {header['convention']!r}")
    shape = tuple(int(n) for n in header["shape"])
    if len(shape) != header["dims"]:
        raise InputError("header shape does not match dims")
    body = rest[newline + 1:]
    expected = int(np.prod(shape)) * _DTYPE.itemsize
    if len(body) != expected:
        raise InputError(f"expected {expected} bytes of samples, found {len(body)}")
    values = np.frombuffer(body, dtype=_DTYPE).reshape(shape)
    f = SampledFunction(header["origin"], header["spacing"], values, header.get("label", ""))
    return f, header.get("metadata", {})


def save_grid(path, f: SampledFunction, metadata: dict | None = None) -> Path:
    path = Path(path)
    path.write_bytes(to_bytes(f, metadata))
    return path


def load_grid(path) -> tuple:
    """Return ``(SampledFunction, metadata)`` read from ``path``."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such grid file: {path}")
    return from_bytes(path.read_bytes())


def read_header(path) -> dict:
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise InputError("not a grid file (bad magic line)")
    rest = data[len(MAGIC):]
    return json.loads(rest[: rest.find(b"\n")].decode("utf-8"))


def export_csv(f: SampledFunction, path=None) -> str:
    """Write ``i_1, ..., i_d, re, im`` rows; returns the CSV text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"i{a}" for a in range(f.dims)] + ["re", "im"])
    for index in np.ndindex(*f.shape):
        v = f.values[index]
        writer.writerow(list(index) + [repr(float(v.real)), repr(float(v.imag))])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text
