"""Binary form files.

Layout (all little-endian): the 4-byte magic ``HFRM``, ``u32`` version (1),
``u32`` N, ``u32`` degree, N x ``u32`` resolutions, N x ``f64`` periods, then
the components in multi-index order, each a row-major ``f64`` array.
"""
from __future__ import annotations

import os
import struct
import tempfile
from math import comb
from pathlib import Path

import numpy as np

from .errors import HodgeLabError
from .forms import Form
from .torus import TorusGrid

__all__ = ["MAGIC", "VERSION", "FormFileError", "write_form", "read_form", "form_to_bytes",
           "form_from_bytes", "atomic_write"]

MAGIC = b"HFRM"
VERSION = 1


class FormFileError(HodgeLabError, ValueError):
    """A form file is truncated, has the wrong magic, or an unknown version."""


def form_to_bytes(form: Form) -> bytes:
    grid = form.grid
    head = MAGIC + struct.pack("<III", VERSION, grid.dim, form.degree)
    head += struct.pack(f"<{grid.dim}I", *grid.shape)
    head += struct.pack(f"<{grid.dim}d", *grid.lengths)
    body = np.ascontiguousarray(form.data, dtype="<f8").tobytes(order="C")
    return head + body


def form_from_bytes(buf: bytes) -> Form:
    if len(buf) < 16 or buf[:4] != MAGIC:
        raise FormFileError("not a form file (bad magic)")
    version, n, degree = struct.unpack_from("<III", buf, 4)
    if version != VERSION:
        raise FormFileError(f"unsupported form file version {version}")
    if n not in (2, 3) or degree > n:
        raise FormFileError(f"bad header: dimension {n}, degree {degree}")
    off = 16
    shape = struct.unpack_from(f"<{n}I", buf, off)
    off += 4 * n
    lengths = struct.unpack_from(f"<{n}d", buf, off)
    off += 8 * n
    grid = TorusGrid(shape, lengths)
    count = comb(n, degree) * int(np.prod(shape))
    if len(buf) != off + 8 * count:
        raise FormFileError(f"expected {off + 8 * count} bytes, found {len(buf)}")
    data = np.frombuffer(buf, dtype="<f8", count=count, offset=off)
    return Form(grid, degree, data.reshape((comb(n, degree),) + tuple(shape)))


def atomic_write(path, payload: bytes) -> Path:
    """Write ``payload`` to a temporary sibling file, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_form(path, form: Form) -> Path:
    return atomic_write(path, form_to_bytes(form))


def read_form(path) -> Form:
    return form_from_bytes(Path(path).read_bytes())
