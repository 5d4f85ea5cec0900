"""Field serialization: a small binary container and a commented CSV.

Binary layout::

    16 bytes   magic
     8 bytes   header length, little-endian unsigned
     h bytes   UTF-8 JSON header {n, L, N, T, M, kind, ...}
     rest      little-endian float64 values, time-major then row-major in space

The CSV variant starts with ``# <header json>`` followed by one row per grid
point: ``t, x1[, x2], value`` for space-time fields and ``x1[, x2], value``
for slices.
"""

from __future__ import annotations

import csv
import io
import json
import struct
from pathlib import Path

import numpy as np

from .grid import FULL, SLICE, Field, make_grid

__all__ = ["MAGIC", "FieldFormatError", "write_field", "read_field", "field_to_csv", "field_from_csv"]

MAGIC = b"FRACDISS-FIELD\x00\x01"
_GRID_KEYS = ("n", "L", "N", "T", "M")


class FieldFormatError(ValueError):
    pass


def _header(field: Field, extra: dict | None) -> dict:
    h = field.grid.describe()
    h["kind"] = field.kind
    for k, v in (extra or {}).items():
        if k in h:
            raise ValueError(f"extra header key {k!r} clashes with the grid header")
        h[k] = v
    return h


def _field_of(header: dict, values: np.ndarray) -> tuple[Field, dict]:
    try:
        grid = make_grid(*(header[k] for k in _GRID_KEYS))
        kind = header["kind"]
    except KeyError as err:
        raise FieldFormatError(f"header is missing {err.args[0]!r}") from None
    shape = grid.shape if kind == FULL else grid.slice_shape
    if values.size != int(np.prod(shape)):
        raise FieldFormatError(f"expected {int(np.prod(shape))} values, found {values.size}")
    extra = {k: v for k, v in header.items() if k not in _GRID_KEYS + ("kind",)}
    return Field(grid, values.reshape(shape), kind), extra


def write_field(path, field: Field, extra: dict | None = None) -> None:
    head = json.dumps(_header(field, extra), sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(head)))
        fh.write(head)
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def read_field(path) -> tuple[Field, dict]:
    """Returns the field and any header entries beyond the grid."""
    raw = Path(path).read_bytes()
    if raw[:16] != MAGIC:
        raise FieldFormatError("not a field file (bad magic)")
    (hlen,) = struct.unpack("<Q", raw[16:24])
    header = json.loads(raw[24 : 24 + hlen].decode())
    values = np.frombuffer(raw[24 + hlen :], dtype="<f8").astype(float)
    return _field_of(header, values)


def field_to_csv(field: Field, extra: dict | None = None) -> str:
    g = field.grid
    buf = io.StringIO()
    buf.write("# " + json.dumps(_header(field, extra), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    axes = ["x%d" % (i + 1) for i in range(g.n)]
    w.writerow((["t"] if field.kind == FULL else []) + axes + ["value"])
    coords = np.stack([c.ravel() for c in g.coords()], axis=1)
    if field.kind == SLICE:
        for xs, v in zip(coords, field.values.ravel()):
            w.writerow([repr(float(c)) for c in xs] + [repr(float(v))])
    else:
        for k, t in enumerate(g.t):
            for xs, v in zip(coords, field.values[k].ravel()):
                w.writerow([repr(float(t))] + [repr(float(c)) for c in xs] + [repr(float(v))])
    return buf.getvalue()


def field_from_csv(text: str) -> tuple[Field, dict]:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# "):
        raise FieldFormatError("CSV field needs a '# {header}' first line")
    header = json.loads(lines[0][2:])
    rows = list(csv.reader(lines[2:]))
    values = np.array([float(r[-1]) for r in rows if r])
    return _field_of(header, values)
