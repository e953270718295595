"""
Plain-text field dumps.

Fields are written as CSV with a one-line comment header recording the field
name, ``N`` and ``h``, followed by one row per grid row (fixed ``y``).  A
complex field stores real and imaginary parts in adjacent columns
``re(x_0), im(x_0), re(x_1), ...``; a real field stores one column per node.
"""
from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .grid import Grid2D

__all__ = ["write_field_csv", "read_field_csv", "write_pgm"]

_HEADER = re.compile(r"#\s*field=(\S+)\s+N=(\d+)\s+h=(\S+)\s+kind=(real|complex)")


def write_field_csv(path, values, grid: Grid2D, name: str) -> Path:
    values = np.asarray(values)
    if values.shape != grid.shape:
        raise ValueError(f"field shape {values.shape} does not match grid {grid.shape}")
    path = Path(path)
    if np.iscomplexobj(values):
        kind = "complex"
        table = np.empty((grid.n, 2 * grid.n))
        table[:, 0::2] = values.real
        table[:, 1::2] = values.imag
    else:
        kind = "real"
        table = values.astype(float)
    header = f"field={name} N={grid.N} h={grid.h!r} kind={kind}"
    np.savetxt(path, table, delimiter=",", fmt="%.17g", header=header)
    return path


def read_field_csv(path):
    """Returns ``(values, grid, name)``."""
    path = Path(path)
    with open(path) as fh:
        first = fh.readline()
    m = _HEADER.match(first)
    if m is None:
        raise ValueError(f"{path}: missing field header")
    name, N, kind = m.group(1), int(m.group(2)), m.group(4)
    grid = Grid2D(N)
    table = np.loadtxt(path, delimiter=",", ndmin=2)
    if kind == "complex":
        values = table[:, 0::2] + 1j * table[:, 1::2]
    else:
        values = table
    if values.shape != grid.shape:
        raise ValueError(f"{path}: expected {grid.shape} values, found {values.shape}")
    return values, grid, name


def write_pgm(path, values, vmin: float | None = None, vmax: float | None = None) -> Path:
    """8-bit binary grayscale image, top row at ``y = 1``."""
    v = np.asarray(values, dtype=float)
    lo = np.nanmin(v) if vmin is None else vmin
    hi = np.nanmax(v) if vmax is None else vmax
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    img = np.clip(np.nan_to_num((v - lo) * scale), 0, 255).astype(np.uint8)[::-1]
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
    return path
