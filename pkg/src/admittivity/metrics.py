"""Error measures for reconstructed coefficient maps."""
from __future__ import annotations

import json

import numpy as np

from .grid import Grid2D

__all__ = ["relative_l2", "cross_section", "error_table", "write_error_table"]


def _values(f):
    return np.asarray(getattr(f, "values", f))


def relative_l2(recon, truth, mask=None, h: float = 1.0) -> float:
    """
    ``||recon - truth|| / ||truth||`` in the discrete L2 norm with node weight
    ``h^2``, restricted to ``mask`` when given.
    """
    r, t = _values(recon), _values(truth)
    if r.shape != t.shape:
        raise ValueError(f"shape mismatch {r.shape} vs {t.shape}")
    if mask is not None:
        m = np.asarray(getattr(mask, "mask", mask), dtype=bool)
        r, t = r[m], t[m]
    den = np.sqrt(np.sum(np.abs(t) ** 2) * h * h)
    if den == 0:
        raise ValueError("true field vanishes on the evaluation region")
    return float(np.sqrt(np.sum(np.abs(r - t) ** 2) * h * h) / den)


def cross_section(field, y: float, grid: Grid2D | None = None):
    """Values of ``field`` on the row ``{y = const}`` as ``(x, profile)``."""
    grid = grid or field.grid
    j = grid.row_index(y)
    return grid.x.copy(), _values(field)[j].copy()


def error_table(truth: dict, clean: dict, noisy: dict | None = None, mask=None) -> list[dict]:
    """
    One row per coefficient with full-domain errors.  ``mask_fraction`` is the
    admissible fraction; the masked error is added as a diagnostic column.
    """
    m = None if mask is None else np.asarray(getattr(mask, "mask", mask), dtype=bool)
    rows = []
    for name, t in truth.items():
        row = {
            "coefficient": name,
            "noiseless_error": relative_l2(clean[name], t),
            "noisy_error": None if noisy is None else relative_l2(noisy[name], t),
            "mask_fraction": 1.0 if m is None else float(m.mean()),
        }
        if m is not None and m.any():
            row["noiseless_error_masked"] = relative_l2(clean[name], t, m)
        rows.append(row)
    return rows


def write_error_table(rows: list[dict], path) -> None:
    with open(path, "w") as fh:
        json.dump(rows, fh, indent=2)
