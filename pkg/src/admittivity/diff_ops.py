"""
Finite-difference differential operators on :class:`Grid2D` fields.

Interior nodes use second-order central differences; the boundary ring uses
second-order one-sided three-point stencils, so every operator here is
``O(h^2)`` up to and including the boundary.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.signal import savgol_filter

from .grid import ComplexScalarField, ComplexVectorField

__all__ = [
    "d_dx",
    "d_dy",
    "gradient",
    "vector_curl",
    "scalar_curl",
    "divergence",
    "d2_dx2",
    "d2_dy2",
    "second_derivatives",
    "savgol_derivatives",
    "forward_difference_matrices",
]


def _first_axis0(a: np.ndarray, h: float, edge_order: int) -> np.ndarray:
    if edge_order == 2:
        return np.gradient(a, h, axis=0, edge_order=2)
    if edge_order != 3:
        raise ValueError(f"edge_order must be 2 or 3, got {edge_order}")
    out = np.empty_like(a)
    out[1:-1] = 0.5 * (a[2:] - a[:-2])
    c = np.array([-11.0, 18.0, -9.0, 2.0]) / 6.0
    out[0] = np.tensordot(c, a[:4], axes=1)
    out[-1] = -np.tensordot(c, a[-1:-5:-1], axes=1)
    return out / h


def d_dx(values: np.ndarray, h: float, edge_order: int = 2) -> np.ndarray:
    """
    ``d/dx`` (axis 1).  ``edge_order=3`` swaps the 3-point boundary closure
    for a 4-point one; the interior stencil is unchanged.
    """
    return _first_axis0(values.T, h, edge_order).T


def d_dy(values: np.ndarray, h: float, edge_order: int = 2) -> np.ndarray:
    return _first_axis0(values, h, edge_order)


def gradient(f: ComplexScalarField, edge_order: int = 2) -> ComplexVectorField:
    h = f.grid.h
    return ComplexVectorField(
        f.grid, d_dx(f.values, h, edge_order), d_dy(f.values, h, edge_order)
    )


def vector_curl(H: ComplexScalarField, edge_order: int = 2) -> ComplexVectorField:
    """``curl H = (-dH/dy, dH/dx)``, i.e. ``J grad H`` with ``J = [[0, -1], [1, 0]]``."""
    h = H.grid.h
    return ComplexVectorField(
        H.grid, -d_dy(H.values, h, edge_order), d_dx(H.values, h, edge_order)
    )


def scalar_curl(F: ComplexVectorField) -> ComplexScalarField:
    """``curl F = dF2/dx - dF1/dy``."""
    h = F.grid.h
    return ComplexScalarField(F.grid, d_dx(F.c2, h) - d_dy(F.c1, h))


def divergence(F: ComplexVectorField) -> ComplexScalarField:
    h = F.grid.h
    return ComplexScalarField(F.grid, d_dx(F.c1, h) + d_dy(F.c2, h))


def _second_axis0(a: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(a)
    out[1:-1] = a[2:] - 2 * a[1:-1] + a[:-2]
    # five-point one-sided closure, O(h^3); the 4-point O(h^2) closure has an
    # error constant 11x the interior one and dominates the max-norm error
    c = np.array([35.0, -104.0, 114.0, -56.0, 11.0]) / 12.0
    out[0] = np.tensordot(c, a[:5], axes=1)
    out[-1] = np.tensordot(c, a[-1:-6:-1], axes=1)
    return out / (h * h)


def d2_dx2(values: np.ndarray, h: float) -> np.ndarray:
    return _second_axis0(values.T, h).T


def d2_dy2(values: np.ndarray, h: float) -> np.ndarray:
    return _second_axis0(values, h)


def second_derivatives(f: ComplexScalarField, edge_order: int = 2):
    """``(f_xx, f_xy, f_yy)`` with compact 3-point stencils, O(h^2) up to the boundary."""
    h = f.grid.h
    v = f.values
    fxy = d_dx(d_dy(v, h, edge_order), h, edge_order)
    return d2_dx2(v, h), fxy, d2_dy2(v, h)


def _savgol(v: np.ndarray, window: int, order: int, deriv: int, h: float, axis: int):
    kw = dict(window_length=window, polyorder=order, deriv=deriv, delta=h, axis=axis, mode="interp")
    if np.iscomplexobj(v):
        return savgol_filter(v.real, **kw) + 1j * savgol_filter(v.imag, **kw)
    return savgol_filter(v, **kw)


def savgol_derivatives(f: ComplexScalarField, window: int = 25, order: int = 4):
    """
    Smoothed ``(f_x, f_y, f_xx, f_xy, f_yy)`` from tensor-product
    Savitzky-Golay filters (local least-squares polynomials of degree
    ``order`` over ``window`` nodes per axis).

    Used to differentiate noisy data: the filter is exact for polynomials of
    degree ``order`` and fits one-sided windows near the boundary, so it has no
    boundary layer.
    """
    if window % 2 == 0 or window > f.grid.n:
        raise ValueError(f"window must be odd and at most {f.grid.n}, got {window}")
    h = f.grid.h
    v = f.values

    def d(kx, ky):
        return _savgol(_savgol(v, window, order, kx, h, 1), window, order, ky, h, 0)

    return d(1, 0), d(0, 1), d(2, 0), d(1, 1), d(0, 2)


def _forward_1d(m: int, h: float) -> sp.csr_matrix:
    # last row is zero: homogeneous Neumann closure
    d = sp.diags([-np.ones(m), np.ones(m - 1)], [0, 1], shape=(m, m), format="lil")
    d[m - 1, m - 1] = 0.0
    return (d / h).tocsr()


def forward_difference_matrices(shape: tuple[int, ...], h: float = 1.0) -> list[sp.csr_matrix]:
    """
    Sparse forward-difference operators, one per axis, for arrays of ``shape``
    flattened in C order.

    Differences across the last node of an axis are zero (Neumann closure), so
    every operator annihilates constants and ``D.T @ D`` is the standard
    Neumann graph Laplacian.  Works for 1-D sections as well as 2-D fields;
    the returned list is ordered like the array axes (``[D_y, D_x]`` for a
    field stored ``[j, i]``).
    """
    ops = []
    for axis, m in enumerate(shape):
        mats = [sp.identity(k, format="csr") for k in shape]
        mats[axis] = _forward_1d(m, h)
        op = mats[0]
        for mat in mats[1:]:
            op = sp.kron(op, mat, format="csr")
        ops.append(op.tocsr())
    return ops
