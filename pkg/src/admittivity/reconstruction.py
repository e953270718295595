"""
Explicit pointwise reconstruction of the admittivity from internal magnetic fields.

Given ``H_1 .. H_K`` (``K >= 5``), the pipeline is

1. Cramer coefficients: ``curl H_{2+j} = l^j_1 curl H_1 + l^j_2 curl H_2``.
2. ``Z_j = [curl l^j_1 | curl l^j_2]``, ``M_j = sym(Z_j [curl H_1 | curl H_2]^T)``.
3. ``gamma^{-1} : M_j = i omega mu0 (l^j_1 H_1 + l^j_2 H_2 - H_{2+j})`` for every
   ``j``, solved per node in the least-squares sense.
4. Invert nodewise and split ``gamma = sigma + i omega eps``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .diff_ops import gradient, savgol_derivatives, second_derivatives
from .grid import ComplexScalarField, Grid2D, PhysicsParams, SymTensorField

__all__ = [
    "AdmissibleMask",
    "LambdaSet",
    "MSystem",
    "GammaSolveInfo",
    "Reconstruction",
    "EmptyAdmissibleRegion",
    "compute_lambdas",
    "build_M_system",
    "solve_gamma_pointwise",
    "finalize",
    "reconstruct",
    "fill_nearest",
    "field_derivatives",
]

C0_REL_DEFAULT = 1e-6
SIGMA_MIN_REL_DEFAULT = 1e-8


class EmptyAdmissibleRegion(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class AdmissibleMask:
    mask: np.ndarray
    c0: float
    det: np.ndarray = field(repr=False, default=None)

    @property
    def fraction(self) -> float:
        return float(self.mask.mean())


@dataclass(frozen=True, eq=False)
class LambdaSet:
    """``pairs[j] = (l^j_1, l^j_2)``; NaN outside the admissible region."""

    pairs: list

    def __len__(self):
        return len(self.pairs)


@dataclass(frozen=True, eq=False)
class MSystem:
    """Per-node symmetric matrices ``M[j]`` as ``(K-2, n, n, 2, 2)`` plus right-hand sides."""

    grid: Grid2D
    M: np.ndarray
    r: np.ndarray

    def rows(self) -> np.ndarray:
        """Least-squares rows ``(M11, 2 M12, M22)`` with shape ``(n, n, K-2, 3)``."""
        M = np.moveaxis(self.M, 0, 2)
        return np.stack([M[..., 0, 0], 2 * M[..., 0, 1], M[..., 1, 1]], axis=-1)

    def rhs(self) -> np.ndarray:
        return np.moveaxis(self.r, 0, -1)

    def residual(self, gamma_inv: SymTensorField) -> np.ndarray:
        """``gamma^{-1} : M_j - r_j`` per equation and node, shape ``(K-2, n, n)``."""
        a, b, c = gamma_inv.components
        M = self.M
        return a * M[..., 0, 0] + 2 * b * M[..., 0, 1] + c * M[..., 1, 1] - self.r


# boundary closure order of first derivatives; 3 keeps the boundary ring's
# error below the interior truncation error
EDGE_ORDER = 3


def field_derivatives(H: ComplexScalarField, method: str = "fd", window: int = 25,
                      order: int = 4):
    """
    ``(H_x, H_y, H_xx, H_xy, H_yy)`` of one measured field.

    ``method="fd"`` uses the finite-difference stencils of :mod:`diff_ops`
    (with 4-point boundary closures); ``method="savgol"`` uses smoothing
    Savitzky-Golay differentiation for noisy data.
    """
    if method == "fd":
        g = gradient(H, EDGE_ORDER)
        return (g.c1, g.c2, *second_derivatives(H, EDGE_ORDER))
    if method == "savgol":
        return savgol_derivatives(H, window, order)
    raise ValueError(f"unknown derivative method {method!r}")


def _check_fields(H):
    H = list(H)
    if len(H) < 3:
        raise ValueError("need at least three magnetic fields")
    grid = H[0].grid
    if any(h.grid != grid for h in H):
        raise ValueError("all fields must share one grid")
    return H


def _curl(d):
    # curl H = J grad H
    return np.stack([-d[1], d[0]], axis=-1)


def _det2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def compute_lambdas(H, c0: float | None = None, c0_rel: float = C0_REL_DEFAULT,
                    derivatives=None):
    """
    Cramer coefficients of ``curl H_{2+j}`` in the basis ``(curl H_1, curl H_2)``.

    ``c0`` is an absolute threshold on ``|det(curl H_1, curl H_2)|``; when
    omitted it is ``c0_rel`` times the largest determinant on the grid.  Nodes
    below the threshold are excluded from the mask and carry NaN.
    ``derivatives`` optionally supplies precomputed :func:`field_derivatives`.
    """
    H = _check_fields(H)
    grid = H[0].grid
    if derivatives is None:
        derivatives = [field_derivatives(h) for h in H]
    curls = [_curl(d) for d in derivatives]
    det = _det2(curls[0], curls[1])
    adet = np.abs(det)
    if c0 is None:
        c0 = c0_rel * float(np.nanmax(adet)) if np.isfinite(adet).any() else 0.0
    mask = np.isfinite(adet) & (adet >= c0) & (adet > 0)
    if not mask.any():
        raise EmptyAdmissibleRegion(
            f"det(curl H1, curl H2) is below c0={c0:.3g} everywhere; "
            "additional or different illuminations are required"
        )
    safe = np.where(mask, det, np.nan)
    pairs = []
    for cj in curls[2:]:
        l1 = _det2(cj, curls[1]) / safe
        l2 = _det2(curls[0], cj) / safe
        pairs.append((ComplexScalarField(grid, l1), ComplexScalarField(grid, l2)))
    return LambdaSet(pairs), AdmissibleMask(mask, float(c0), det)


def _grad_det(a, b):
    """``det(grad a, grad b)`` and its gradient from first and second derivatives."""
    ax, ay, axx, axy, ayy = a
    bx, by, bxx, bxy, byy = b
    d = ax * by - ay * bx
    dx = axx * by + ax * bxy - axy * bx - ay * bxx
    dy = axy * by + ax * byy - ayy * bx - ay * bxy
    return d, np.stack([dx, dy], axis=-1)


def build_M_system(H, lambdas: LambdaSet, params: PhysicsParams,
                   derivatives=None) -> MSystem:
    """
    Assemble ``M_j = sym(Z_j Hc^T)`` and ``r_j`` for every extra field.

    ``grad l`` is evaluated by the quotient rule, ``grad l = (grad num - l grad det) / det``,
    with compact second-derivative stencils; differencing the sampled ``l``
    again would compose two one-sided stencils on the boundary ring and drop
    to first order there.
    """
    H = _check_fields(H)
    if len(H) != len(lambdas) + 2:
        raise ValueError(f"{len(H)} fields do not match {len(lambdas)} lambda pairs")
    grid = H[0].grid
    d = derivatives if derivatives is not None else [field_derivatives(h) for h in H]
    det, ddet = _grad_det(d[0], d[1])
    Hc = [_curl(d[0]), _curl(d[1])]
    Ms, rs = [], []
    for j, (l1, l2) in enumerate(lambdas.pairs):
        _, dn1 = _grad_det(d[2 + j], d[1])
        _, dn2 = _grad_det(d[0], d[2 + j])
        g1 = (dn1 - l1.values[..., None] * ddet) / det[..., None]
        g2 = (dn2 - l2.values[..., None] * ddet) / det[..., None]
        z1 = _curl((g1[..., 0], g1[..., 1]))
        z2 = _curl((g2[..., 0], g2[..., 1]))
        # Z Hc^T = z1 (curl H1)^T + z2 (curl H2)^T
        ZH = z1[..., :, None] * Hc[0][..., None, :] + z2[..., :, None] * Hc[1][..., None, :]
        Ms.append(0.5 * (ZH + np.swapaxes(ZH, -1, -2)))
        rs.append(params.i_omega_mu * (l1.values * H[0].values + l2.values * H[1].values
                                      - H[2 + j].values))
    return MSystem(grid, np.array(Ms), np.array(rs))


def fill_nearest(values: np.ndarray, bad: np.ndarray) -> np.ndarray:
    """Replace entries at ``bad`` nodes by the value at the nearest good node."""
    if not bad.any():
        return values
    if bad.all():
        raise EmptyAdmissibleRegion("no valid node left to fill from")
    idx = ndimage.distance_transform_edt(bad, return_distances=False, return_indices=True)
    return values[tuple(idx)]


@dataclass(frozen=True, eq=False)
class GammaSolveInfo:
    sigma_min: np.ndarray
    flagged: np.ndarray
    residual: np.ndarray
    tol: np.ndarray

    @property
    def n_flagged(self) -> int:
        return int(self.flagged.sum())


def solve_gamma_pointwise(msys: MSystem, mask: AdmissibleMask | np.ndarray | None = None,
                          sigma_min_tol: float = SIGMA_MIN_REL_DEFAULT):
    """
    Least-squares solve of ``a M11 + 2 b M12 + c M22 = r`` per node.

    ``sigma_min_tol`` is relative to the largest row norm at each node.  Nodes
    outside ``mask``, with non-finite data, or with smallest singular value
    below the tolerance are flagged and filled from the nearest good node.

    Returns ``(gamma_inv, info)``.
    """
    A = msys.rows()
    r = msys.rhs()
    shape = A.shape[:2]
    adm = np.ones(shape, bool) if mask is None else np.asarray(getattr(mask, "mask", mask))
    finite = np.isfinite(A).all(axis=(-2, -1)) & np.isfinite(r).all(axis=-1)
    A = np.where(finite[..., None, None], A, 0)
    r = np.where(finite[..., None], r, 0)

    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    row_norm = np.linalg.norm(A, axis=-1).max(axis=-1)
    tol = sigma_min_tol * row_norm
    smin = s[..., -1]
    ok = adm & finite & (smin > tol) & (row_norm > 0)

    s_inv = np.where(s > 0, 1.0 / np.where(s > 0, s, 1.0), 0.0)
    Uh_r = np.einsum("...kj,...k->...j", U.conj(), r)
    x = np.einsum("...ji,...j->...i", Vh.conj(), s_inv * Uh_r)
    res = np.linalg.norm(np.einsum("...kj,...j->...k", A, x) - r, axis=-1)

    flagged = ~ok
    comps = [fill_nearest(x[..., k], flagged) for k in range(3)]
    gamma_inv = SymTensorField(msys.grid, *comps)
    info = GammaSolveInfo(np.where(finite, smin, 0.0), flagged, np.where(ok, res, np.nan), tol)
    return gamma_inv, info


def finalize(gamma_inv: SymTensorField, omega: float, det_tol: float = 1e-12):
    """
    Invert nodewise and split into ``(sigma, eps, flagged)``.

    ``sigma = Re(gamma)`` and ``eps = Im(gamma) / omega`` are returned as real
    :class:`SymTensorField` objects.  Nodes with ``|det(gamma^{-1})|`` below
    ``det_tol`` times its median are flagged and filled from neighbours.
    """
    d = gamma_inv.det()
    ad = np.abs(d)
    flagged = ~np.isfinite(ad) | (ad <= det_tol * np.nanmedian(ad))
    d = np.where(flagged, 1.0, d)
    comps = (gamma_inv.a22 / d, -gamma_inv.a12 / d, gamma_inv.a11 / d)
    g = SymTensorField(gamma_inv.grid, *(fill_nearest(c, flagged) for c in comps))
    sigma = g.real()
    eps = SymTensorField(g.grid, *(c.imag / omega for c in g.components))
    return sigma, eps, flagged


@dataclass(eq=False)
class Reconstruction:
    gamma: SymTensorField
    gamma_inv: SymTensorField
    sigma: SymTensorField
    eps: SymTensorField
    mask: AdmissibleMask
    info: GammaSolveInfo
    msys: MSystem = field(repr=False, default=None)

    @property
    def flagged(self) -> np.ndarray:
        return self.info.flagged

    def coefficients(self) -> dict[str, np.ndarray]:
        """The six real coefficient maps keyed ``sigma1 .. eps3``."""
        out = {}
        for name, t in (("sigma", self.sigma), ("eps", self.eps)):
            for k, c in enumerate(t.components, start=1):
                out[f"{name}{k}"] = c.real
        return out


def reconstruct(H, params: PhysicsParams, c0: float | None = None,
                c0_rel: float = C0_REL_DEFAULT,
                sigma_min_tol: float = SIGMA_MIN_REL_DEFAULT,
                derivative: str = "fd", window: int = 25, order: int = 4) -> Reconstruction:
    """
    Run the full explicit pipeline on measured fields ``H``.

    ``derivative``, ``window`` and ``order`` select how the data are
    differentiated (see :func:`field_derivatives`).
    """
    H = _check_fields(H)
    derivs = [field_derivatives(h, derivative, window, order) for h in H]
    lambdas, mask = compute_lambdas(H, c0=c0, c0_rel=c0_rel, derivatives=derivs)
    msys = build_M_system(H, lambdas, params, derivatives=derivs)
    gamma_inv, info = solve_gamma_pointwise(msys, mask, sigma_min_tol)
    sigma, eps, bad = finalize(gamma_inv, params.omega)
    if bad.any():
        info = GammaSolveInfo(info.sigma_min, info.flagged | bad, info.residual, info.tol)
    gamma = SymTensorField.from_sigma_eps(gamma_inv.grid, sigma.components, eps.components,
                                          params.omega)
    return Reconstruction(gamma, gamma_inv, sigma, eps, mask, info, msys)
