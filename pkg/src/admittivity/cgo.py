"""
CGO-like exponential solutions for constant admittivity tensors.

For a constant tensor ``gamma`` the magnetic field obeys
``-div(gt^{-1} grad H) + H = 0`` with ``gt = -i omega mu J^T gamma J``.
Writing ``gt = Q Q^T``, every ``H = exp(x . Q u)`` with ``u^T u = 1`` is a
solution.  Choosing ``u1 = e1``, ``u2 = e2`` and three more unit vectors gives
illuminations whose measurement matrices can be written in closed form, which
is how we certify that a set of illuminations is usable for reconstruction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forward import BoundaryTrace
from .grid import ComplexScalarField, Grid2D, PhysicsParams, make_grid

__all__ = [
    "J",
    "CgoBasis",
    "IlluminationError",
    "gamma_tilde",
    "factor_Q",
    "make_basis",
    "cgo_field",
    "cgo_gradient",
    "analytic_lambdas",
    "analytic_M_tilde",
    "analytic_M",
    "cgo_determinant",
    "check_independence",
    "choose_illuminations",
    "DEFAULT_ANGLES",
]

J = np.array([[0.0, -1.0], [1.0, 0.0]])

# directions pointing away from e1 and e2: the three inner matrices then have
# smallest singular value ~1.2 (vs ~0.02 for pi/4, pi/3, 2pi/3), which keeps
# the pointwise system usable on noisy data
DEFAULT_ANGLES = (3 * np.pi / 4, 5 * np.pi / 4, 7 * np.pi / 4)
# angle offset added per retry when the default set fails verification
ANGLE_STEP = np.pi / 17
MAX_ATTEMPTS = 8


class IlluminationError(RuntimeError):
    """No admissible set of illuminations could be found."""


def gamma_tilde(gamma, params: PhysicsParams) -> np.ndarray:
    gamma = np.asarray(gamma, dtype=np.complex128)
    if abs(np.linalg.det(gamma)) == 0:
        raise ValueError("gamma is singular")
    return -1j * params.omega * params.mu0 * (J.T @ gamma @ J)


def factor_Q(gt, cond_max: float = 1e8) -> np.ndarray:
    """
    Complex symmetric square root ``Q`` of ``gt`` so that ``Q Q^T = gt``.

    Uses the eigendecomposition ``gt = V D V^{-1}`` with principal square
    roots of the eigenvalues, which are sorted by descending real part and
    then imaginary part.  The result is a polynomial in ``gt``, hence
    symmetric, so ``Q Q^T = Q^2 = gt``.
    """
    gt = np.asarray(gt, dtype=np.complex128)
    if not np.allclose(gt, gt.T, rtol=1e-12, atol=0):
        raise ValueError("gamma_tilde must be complex symmetric")
    d, V = np.linalg.eig(gt)
    order = np.lexsort((-d.imag, -d.real))
    d, V = d[order], V[:, order]
    if np.any(d == 0):
        raise ValueError("gamma_tilde is singular")
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > cond_max:
        raise np.linalg.LinAlgError(
            f"gamma_tilde is (nearly) defective: eigenvector condition {cond:.3g} > {cond_max:.1g}"
        )
    Q = V @ np.diag(np.sqrt(d)) @ np.linalg.inv(V)
    return 0.5 * (Q + Q.T)


@dataclass(frozen=True)
class CgoBasis:
    Q: np.ndarray
    u: tuple  # five complex 2-vectors, bilinear-normalized

    def __post_init__(self):
        Q = np.array(self.Q, dtype=np.complex128)
        us = tuple(np.array(v, dtype=np.complex128) for v in self.u)
        for v in us:
            if v.shape != (2,) or abs(v @ v - 1) > 1e-12:
                raise ValueError(f"u must satisfy u^T u = 1, got {v}")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "u", us)

    def wave(self, k: int) -> np.ndarray:
        """The complex wave vector ``Q u_k``."""
        return self.Q @ self.u[k]


def unit(theta: float) -> np.ndarray:
    return np.array([np.cos(theta), np.sin(theta)])


def make_basis(gamma, params: PhysicsParams, angles=DEFAULT_ANGLES) -> CgoBasis:
    """``u1 = e1``, ``u2 = e2``, ``u_{2+j} = (cos t_j, sin t_j)``."""
    Q = factor_Q(gamma_tilde(gamma, params))
    us = [np.array([1.0, 0.0]), np.array([0.0, 1.0])] + [unit(t) for t in angles]
    return CgoBasis(Q, tuple(us))


def cgo_field(basis: CgoBasis, which_u: int, grid: Grid2D) -> ComplexScalarField:
    """Sample ``exp(x . Q u_k)`` on ``grid`` (``which_u`` is 0-based)."""
    q = basis.wave(which_u)
    X, Y = grid.mesh()
    return ComplexScalarField(grid, np.exp(X * q[0] + Y * q[1]))


def cgo_gradient(basis: CgoBasis, which_u: int, X, Y) -> np.ndarray:
    """Exact gradient ``Q u exp(x . Q u)``, shape ``X.shape + (2,)``."""
    q = basis.wave(which_u)
    H = np.exp(np.asarray(X) * q[0] + np.asarray(Y) * q[1])
    return H[..., None] * q


def _det2(a, b):
    return a[0] * b[1] - a[1] * b[0]


def analytic_lambdas(basis: CgoBasis, j: int, X, Y):
    """Exact Cramer coefficients ``(lambda^j_1, lambda^j_2)`` for ``j`` in 0..2."""
    u1, u2, uj = basis.u[0], basis.u[1], basis.u[2 + j]
    Q = basis.Q
    X, Y = np.asarray(X), np.asarray(Y)

    def ex(v):
        q = Q @ v
        return np.exp(X * q[0] + Y * q[1])

    return ex(uj - u1) * _det2(uj, u2), ex(uj - u2) * _det2(u1, uj)


def _inner(basis: CgoBasis, j: int) -> np.ndarray:
    uj = basis.u[2 + j]
    a, b = uj[0], uj[1]  # u . e1, u . e2
    return np.array([[a * (a - 1), a * b], [a * b, b * (b - 1)]])


def analytic_M_tilde(basis: CgoBasis, j: int, x) -> np.ndarray:
    """
    Closed-form gradient-based measurement matrix for the extra field ``j``
    (0-based, i.e. ``u_{3+j}`` in 1-based numbering) at point(s) ``x``.

    Requires ``u1 = e1`` and ``u2 = e2``.  ``x`` may be a single point or an
    array of points with trailing dimension 2; the result has shape
    ``x.shape[:-1] + (2, 2)``.
    """
    if not (np.allclose(basis.u[0], [1, 0]) and np.allclose(basis.u[1], [0, 1])):
        raise ValueError("closed form requires u1 = e1 and u2 = e2")
    x = np.asarray(x, dtype=float)
    q = basis.wave(2 + j)
    Hj = np.exp(x[..., 0] * q[0] + x[..., 1] * q[1])
    core = basis.Q @ _inner(basis, j) @ basis.Q.T
    return Hj[..., None, None] * core


def analytic_M(basis: CgoBasis, j: int, x) -> np.ndarray:
    """Curl-based matrix ``M_j = J M~_j J^T`` as assembled from measured data."""
    return J @ analytic_M_tilde(basis, j, x) @ J.T


def cgo_determinant(basis: CgoBasis, X, Y) -> np.ndarray:
    """Exact ``det(curl H1, curl H2)`` for the CGO pair."""
    g1 = cgo_gradient(basis, 0, X, Y)
    g2 = cgo_gradient(basis, 1, X, Y)
    # det(J a, J b) = det(a, b)
    return g1[..., 0] * g2[..., 1] - g1[..., 1] * g2[..., 0]


def check_independence(*Ms) -> np.ndarray:
    """
    Smallest singular value of the stacked measurement matrices.

    Each ``M`` is an array ``(..., 2, 2)`` of symmetric matrices.  Rows are
    ``(M11, sqrt(2) M12, M22)``, which preserves the Frobenius inner product on
    symmetric matrices; accepts three or more matrices.
    """
    if len(Ms) == 1:
        Ms = tuple(Ms[0])
    if len(Ms) < 3:
        raise ValueError("need at least three matrices")
    rows = [
        np.stack([M[..., 0, 0], np.sqrt(2) * M[..., 0, 1], M[..., 1, 1]], axis=-1)
        for M in map(np.asarray, Ms)
    ]
    A = np.stack(rows, axis=-2)
    return np.linalg.svd(A, compute_uv=False)[..., -1]


def _independence_table(basis: CgoBasis, probe: Grid2D) -> np.ndarray:
    X, Y = probe.mesh()
    pts = np.stack([X, Y], axis=-1)
    Ms = [analytic_M_tilde(basis, j, pts) for j in range(3)]
    smin = check_independence(*Ms)
    scale = np.max([np.linalg.norm(M, axis=(-2, -1)) for M in Ms], axis=0)
    return smin / scale


def choose_illuminations(
    gamma_ref,
    params: PhysicsParams,
    grid: Grid2D,
    angles=None,
    probe_N: int = 10,
    rel_tol: float = 1e-6,
):
    """
    Pick five CGO illuminations for the reference tensor ``gamma_ref``.

    With ``angles=None`` the default angles are tried first and shifted by
    ``ANGLE_STEP`` per attempt (at most ``MAX_ATTEMPTS``) until the closed-form
    matrices are independent on a coarse probe grid.  Explicit ``angles`` are
    checked once and never altered.

    Returns ``(basis, traces, table)`` where ``table`` is the relative
    smallest-singular-value map on the probe grid.
    """
    gamma_ref = np.asarray(gamma_ref, dtype=np.complex128)
    sig_lo = np.linalg.eigvalsh(gamma_ref.real).min()
    eps_lo = np.linalg.eigvalsh(gamma_ref.imag).min()
    if sig_lo <= 0 or eps_lo < 0:
        raise ValueError("gamma_ref is not elliptic")
    probe = make_grid(probe_N)
    attempts = [tuple(angles)] if angles is not None else [
        tuple(t + k * ANGLE_STEP for t in DEFAULT_ANGLES) for k in range(MAX_ATTEMPTS)
    ]
    best = -np.inf
    for trial in attempts:
        basis = make_basis(gamma_ref, params, trial)
        table = _independence_table(basis, probe)
        worst = float(table.min())
        best = max(best, worst)
        if worst > rel_tol:
            traces = [BoundaryTrace.from_field(cgo_field(basis, k, grid)) for k in range(5)]
            return basis, traces, table
    raise IlluminationError(
        f"no admissible illumination angles found; best relative sigma_min = {best:.3g}"
    )
