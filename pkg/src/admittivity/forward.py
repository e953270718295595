"""
Synthetic magnetic-field data for the 2-D anisotropic Maxwell system.

Eliminating ``E = gamma^{-1} curl H`` from the time-harmonic system gives the
scalar equation

    div(J^T gamma^{-1} J grad H) + i omega mu0 H = 0,

and ``J^T gamma^{-1} J = gamma / det(gamma)`` for symmetric 2x2 tensors.  We
discretize it with a conservative 5-point stencil for the diagonal
coefficients plus centered corner stencils for the mixed derivatives, and
impose Dirichlet traces on ``H``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .diff_ops import vector_curl
from .grid import ComplexScalarField, ComplexVectorField, Grid2D, PhysicsParams, SymTensorField

__all__ = [
    "BoundaryTrace",
    "ForwardSolution",
    "LinearSystem",
    "ForwardSolveError",
    "assemble_operator",
    "solve_maxwell",
    "solve_maxwell_many",
    "electric_field",
    "write_triplets",
]

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10


class ForwardSolveError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class BoundaryTrace:
    """Dirichlet data on the ``4N`` boundary nodes, in C order of the node index."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128).ravel()
        if v.size != 4 * self.grid.N:
            raise ValueError(f"expected {4 * self.grid.N} boundary values, got {v.size}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @staticmethod
    def indices(grid: Grid2D) -> np.ndarray:
        return np.flatnonzero(grid.boundary_mask().ravel())

    @classmethod
    def from_field(cls, field: ComplexScalarField) -> "BoundaryTrace":
        return cls(field.grid, field.values.ravel()[cls.indices(field.grid)])

    @classmethod
    def zeros(cls, grid: Grid2D) -> "BoundaryTrace":
        return cls(grid, np.zeros(4 * grid.N))


@dataclass(frozen=True, eq=False)
class ForwardSolution:
    H: ComplexScalarField
    E: ComplexVectorField
    residual: float = 0.0


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """Assembled discrete operator; boundary rows are identity rows."""

    grid: Grid2D
    matrix: sp.csr_matrix
    interior: np.ndarray
    boundary: np.ndarray
    zeroth_order: complex

    def rhs(self, trace: BoundaryTrace) -> np.ndarray:
        b = np.zeros(self.grid.n**2, dtype=np.complex128)
        b[self.boundary] = trace.values
        return b


def _mid(a: np.ndarray, axis: int) -> np.ndarray:
    # arithmetic average onto half-nodes along axis
    s0 = [slice(None)] * 2
    s1 = [slice(None)] * 2
    s0[axis] = slice(None, -1)
    s1[axis] = slice(1, None)
    return 0.5 * (a[tuple(s0)] + a[tuple(s1)])


def assemble_operator(gamma: SymTensorField, params: PhysicsParams) -> LinearSystem:
    """
    Sparse matrix for ``div(A grad H) + i omega mu0 H`` with ``A = gamma/det(gamma)``.

    Interior rows: ``(A11 H_x)_x`` and ``(A22 H_y)_y`` use midpoint-averaged
    coefficients; ``(A12 H_y)_x + (A12 H_x)_y`` use centered 4-point corner
    stencils.  The second-order part of each row sums to zero.
    """
    grid = gamma.grid
    n, h = grid.n, grid.h
    d = gamma.det()
    A11, A12, A22 = gamma.a11 / d, gamma.a12 / d, gamma.a22 / d

    jj, ii = np.meshgrid(np.arange(1, n - 1), np.arange(1, n - 1), indexing="ij")
    jj, ii = jj.ravel(), ii.ravel()
    p = jj * n + ii
    h2 = h * h

    ax = _mid(A11, axis=1)  # ax[j, i] sits at (i + 1/2, j)
    ay = _mid(A22, axis=0)  # ay[j, i] sits at (i, j + 1/2)
    c_e = ax[jj, ii] / h2
    c_w = ax[jj, ii - 1] / h2
    c_n = ay[jj, ii] / h2
    c_s = ay[jj - 1, ii] / h2

    q = 1.0 / (4 * h2)
    b_e, b_w = A12[jj, ii + 1] * q, A12[jj, ii - 1] * q
    b_n, b_s = A12[jj + 1, ii] * q, A12[jj - 1, ii] * q

    rows, cols, vals = [], [], []

    def add(offset, v):
        rows.append(p)
        cols.append(p + offset)
        vals.append(v)

    add(0, -(c_e + c_w + c_n + c_s) + params.i_omega_mu)
    add(1, c_e)
    add(-1, c_w)
    add(n, c_n)
    add(-n, c_s)
    add(1 + n, b_e + b_n)
    add(1 - n, -b_e - b_s)
    add(-1 + n, -b_w - b_n)
    add(-1 - n, b_w + b_s)

    boundary = BoundaryTrace.indices(grid)
    rows.append(boundary)
    cols.append(boundary)
    vals.append(np.ones(boundary.size, dtype=np.complex128))

    M = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n * n, n * n),
        dtype=np.complex128,
    )
    M.sum_duplicates()
    return LinearSystem(grid, M, np.sort(p), boundary, params.i_omega_mu)


def electric_field(H: ComplexScalarField, gamma: SymTensorField) -> ComplexVectorField:
    """``E = gamma^{-1} curl H`` nodewise."""
    c = vector_curl(H)
    g = gamma.inverse()
    return ComplexVectorField(H.grid, g.a11 * c.c1 + g.a12 * c.c2, g.a12 * c.c1 + g.a22 * c.c2)


def solve_maxwell_many(gamma: SymTensorField, params: PhysicsParams, traces) -> list[ForwardSolution]:
    """Solve for several boundary traces with a single sparse LU factorization."""
    for g in traces:
        if g.grid != gamma.grid:
            raise ValueError("boundary trace and gamma live on different grids")
        if not np.all(np.isfinite(g.values)):
            raise ValueError("boundary trace has non-finite values")
    system = assemble_operator(gamma, params)
    A = system.matrix.tocsc()
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise ForwardSolveError(f"discrete operator is singular: {exc}") from exc
    pivot = float(np.abs(lu.U.diagonal()).min())

    out = []
    for g in traces:
        b = system.rhs(g)
        bnorm = np.linalg.norm(b)
        if bnorm == 0:
            x, res = np.zeros_like(b), 0.0
        else:
            x = lu.solve(b)
            res = np.linalg.norm(A @ x - b) / bnorm
            if res > RESIDUAL_TOL:
                # one step of iterative refinement before giving up
                x = x + lu.solve(b - A @ x)
                res = np.linalg.norm(A @ x - b) / bnorm
            if not np.isfinite(res) or res > RESIDUAL_TOL:
                raise ForwardSolveError(
                    f"relative residual {res:.3g} exceeds {RESIDUAL_TOL:g} "
                    f"(smallest LU pivot {pivot:.3g})"
                )
        H = ComplexScalarField(gamma.grid, x.reshape(gamma.grid.shape))
        out.append(ForwardSolution(H, electric_field(H, gamma), float(res)))
        log.debug("forward solve: relative residual %.2e", res)
    return out


def solve_maxwell(gamma: SymTensorField, params: PhysicsParams, g: BoundaryTrace) -> ForwardSolution:
    return solve_maxwell_many(gamma, params, [g])[0]


def write_triplets(system: LinearSystem, path) -> None:
    """Dump the matrix as ``row col re im`` lines."""
    coo = system.matrix.tocoo()
    data = np.column_stack([coo.row, coo.col, coo.data.real, coo.data.imag])
    np.savetxt(path, data, fmt=["%d", "%d", "%.17g", "%.17g"],
               header=f"N={system.grid.N} n={system.grid.n**2} nnz={coo.nnz}")
