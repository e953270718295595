"""
Computational grid and field containers.

All fields live on the nodes of a uniform ``(N+1) x (N+1)`` grid covering
``[-1, 1]^2``.  Arrays are stored row-major by ``y`` then ``x``: ``values[j, i]``
is the value at ``(x_i, y_j) = (-1 + i h, -1 + j h)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

__all__ = [
    "Grid2D",
    "PhysicsParams",
    "ComplexScalarField",
    "ComplexVectorField",
    "SymTensorField",
    "EllipticityReport",
    "make_grid",
    "validate_ellipticity",
    "sym_eigvalsh",
]


@dataclass(frozen=True)
class Grid2D:
    """Uniform tensor-product grid on ``[-1, 1]^2`` with ``N`` cells per axis."""

    N: int

    def __post_init__(self):
        if self.N < 4 or self.N % 2:
            raise ValueError(f"grid requires even N >= 4, got N={self.N}")

    @property
    def n(self) -> int:
        return self.N + 1

    @property
    def h(self) -> float:
        return 2.0 / self.N

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @property
    def x(self) -> np.ndarray:
        return -1.0 + self.h * np.arange(self.n)

    @property
    def y(self) -> np.ndarray:
        return self.x

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(X, Y)`` coordinate arrays with shape ``(n, n)``."""
        return np.meshgrid(self.x, self.y, indexing="xy")

    def boundary_mask(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        m[0, :] = m[-1, :] = m[:, 0] = m[:, -1] = True
        return m

    def row_index(self, y: float) -> int:
        """Index ``j`` of the grid row lying on the line ``{y = const}``."""
        j = (y + 1.0) / self.h
        jr = int(round(j))
        if abs(j - jr) > 1e-9 or not 0 <= jr < self.n:
            raise ValueError(f"line y={y} does not hit a grid row (h={self.h})")
        return jr


def make_grid(N: int = 80) -> Grid2D:
    """Build the ``(N+1) x (N+1)`` grid; ``N`` must be even and at least 4."""
    if not isinstance(N, (int, np.integer)):
        raise TypeError(f"N must be an integer, got {type(N).__name__}")
    return Grid2D(int(N))


@dataclass(frozen=True)
class PhysicsParams:
    omega: float = 1.0
    mu0: float = 1.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if not self.mu0 > 0:
            raise ValueError(f"mu0 must be positive, got {self.mu0}")

    @property
    def i_omega_mu(self) -> complex:
        return 1j * self.omega * self.mu0


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise ValueError(f"fields live on different grids ({a.grid} vs {b.grid})")


Scalar = Union[int, float, complex, np.number]


@dataclass(frozen=True, eq=False)
class ComplexScalarField:
    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != self.grid.shape:
            raise ValueError(f"expected shape {self.grid.shape}, got {v.shape}")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid2D, func) -> "ComplexScalarField":
        X, Y = grid.mesh()
        return cls(grid, np.broadcast_to(func(X, Y), grid.shape))

    @classmethod
    def constant(cls, grid: Grid2D, value: Scalar) -> "ComplexScalarField":
        return cls(grid, np.full(grid.shape, value, dtype=np.complex128))

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    @property
    def imag(self) -> np.ndarray:
        return self.values.imag

    def _binary(self, other, op):
        if isinstance(other, ComplexScalarField):
            _check_same_grid(self, other)
            return ComplexScalarField(self.grid, op(self.values, other.values))
        if np.isscalar(other):
            return ComplexScalarField(self.grid, op(self.values, other))
        return NotImplemented

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, np.divide)

    def __neg__(self):
        return ComplexScalarField(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class ComplexVectorField:
    grid: Grid2D
    c1: np.ndarray
    c2: np.ndarray

    def __post_init__(self):
        for name in ("c1", "c2"):
            v = _frozen(getattr(self, name))
            if v.shape != self.grid.shape:
                raise ValueError(f"{name}: expected shape {self.grid.shape}, got {v.shape}")
            object.__setattr__(self, name, v)

    def stacked(self) -> np.ndarray:
        """Components as an ``(n, n, 2)`` array."""
        return np.stack([self.c1, self.c2], axis=-1)

    def _binary(self, other, op):
        if isinstance(other, ComplexVectorField):
            _check_same_grid(self, other)
            return ComplexVectorField(self.grid, op(self.c1, other.c1), op(self.c2, other.c2))
        if isinstance(other, ComplexScalarField):
            _check_same_grid(self, other)
            return ComplexVectorField(
                self.grid, op(self.c1, other.values), op(self.c2, other.values)
            )
        if np.isscalar(other):
            return ComplexVectorField(self.grid, op(self.c1, other), op(self.c2, other))
        return NotImplemented

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SymTensorField:
    """Symmetric complex 2x2 tensor per node, stored as ``a11, a12, a22``."""

    grid: Grid2D
    a11: np.ndarray
    a12: np.ndarray
    a22: np.ndarray

    def __post_init__(self):
        for name in ("a11", "a12", "a22"):
            v = _frozen(np.broadcast_to(getattr(self, name), self.grid.shape))
            object.__setattr__(self, name, v)

    @classmethod
    def from_sigma_eps(cls, grid, sigma, eps, omega):
        """Build ``gamma = sigma + i omega eps`` from two triples of real arrays."""
        return cls(grid, *(s + 1j * omega * e for s, e in zip(sigma, eps)))

    @classmethod
    def constant(cls, grid: Grid2D, matrix) -> "SymTensorField":
        m = np.asarray(matrix, dtype=np.complex128)
        if not np.allclose(m, m.T, rtol=0, atol=0):
            raise ValueError("matrix is not symmetric")
        ones = np.ones(grid.shape)
        return cls(grid, m[0, 0] * ones, m[0, 1] * ones, m[1, 1] * ones)

    @property
    def components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.a11, self.a12, self.a22

    def det(self) -> np.ndarray:
        return self.a11 * self.a22 - self.a12**2

    def inverse(self) -> "SymTensorField":
        d = self.det()
        return SymTensorField(self.grid, self.a22 / d, -self.a12 / d, self.a11 / d)

    def matrices(self) -> np.ndarray:
        """Full tensors as an ``(n, n, 2, 2)`` array."""
        return np.stack(
            [np.stack([self.a11, self.a12], -1), np.stack([self.a12, self.a22], -1)], -2
        )

    def real(self) -> "SymTensorField":
        return SymTensorField(self.grid, *(c.real for c in self.components))

    def imag(self) -> "SymTensorField":
        return SymTensorField(self.grid, *(c.imag for c in self.components))

    def component(self, name: str) -> ComplexScalarField:
        return ComplexScalarField(self.grid, getattr(self, name))


def sym_eigvalsh(a11, a12, a22) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form eigenvalues ``(lo, hi)`` of real symmetric 2x2 tensors."""
    mean = 0.5 * (a11 + a22)
    rad = np.hypot(0.5 * (a11 - a22), a12)
    return mean - rad, mean + rad


@dataclass
class EllipticityReport:
    ok: bool
    kappa: float
    min_eig: float
    max_eig: float
    worst_node: tuple[int, int]
    worst_part: str
    worst_value: float
    failing_nodes: int = 0
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok


def validate_ellipticity(gamma: SymTensorField, kappa: float, omega: float = 1.0) -> EllipticityReport:
    """
    Check that ``Re(gamma)`` and ``Im(gamma)/omega`` have all eigenvalues in
    ``[1/kappa, kappa]`` at every node.

    The report is truthy iff the check passes; on failure ``worst_node``
    holds the ``(j, i)`` index of the eigenvalue furthest outside the band.
    """
    if not np.all(np.isfinite(gamma.matrices())):
        raise ValueError("gamma has non-finite entries")
    lo_bound, hi_bound = 1.0 / kappa, kappa
    parts = {
        "sigma": [c.real for c in gamma.components],
        "eps": [c.imag / omega for c in gamma.components],
    }
    worst = (0.0, (0, 0), "sigma", np.nan)
    failing = np.zeros(gamma.grid.shape, dtype=bool)
    gmin, gmax = np.inf, -np.inf
    for part, comps in parts.items():
        lo, hi = sym_eigvalsh(*comps)
        gmin, gmax = min(gmin, lo.min()), max(gmax, hi.max())
        excess = np.maximum(lo_bound - lo, hi - hi_bound)
        failing |= excess > 0
        k = np.unravel_index(np.argmax(excess), excess.shape)
        if excess[k] > worst[0]:
            val = lo[k] if lo_bound - lo[k] >= hi[k] - hi_bound else hi[k]
            worst = (float(excess[k]), (int(k[0]), int(k[1])), part, float(val))
    return EllipticityReport(
        ok=not failing.any(),
        kappa=kappa,
        min_eig=float(gmin),
        max_eig=float(gmax),
        worst_node=worst[1],
        worst_part=worst[2],
        worst_value=worst[3],
        failing_nodes=int(failing.sum()),
    )
