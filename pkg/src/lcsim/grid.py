"""Uniform cell-centered grid with a ghost layer, and the finite-difference
operators acting on 3-vector cell fields.

The director and angular-momentum fields live as piecewise constants on an
N x N cell grid.  Interior cells carry indices 1..N in each direction; the
extra index 0 and N+1 form a one-cell ghost layer that implements the
homogeneous Neumann boundary condition by copying adjacent interior values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Square domain split into n x n uniform cells, mesh width h = side_length/n."""

    n: int
    side_length: float = 1.0
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"need at least 1 cell per side, got n={self.n}")
        if not self.side_length > 0:
            raise ValueError("side_length must be positive")

    @property
    def h(self) -> float:
        return self.side_length / self.n

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    def cell_center_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Interior cell-center coordinates, shape (n, n), x varies along axis 0."""
        c = (np.arange(self.n) + 0.5) * self.h
        return np.meshgrid(self.origin[0] + c, self.origin[1] + c, indexing="ij")

    def node_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-corner coordinates, shape (n+1, n+1), x varies along axis 0."""
        c = np.arange(self.n + 1) * self.h
        return np.meshgrid(self.origin[0] + c, self.origin[1] + c, indexing="ij")


@dataclass
class CellVectorField:
    """3-vector values on the cell grid, ghost layer included.

    values has shape (n+2, n+2, 3); axis 0 is the x cell index, axis 1 the
    y cell index.  The angular momentum reuses this container even though
    no spatial operator ever reads its ghosts.
    """

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        m = self.grid.n + 2
        if self.values.shape != (m, m, 3):
            raise ValueError(f"expected shape {(m, m, 3)}, got {self.values.shape}")

    @classmethod
    def zeros(cls, grid: GridSpec) -> "CellVectorField":
        return cls(grid, np.zeros((grid.n + 2, grid.n + 2, 3)))

    @classmethod
    def from_interior(cls, grid: GridSpec, interior: np.ndarray) -> "CellVectorField":
        """Wrap an (n, n, 3) array of interior values; ghosts get the copy rule."""
        field = cls.zeros(grid)
        field.values[1:-1, 1:-1] = interior
        return apply_neumann_ghosts(field)

    @classmethod
    def sample(cls, grid: GridSpec, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "CellVectorField":
        """Evaluate fn(X, Y) -> (n, n, 3) at the interior cell centers."""
        X, Y = grid.cell_center_mesh()
        return cls.from_interior(grid, np.asarray(fn(X, Y), dtype=float))

    @property
    def interior(self) -> np.ndarray:
        return self.values[1:-1, 1:-1]

    def copy(self) -> "CellVectorField":
        return CellVectorField(self.grid, self.values.copy())


def apply_neumann_ghosts(field: CellVectorField) -> CellVectorField:
    """Copy interior values into the ghost layer (in place).

    Edge ghosts copy the adjacent interior cell, corner ghosts the diagonally
    adjacent one; the 5-point stencil never reads corners, the diagonal rule
    just keeps the operation idempotent.
    """
    v = field.values
    v[0, 1:-1] = v[1, 1:-1]
    v[-1, 1:-1] = v[-2, 1:-1]
    v[1:-1, 0] = v[1:-1, 1]
    v[1:-1, -1] = v[1:-1, -2]
    v[0, 0] = v[1, 1]
    v[0, -1] = v[1, -2]
    v[-1, 0] = v[-2, 1]
    v[-1, -1] = v[-2, -2]
    return field


def discrete_laplacian(field: CellVectorField) -> CellVectorField:
    """5-point Laplacian on interior cells; ghost cells of the result are zero.

    Requires up-to-date ghosts on the input.
    """
    v = field.values
    out = CellVectorField.zeros(field.grid)
    out.values[1:-1, 1:-1] = (
        v[2:, 1:-1] + v[:-2, 1:-1] + v[1:-1, 2:] + v[1:-1, :-2] - 4.0 * v[1:-1, 1:-1]
    ) / field.grid.h**2
    return out


def gradient_energy(field: CellVectorField) -> float:
    """Squared L2 norm of the forward-difference gradient over interior faces.

    h^2 * sum_faces |D+ d|^2; with the ghost copy rule boundary faces would
    contribute zero anyway, so summing interior faces only matches the
    summation-by-parts identity exactly.
    """
    u = field.interior
    dx = u[1:, :] - u[:-1, :]
    dy = u[:, 1:] - u[:, :-1]
    return float(np.sum(dx * dx) + np.sum(dy * dy))


def cell_l2_norm(grid: GridSpec, interior_values: np.ndarray) -> float:
    """L2 norm of a piecewise-constant cell quantity (any trailing shape)."""
    return float(np.sqrt(grid.cell_area * np.sum(np.square(interior_values))))


def gradient_l2_distance(a: CellVectorField, b: CellVectorField) -> float:
    """L2 norm of the difference of the discrete gradients of two fields."""
    diff = CellVectorField.from_interior(a.grid, a.interior - b.interior)
    return float(np.sqrt(gradient_energy(diff)))
