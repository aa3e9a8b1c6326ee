"""P1 finite elements for the anisotropic electric-potential equation.

The square cells of the director grid are each split along the lower-left to
upper-right diagonal, giving 2n^2 triangles whose nodes are the cell corners.
The potential is continuous piecewise linear; Dirichlet data enters by nodal
interpolation and lifting.  Because each triangle lies inside one cell the
coefficient tensor I + eps2 * p p^T (p = in-plane part of the director) is
constant per triangle and every element integral is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .grid import CellVectorField, GridSpec


class EllipticityError(ValueError):
    """Coefficient tensor loses positive definiteness (eps2 <= -1)."""


class SolverFailureError(RuntimeError):
    """Linear solver hit its iteration limit."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class Triangulation:
    """Structured triangulation aligned with the cell grid.

    Node ids run x-fastest: id(ix, jy) = jy*(n+1) + ix.  Triangle 2*(cj*n+ci)
    is the lower triangle (LL, LR, UR) of cell (ci, cj), the next one the
    upper triangle (LL, UR, UL); both are counterclockwise.  The sparsity
    pattern of the stiffness matrix is cached so reassembly for a new
    director only recomputes entry values.
    """

    def __init__(self, grid: GridSpec):
        self.grid = grid
        n = grid.n
        h = grid.h

        idg = np.arange(n + 1)[:, None] + (n + 1) * np.arange(n + 1)[None, :]  # [ix, jy]
        ll, lr = idg[:-1, :-1], idg[1:, :-1]
        ur, ul = idg[1:, 1:], idg[:-1, 1:]
        tris = np.empty((n, n, 2, 3), dtype=np.int64)
        tris[:, :, 0, :] = np.stack([ll, lr, ur], axis=-1)
        tris[:, :, 1, :] = np.stack([ll, ur, ul], axis=-1)
        self.triangles = tris.transpose(1, 0, 2, 3).reshape(-1, 3)

        Xn, Yn = grid.node_mesh()
        self.nodes = np.column_stack([Xn.T.ravel(), Yn.T.ravel()])
        self.n_nodes = (n + 1) ** 2

        bmask = np.zeros((n + 1, n + 1), dtype=bool)
        bmask[0, :] = bmask[-1, :] = bmask[:, 0] = bmask[:, -1] = True
        self.boundary_mask = bmask.T.ravel()
        self.interior_ids = np.nonzero(~self.boundary_mask)[0]

        self.centroids = self.nodes[self.triangles].mean(axis=1)
        self.triangle_area = 0.5 * h * h

        # constant P1 gradient patterns (rows follow the vertex order above)
        self._g_low = np.array([[-1.0, 0.0], [1.0, -1.0], [0.0, 1.0]]) / h
        self._g_up = np.array([[0.0, -1.0], [1.0, 0.0], [-1.0, 1.0]]) / h

        self._build_assembly_pattern()

    def _build_assembly_pattern(self) -> None:
        t = self.triangles
        rows = t[:, [0, 0, 0, 1, 1, 1, 2, 2, 2]].ravel()
        cols = t[:, [0, 1, 2, 0, 1, 2, 0, 1, 2]].ravel()
        order = np.lexsort((cols, rows))
        rs, cs = rows[order], cols[order]
        new_entry = np.empty(rs.size, dtype=bool)
        new_entry[0] = True
        new_entry[1:] = (rs[1:] != rs[:-1]) | (cs[1:] != cs[:-1])
        starts = np.nonzero(new_entry)[0]
        self._order = order
        self._seg_starts = starts
        self._csr_indices = cs[starts]
        counts = np.bincount(rs[starts], minlength=self.n_nodes)
        self._csr_indptr = np.concatenate([[0], np.cumsum(counts)])
        nnz = starts.size

        # template whose data records source positions, used to slice the
        # interior block without re-sorting on every assembly
        tmpl = sp.csr_matrix(
            (np.arange(1, nnz + 1), self._csr_indices, self._csr_indptr),
            shape=(self.n_nodes, self.n_nodes),
        )
        sub = tmpl[self.interior_ids][:, self.interior_ids].tocsr()
        self._ii_map = sub.data - 1
        self._ii_indices = sub.indices.copy()
        self._ii_indptr = sub.indptr.copy()

    def full_matrix_data(self, cell_tensors: np.ndarray) -> np.ndarray:
        """CSR data of the full stiffness matrix for per-cell 2x2 tensors (n,n,2,2)."""
        area = self.triangle_area
        k_low = area * np.einsum("ka,ijab,lb->ijkl", self._g_low, cell_tensors, self._g_low)
        k_up = area * np.einsum("ka,ijab,lb->ijkl", self._g_up, cell_tensors, self._g_up)
        n = self.grid.n
        k_all = np.empty((n, n, 2, 3, 3))
        k_all[:, :, 0] = k_low
        k_all[:, :, 1] = k_up
        flat = k_all.transpose(1, 0, 2, 3, 4).reshape(-1)
        return np.add.reduceat(flat[self._order], self._seg_starts)

    def full_matrix(self, data: np.ndarray) -> sp.csr_matrix:
        return sp.csr_matrix(
            (data, self._csr_indices, self._csr_indptr), shape=(self.n_nodes, self.n_nodes)
        )

    def interior_matrix(self, data: np.ndarray) -> sp.csr_matrix:
        ni = self.interior_ids.size
        return sp.csr_matrix((data[self._ii_map], self._ii_indices, self._ii_indptr), shape=(ni, ni))

    def load_vector(self, f: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]]) -> np.ndarray:
        """Right-hand side from one-point (centroid) quadrature per triangle."""
        if f is None:
            return np.zeros(self.n_nodes)
        fc = np.asarray(f(self.centroids[:, 0], self.centroids[:, 1]), dtype=float)
        fc = np.broadcast_to(fc, (self.triangles.shape[0],))
        w = np.repeat(fc * (self.triangle_area / 3.0), 3)
        return np.bincount(self.triangles.ravel(), weights=w, minlength=self.n_nodes)


@dataclass
class NodalScalarField:
    """Continuous piecewise-linear function given by its nodal values.

    values has shape (n+1, n+1) with x along axis 0, matching GridSpec.node_mesh.
    """

    tri: Triangulation
    values: np.ndarray

    @classmethod
    def zeros(cls, tri: Triangulation) -> "NodalScalarField":
        n = tri.grid.n
        return cls(tri, np.zeros((n + 1, n + 1)))

    @classmethod
    def sample(cls, tri: Triangulation, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "NodalScalarField":
        X, Y = tri.grid.node_mesh()
        return cls(tri, np.asarray(fn(X, Y), dtype=float))

    def flat(self) -> np.ndarray:
        """Values in node-id order."""
        return self.values.T.ravel()


@dataclass
class TriangleGradientField:
    """Per-triangle constant gradients, stored by cell: lower/upper (n, n, 2)."""

    tri: Triangulation
    lower: np.ndarray
    upper: np.ndarray

    def l2_norm(self) -> float:
        a = self.tri.triangle_area
        return float(np.sqrt(a * (np.sum(self.lower**2) + np.sum(self.upper**2))))


@dataclass
class SparseSPDSystem:
    """Stiffness system over the interior nodes, Dirichlet lifting folded into rhs."""

    tri: Triangulation
    matrix: sp.csr_matrix
    rhs: np.ndarray


def in_plane(d_interior: np.ndarray) -> np.ndarray:
    """First two components of the director; the contraction with the planar
    potential gradient only sees these."""
    return d_interior[..., :2]


def assemble_system(
    tri: Triangulation,
    d: CellVectorField,
    eps2: float,
    g_nodal: NodalScalarField,
    f: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None,
) -> SparseSPDSystem:
    """Assemble the interior system a(u0, v) = F(v) - a(g, v).

    g_nodal is the nodal interpolation of the boundary extension on all
    nodes; f is a source evaluated by centroid quadrature (None for zero).
    """
    if eps2 <= -1.0:
        raise EllipticityError(f"eps2 must exceed -1 for ellipticity, got {eps2}")
    p = in_plane(d.interior)
    n = tri.grid.n
    tensors = np.empty((n, n, 2, 2))
    tensors[..., 0, 0] = 1.0 + eps2 * p[..., 0] * p[..., 0]
    tensors[..., 0, 1] = eps2 * p[..., 0] * p[..., 1]
    tensors[..., 1, 0] = tensors[..., 0, 1]
    tensors[..., 1, 1] = 1.0 + eps2 * p[..., 1] * p[..., 1]
    data = tri.full_matrix_data(tensors)
    lift = tri.full_matrix(data) @ g_nodal.flat()
    rhs = (tri.load_vector(f) - lift)[tri.interior_ids]
    return SparseSPDSystem(tri=tri, matrix=tri.interior_matrix(data), rhs=rhs)


def conjugate_gradient(
    A: sp.csr_matrix,
    b: np.ndarray,
    x0: Optional[np.ndarray] = None,
    tol: float = 1e-10,
    max_iters: Optional[int] = None,
    jacobi: bool = False,
) -> tuple[np.ndarray, int]:
    """Plain CG for SPD systems; returns (x, iterations).

    Stops when ||b - A x|| <= tol * ||b|| (absolute tol if b = 0).  Raises
    SolverFailureError carrying the final residual on iteration-limit.
    """
    m = b.shape[0]
    if max_iters is None:
        max_iters = max(200, 10 * m)
    x = np.zeros(m) if x0 is None else np.array(x0, dtype=float)
    bnorm = float(np.linalg.norm(b))
    target = tol * bnorm if bnorm > 0.0 else tol
    r = b - A @ x
    minv = None
    if jacobi:
        diag = A.diagonal()
        if np.any(diag <= 0):
            raise SolverFailureError("matrix diagonal not positive", float(np.linalg.norm(r)), 0)
        minv = 1.0 / diag
    z = minv * r if jacobi else r
    p = z.copy()
    rz = float(r @ z)
    for it in range(max_iters):
        rnorm = float(np.linalg.norm(r))
        if rnorm <= target:
            return x, it
        Ap = A @ p
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise SolverFailureError("matrix not positive definite along search direction", rnorm, it)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        z = minv * r if jacobi else r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    rnorm = float(np.linalg.norm(r))
    if rnorm <= target:
        return x, max_iters
    raise SolverFailureError(
        f"conjugate gradient did not reach tolerance {tol:g} in {max_iters} iterations "
        f"(residual {rnorm:.3e}, target {target:.3e})",
        rnorm,
        max_iters,
    )


def solve_potential(
    system: SparseSPDSystem,
    g_nodal: NodalScalarField,
    tol: float = 1e-10,
    x0: Optional[np.ndarray] = None,
    jacobi: bool = False,
) -> tuple[NodalScalarField, int]:
    """Solve for the potential phi = u0 + g; returns (phi, cg_iterations)."""
    tri = system.tri
    if np.linalg.norm(system.rhs) == 0.0:
        u0, iters = np.zeros(system.rhs.shape[0]), 0
    else:
        u0, iters = conjugate_gradient(system.matrix, system.rhs, x0=x0, tol=tol, jacobi=jacobi)
    flat = g_nodal.flat().copy()
    flat[tri.interior_ids] += u0
    n = tri.grid.n
    return NodalScalarField(tri, flat.reshape(n + 1, n + 1).T), iters


def triangle_gradients(phi: NodalScalarField) -> TriangleGradientField:
    """Exact constant gradient of the P1 interpolant on every triangle."""
    v = phi.values
    h = phi.tri.grid.h
    ll, lr = v[:-1, :-1], v[1:, :-1]
    ur, ul = v[1:, 1:], v[:-1, 1:]
    lower = np.stack([(lr - ll) / h, (ur - lr) / h], axis=-1)
    upper = np.stack([(ur - ul) / h, (ul - ll) / h], axis=-1)
    return TriangleGradientField(phi.tri, lower, upper)


def cell_average_gradients(grads: TriangleGradientField) -> np.ndarray:
    """Cell mean of the gradient; the two triangles have equal area."""
    return 0.5 * (grads.lower + grads.upper)


def gradient_field_distance(a: TriangleGradientField, b: TriangleGradientField) -> float:
    """L2 norm of the difference of two piecewise-constant gradient fields."""
    area = a.tri.triangle_area
    s = np.sum((a.lower - b.lower) ** 2) + np.sum((a.upper - b.upper) ** 2)
    return float(np.sqrt(area * s))


def directional_energy(grads: TriangleGradientField, d: CellVectorField) -> tuple[float, float]:
    """(int |grad phi|^2, int (d . grad phi)^2) with d constant per cell."""
    area = grads.tri.triangle_area
    p = in_plane(d.interior)
    iso = area * (np.sum(grads.lower**2) + np.sum(grads.upper**2))
    proj_low = np.sum(grads.lower * p, axis=-1)
    proj_up = np.sum(grads.upper * p, axis=-1)
    aniso = area * (np.sum(proj_low**2) + np.sum(proj_up**2))
    return float(iso), float(aniso)
