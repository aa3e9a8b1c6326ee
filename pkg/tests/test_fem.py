import numpy as np
import pytest

from lcsim import fem
from lcsim.grid import CellVectorField, GridSpec


def unit_director_field(grid, vec):
    interior = np.broadcast_to(np.asarray(vec, dtype=float), (grid.n, grid.n, 3)).copy()
    return CellVectorField.from_interior(grid, interior)


def random_director_field(grid, rng):
    v = rng.normal(size=(grid.n, grid.n, 3))
    return CellVectorField.from_interior(grid, v / np.linalg.norm(v, axis=-1, keepdims=True))


def element_stiffness(coords, tensor):
    """Hand formula from vertex coordinates, independent of the cached patterns."""
    (x0, y0), (x1, y1), (x2, y2) = coords
    area2 = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
    grads = np.array(
        [
            [y1 - y2, x2 - x1],
            [y2 - y0, x0 - x2],
            [y0 - y1, x1 - x0],
        ]
    ) / area2
    return 0.5 * abs(area2) * grads @ tensor @ grads.T


def assemble_by_hand(tri, tensor_for_cell):
    n = tri.grid.n
    A = np.zeros((tri.n_nodes, tri.n_nodes))
    for t, nodes in enumerate(tri.triangles):
        cell = t // 2
        ci, cj = cell % n, cell // n
        K = element_stiffness(tri.nodes[nodes], tensor_for_cell(ci, cj))
        for a in range(3):
            for b in range(3):
                A[nodes[a], nodes[b]] += K[a, b]
    return A


@pytest.mark.parametrize(
    "n,nodes,triangles",
    [(1, 4, 2), (2, 9, 8), (64, 4225, 8192)],
)
def test_triangulation_counts(n, nodes, triangles):
    tri = fem.Triangulation(GridSpec(n=n))
    assert tri.n_nodes == nodes
    assert tri.triangles.shape == (triangles, 3)


def test_boundary_and_interior_node_counts():
    tri = fem.Triangulation(GridSpec(n=2))
    assert int(tri.boundary_mask.sum()) == 8
    assert tri.interior_ids.size == 1


def test_triangles_counterclockwise_and_inside_one_cell():
    grid = GridSpec(n=3, side_length=1.0, origin=(-0.5, -0.5))
    tri = fem.Triangulation(grid)
    pts = tri.nodes[tri.triangles]
    cross = (pts[:, 1, 0] - pts[:, 0, 0]) * (pts[:, 2, 1] - pts[:, 0, 1]) - (
        pts[:, 2, 0] - pts[:, 0, 0]
    ) * (pts[:, 1, 1] - pts[:, 0, 1])
    assert np.all(cross > 0)
    # triangle t belongs to cell t//2; its vertices stay within that cell's bounds
    n = grid.n
    for t, nodes in enumerate(tri.triangles):
        ci, cj = (t // 2) % n, (t // 2) // n
        x0 = grid.origin[0] + ci * grid.h
        y0 = grid.origin[1] + cj * grid.h
        xs, ys = tri.nodes[nodes, 0], tri.nodes[nodes, 1]
        assert np.all(xs >= x0 - 1e-14) and np.all(xs <= x0 + grid.h + 1e-14)
        assert np.all(ys >= y0 - 1e-14) and np.all(ys <= y0 + grid.h + 1e-14)


def test_single_cell_laplace_stiffness_hand_assembled():
    grid = GridSpec(n=1, side_length=1.0)
    tri = fem.Triangulation(grid)
    d = unit_director_field(grid, [0.0, 0.0, 1.0])
    g = fem.NodalScalarField.zeros(tri)
    system = fem.assemble_system(tri, d, eps2=0.7, g_nodal=g)  # eps2 inert: out-of-plane d
    data = tri.full_matrix_data(np.broadcast_to(np.eye(2), (1, 1, 2, 2)).copy())
    A = tri.full_matrix(data).toarray()
    # node ids: 0=(0,0) 1=(1,0) 2=(0,1) 3=(1,1); diagonal pair (0,0)-(1,1) decouples
    expected = np.array(
        [
            [1.0, -0.5, -0.5, 0.0],
            [-0.5, 1.0, 0.0, -0.5],
            [-0.5, 0.0, 1.0, -0.5],
            [0.0, -0.5, -0.5, 1.0],
        ]
    )
    np.testing.assert_allclose(A, expected, atol=1e-15)
    assert system.matrix.shape == (0, 0)  # no interior nodes at n=1


def test_full_matrix_matches_hand_assembly_random_director():
    rng = np.random.default_rng(10)
    grid = GridSpec(n=3)
    tri = fem.Triangulation(grid)
    d = random_director_field(grid, rng)
    eps2 = -0.4
    p = d.interior[..., :2]
    tensors = np.eye(2) + eps2 * p[..., :, None] * p[..., None, :]
    A_fast = tri.full_matrix(tri.full_matrix_data(tensors)).toarray()
    A_ref = assemble_by_hand(tri, lambda ci, cj: tensors[ci, cj])
    np.testing.assert_allclose(A_fast, A_ref, atol=1e-13)


def test_out_of_plane_director_decouples():
    grid = GridSpec(n=4)
    tri = fem.Triangulation(grid)
    g = fem.NodalScalarField.zeros(tri)
    up = fem.assemble_system(tri, unit_director_field(grid, [0, 0, 1.0]), 0.5, g)
    down = fem.assemble_system(tri, unit_director_field(grid, [0, 0, -1.0]), 0.5, g)
    iso = fem.assemble_system(tri, unit_director_field(grid, [1.0, 0, 0]), 0.0, g)
    assert abs(up.matrix - iso.matrix).max() <= 1e-15
    assert abs(down.matrix - iso.matrix).max() <= 1e-15


def test_interior_matrix_positive_definite_negative_eps2():
    rng = np.random.default_rng(11)
    grid = GridSpec(n=4)
    tri = fem.Triangulation(grid)
    d = random_director_field(grid, rng)
    system = fem.assemble_system(tri, d, -0.5, fem.NodalScalarField.zeros(tri))
    dense = system.matrix.toarray()
    assert dense.shape == (9, 9)
    assert np.min(np.linalg.eigvalsh(dense)) > 0.0


def test_matrix_symmetry():
    rng = np.random.default_rng(12)
    grid = GridSpec(n=8)
    tri = fem.Triangulation(grid)
    system = fem.assemble_system(
        tri, random_director_field(grid, rng), 0.5, fem.NodalScalarField.zeros(tri)
    )
    assert abs(system.matrix - system.matrix.T).max() <= 1e-14


def test_ellipticity_guard():
    grid = GridSpec(n=2)
    tri = fem.Triangulation(grid)
    with pytest.raises(fem.EllipticityError):
        fem.assemble_system(tri, unit_director_field(grid, [1, 0, 0]), -1.0, fem.NodalScalarField.zeros(tri))


def test_coercivity_surrogate():
    # v'Av >= (1 + min(0, eps2)) v'Lv for |d| = 1
    rng = np.random.default_rng(13)
    grid = GridSpec(n=6)
    tri = fem.Triangulation(grid)
    d = random_director_field(grid, rng)
    g = fem.NodalScalarField.zeros(tri)
    for eps2 in (-0.9, -0.5, 0.5, 2.0):
        A = fem.assemble_system(tri, d, eps2, g).matrix
        L = fem.assemble_system(tri, d, 0.0, g).matrix
        bound = 1.0 + min(0.0, eps2)
        for _ in range(20):
            v = rng.normal(size=A.shape[0])
            assert v @ (A @ v) >= bound * (v @ (L @ v)) - 1e-12


def test_solve_zero_data_gives_zero():
    grid = GridSpec(n=5)
    tri = fem.Triangulation(grid)
    d = unit_director_field(grid, [1, 0, 0])
    g = fem.NodalScalarField.zeros(tri)
    phi, iters = fem.solve_potential(fem.assemble_system(tri, d, 0.3, g), g, tol=1e-12)
    assert iters == 0
    assert np.all(phi.values == 0.0)


def test_affine_solution_reproduced_exactly():
    grid = GridSpec(n=6)
    tri = fem.Triangulation(grid)
    d = unit_director_field(grid, [1, 0, 0])
    g = fem.NodalScalarField.sample(tri, lambda X, Y: X)
    phi, _ = fem.solve_potential(fem.assemble_system(tri, d, 0.0, g), g, tol=1e-12)
    Xn, _ = grid.node_mesh()
    np.testing.assert_allclose(phi.values, Xn, atol=1e-10)


@pytest.mark.parametrize("eps2", [0.0, 0.5])
def test_manufactured_solution_second_order(eps2):
    from lcsim.verify import _manufactured_error

    errors = [_manufactured_error(m, eps2) for m in (8, 16, 32)]
    ratios = [errors[i] / errors[i + 1] for i in range(2)]
    assert all(3.5 <= r <= 4.5 for r in ratios)


def test_weak_form_residual_below_solver_tolerance():
    rng = np.random.default_rng(14)
    grid = GridSpec(n=8)
    tri = fem.Triangulation(grid)
    d = random_director_field(grid, rng)
    g = fem.NodalScalarField.sample(tri, lambda X, Y: np.sin(2 * X) * Y)
    f = lambda x, y: np.cos(x + y)
    tol = 1e-11
    system = fem.assemble_system(tri, d, 0.5, g, f)
    phi, _ = fem.solve_potential(system, g, tol=tol)
    u0 = phi.flat()[tri.interior_ids] - g.flat()[tri.interior_ids]
    residual = system.matrix @ u0 - system.rhs
    assert np.max(np.abs(residual)) <= 10 * tol * np.linalg.norm(system.rhs)


def test_triangle_gradients_constant_field():
    grid = GridSpec(n=4)
    tri = fem.Triangulation(grid)
    phi = fem.NodalScalarField(tri, np.full((5, 5), 3.3))
    grads = fem.triangle_gradients(phi)
    assert np.all(grads.lower == 0.0) and np.all(grads.upper == 0.0)


@pytest.mark.parametrize("coeffs", [(1.0, 0.0), (3.0, -2.0)])
def test_triangle_gradients_affine(coeffs):
    a, b = coeffs
    grid = GridSpec(n=4, origin=(-0.5, -0.5))
    tri = fem.Triangulation(grid)
    phi = fem.NodalScalarField.sample(tri, lambda X, Y: a * X + b * Y)
    grads = fem.triangle_gradients(phi)
    np.testing.assert_allclose(grads.lower, np.broadcast_to([a, b], (4, 4, 2)), atol=1e-12)
    np.testing.assert_allclose(grads.upper, np.broadcast_to([a, b], (4, 4, 2)), atol=1e-12)
    np.testing.assert_allclose(fem.cell_average_gradients(grads), np.broadcast_to([a, b], (4, 4, 2)), atol=1e-12)


def test_cell_average_is_mean_of_the_two_triangles():
    grid = GridSpec(n=2)
    tri = fem.Triangulation(grid)
    lower = np.zeros((2, 2, 2))
    upper = np.zeros((2, 2, 2))
    lower[0, 0] = [1.0, 0.0]
    upper[0, 0] = [0.0, 1.0]
    avg = fem.cell_average_gradients(fem.TriangleGradientField(tri, lower, upper))
    np.testing.assert_allclose(avg[0, 0], [0.5, 0.5])


def test_conjugate_gradient_against_dense_solve():
    rng = np.random.default_rng(15)
    import scipy.sparse as sp

    m = 40
    B = rng.normal(size=(m, m))
    A = sp.csr_matrix(B @ B.T + m * np.eye(m))
    b = rng.normal(size=m)
    x, iters = fem.conjugate_gradient(A, b, tol=1e-12)
    assert iters > 0
    np.testing.assert_allclose(x, np.linalg.solve(A.toarray(), b), rtol=1e-8)
    # warm start from the solution converges immediately
    x2, it2 = fem.conjugate_gradient(A, b, x0=x, tol=1e-12)
    assert it2 == 0
    # jacobi path reaches the same answer
    x3, _ = fem.conjugate_gradient(A, b, tol=1e-12, jacobi=True)
    np.testing.assert_allclose(x3, x, rtol=1e-7)


def test_conjugate_gradient_failure_carries_residual():
    import scipy.sparse as sp

    A = sp.csr_matrix(np.diag([1.0, 1e8]))
    b = np.array([1.0, 1.0])
    with pytest.raises(fem.SolverFailureError) as info:
        fem.conjugate_gradient(A, b, tol=1e-16, max_iters=1)
    assert info.value.residual > 0.0
    assert info.value.iterations == 1
