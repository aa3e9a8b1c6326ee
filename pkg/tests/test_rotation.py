import numpy as np

from lcsim.grid import CellVectorField, GridSpec, cell_l2_norm
from lcsim.rotation import advance_director, cross_matrix, rotate_vectors, rotation_matrix


def random_units(rng, size):
    v = rng.normal(size=(size, 3))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def test_cross_matrix_convention():
    rng = np.random.default_rng(0)
    w, v = rng.normal(size=3), rng.normal(size=3)
    np.testing.assert_allclose(cross_matrix(w) @ v, np.cross(v, w), atol=1e-15)


def test_zero_momentum_gives_identity():
    np.testing.assert_array_equal(rotation_matrix(np.zeros(3), dt=0.3), np.eye(3))


def test_quarter_turn_by_hand():
    # solving (a-1)/dt = b/2, b/dt = -(1+a)/2 for dt=2 gives (a,b) = (0,-1)
    V = rotation_matrix(np.array([0.0, 0.0, 1.0]), dt=2.0)
    np.testing.assert_allclose(V @ [1.0, 0.0, 0.0], [0.0, -1.0, 0.0], atol=1e-15)


def test_momentum_axis_is_fixed():
    w = np.array([1.0, 2.0, 3.0])
    for dt in (1e-3, 0.1, 5.0):
        np.testing.assert_allclose(rotation_matrix(w, dt) @ w, w, atol=1e-12)


def test_orthogonality_and_norm_random():
    rng = np.random.default_rng(1)
    for _ in range(300):
        w = rng.normal(size=3) * rng.uniform(0.0, 10.0)
        dt = 10.0 ** rng.uniform(-3, 0.5)
        V = rotation_matrix(w, dt)
        assert np.max(np.abs(V.T @ V - np.eye(3))) <= 1e-12
        d = random_units(rng, 1)[0]
        assert abs(np.linalg.norm(V @ d) - 1.0) <= 1e-12


def test_midpoint_identity_random():
    rng = np.random.default_rng(2)
    d = random_units(rng, 2000)
    w = rng.normal(size=(2000, 3)) * rng.uniform(0.1, 8.0, size=(2000, 1))
    dt = 10.0 ** rng.uniform(-3, 0.3, size=(2000, 1))
    d_new = rotate_vectors(d, w, dt)
    resid = (d_new - d) / dt - np.cross(0.5 * (d_new + d), w)
    assert np.max(np.linalg.norm(resid, axis=-1)) <= 1e-12


def test_increment_form_matches_matrix_form():
    rng = np.random.default_rng(3)
    for _ in range(50):
        d = random_units(rng, 1)[0]
        w = rng.normal(size=3) * 3.0
        dt = rng.uniform(1e-3, 2.0)
        np.testing.assert_allclose(rotate_vectors(d, w, dt), rotation_matrix(w, dt) @ d, atol=1e-14)


def integrate_cross_flow(d0, w, total_time, steps=4000):
    """RK4 for d' = d x w with constant w; independent of the midpoint map."""
    d = np.array(d0, dtype=float)
    dt = total_time / steps
    rhs = lambda v: np.cross(v, w)
    for _ in range(steps):
        k1 = rhs(d)
        k2 = rhs(d + 0.5 * dt * k1)
        k3 = rhs(d + 0.5 * dt * k2)
        k4 = rhs(d + dt * k3)
        d = d + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return d


def test_rotation_angle_against_integration_oracle():
    # one midpoint step rotates by 2*arctan(dt|w|/2); integrating the exact
    # flow for exactly that angle must land on the same point
    rng = np.random.default_rng(4)
    for _ in range(5):
        w = rng.normal(size=3) * rng.uniform(0.5, 3.0)
        dt = rng.uniform(0.1, 1.5)
        d0 = random_units(rng, 1)[0]
        speed = np.linalg.norm(w)
        angle = 2.0 * np.arctan(0.5 * dt * speed)
        oracle = integrate_cross_flow(d0, w, angle / speed)
        np.testing.assert_allclose(rotate_vectors(d0, w, dt), oracle, atol=1e-9)


def test_parallel_momentum_leaves_director_fixed():
    rng = np.random.default_rng(5)
    grid = GridSpec(n=4)
    d = CellVectorField.from_interior(grid, random_units(rng, 16).reshape(4, 4, 3))
    w = CellVectorField.from_interior(grid, 2.7 * d.interior)
    out = advance_director(d, w, dt=0.8)
    np.testing.assert_allclose(out.interior, d.interior, atol=1e-14)


def test_zero_momentum_field_identity():
    rng = np.random.default_rng(6)
    grid = GridSpec(n=3)
    d = CellVectorField.from_interior(grid, random_units(rng, 9).reshape(3, 3, 3))
    out = advance_director(d, CellVectorField.zeros(grid), dt=0.5)
    np.testing.assert_array_equal(out.interior, d.interior)


def test_uniform_quarter_turn_field():
    grid = GridSpec(n=4)
    d = CellVectorField.from_interior(grid, np.broadcast_to([1.0, 0.0, 0.0], (4, 4, 3)).copy())
    w = CellVectorField.from_interior(grid, np.broadcast_to([0.0, 0.0, 1.0], (4, 4, 3)).copy())
    out = advance_director(d, w, dt=2.0)
    np.testing.assert_allclose(out.interior, np.broadcast_to([0.0, -1.0, 0.0], (4, 4, 3)), atol=1e-14)


def test_norm_preserved_over_many_steps():
    rng = np.random.default_rng(7)
    grid = GridSpec(n=8)
    d = CellVectorField.from_interior(grid, random_units(rng, 64).reshape(8, 8, 3))
    for _ in range(200):
        w = CellVectorField.from_interior(grid, rng.normal(size=(8, 8, 3)))
        d = advance_director(d, w, dt=0.05)
    drift = np.max(np.abs(np.linalg.norm(d.interior, axis=-1) - 1.0))
    assert drift <= 1e-12


def lipschitz_ratio(rng, grid, dt):
    d = CellVectorField.from_interior(grid, random_units(rng, grid.n**2).reshape(grid.n, grid.n, 3))
    base = rng.normal(size=(grid.n, grid.n, 3))
    worst = 0.0
    for _ in range(20):
        w1 = base + rng.normal(size=base.shape)
        w2 = base + rng.normal(size=base.shape)
        d1 = rotate_vectors(d.interior, 0.5 * (base + w1), dt)
        d2 = rotate_vectors(d.interior, 0.5 * (base + w2), dt)
        num = cell_l2_norm(grid, d1 - d2)
        den = cell_l2_norm(grid, w1 - w2)
        worst = max(worst, num / den)
    return worst


def test_lipschitz_in_momentum_scales_with_dt():
    # ||V(wbar1)d - V(wbar2)d|| <= C dt ||w1 - w2|| with C stable under halving
    rng = np.random.default_rng(8)
    grid = GridSpec(n=16)
    constants = []
    for dt in (0.2, 0.1, 0.05):
        constants.append(lipschitz_ratio(rng, grid, dt) / dt)
    assert all(c <= 1.0 for c in constants)
    assert max(constants) / min(constants) < 1.3
