"""Built-in structural checks behind `sim verify`.

Each check runs a short configuration and reports pass/fail with measured
values; failures are report entries, never exceptions, so the whole battery
always completes.
"""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Callable

import numpy as np

from . import fem
from .diagnostics import reduced_energy, total_energy
from .experiments import ExperimentPreset, domain_grid, exp2_initial, get_preset, shared_params, zero_momentum
from .grid import CellVectorField, GridSpec
from .rotation import rotation_matrix, rotate_vectors
from .runner import simulate
from .stepper import StepFailureError, initialize


def check_rotation(n: int, seed: int, dt_scale: float = 1.0) -> tuple[bool, dict]:
    """Kernel exactness on random momenta: orthogonality, fixed axis, midpoint identity."""
    rng = np.random.default_rng(seed)
    samples = 20_000
    w = rng.normal(size=(samples, 3)) * rng.uniform(0.1, 10.0, size=(samples, 1))
    dt = 10.0 ** rng.uniform(-3, 0.3, size=samples)
    d = rng.normal(size=(samples, 3))
    d /= np.linalg.norm(d, axis=-1, keepdims=True)

    worst_orth = 0.0
    worst_axis = 0.0
    for i in range(0, samples, samples // 200):
        V = rotation_matrix(w[i], dt[i])
        worst_orth = max(worst_orth, float(np.max(np.abs(V.T @ V - np.eye(3)))))
        worst_axis = max(worst_axis, float(np.linalg.norm(V @ w[i] - w[i]) / max(np.linalg.norm(w[i]), 1e-300)))
    d_new = rotate_vectors(d, w, dt[:, None])
    mid = 0.5 * (d_new + d)
    resid = (d_new - d) / dt[:, None] - np.cross(mid, w)
    worst_mid = float(np.max(np.linalg.norm(resid, axis=-1)))
    worst_norm = float(np.max(np.abs(np.linalg.norm(d_new, axis=-1) - 1.0)))
    ok = worst_orth <= 1e-12 and worst_axis <= 1e-12 and worst_mid <= 1e-12 and worst_norm <= 1e-12
    return ok, {
        "orthogonality_max": worst_orth,
        "fixed_axis_max": worst_axis,
        "midpoint_residual_max": worst_mid,
        "norm_drift_max": worst_norm,
    }


def check_constraint(n: int, seed: int, dt_scale: float = 1.0) -> tuple[bool, dict]:
    """Unit length survives a damped coupled run to roundoff."""
    preset = get_preset("exp1_pos", n, final_time=0.25)
    result = simulate(preset)
    worst = max(rec.constraint_dev for rec in result.records)
    return worst <= 1e-10, {"constraint_dev_max": worst, "steps": len(result.records)}


def _wave_map_preset(n: int, beta: float, final_time: float) -> ExperimentPreset:
    h = 1.0 / n
    params = replace(
        shared_params(n, beta=beta, final_time=final_time),
        dt=h / 10.0,
        fp_tol=1e-10,
        eps1=0.0,
        eps2=0.0,
    )
    return ExperimentPreset(
        name="wave_map",
        grid=domain_grid(n),
        params=params,
        d0=exp2_initial,
        w0=zero_momentum,
        g=None,
        f=None,
    )


def check_orthogonality(n: int, seed: int, dt_scale: float = 1.0) -> tuple[bool, dict]:
    """d.w stays zero along the undamped flow (the damped case drifts at
    O(dt^3) per step; the acceptance suite measures that separately)."""
    result = simulate(_wave_map_preset(n, beta=0.0, final_time=0.2))
    worst = max(rec.ortho_dev for rec in result.records)
    return worst <= 1e-7, {"ortho_dev_max": worst, "steps": len(result.records)}


def check_energy_balance(n: int, seed: int, dt_scale: float = 1.0) -> tuple[bool, dict]:
    """Exact conservation at beta=0 and the damping balance at beta=3,
    both with homogeneous data."""
    pre = _wave_map_preset(n, beta=0.0, final_time=0.2)
    st0 = initialize(pre.grid, pre.params, pre.d0, pre.w0, pre.g, pre.f)
    e_init = reduced_energy(st0.d, st0.w, pre.params)
    res0 = simulate(pre)
    cons_rel = abs(res0.records[-1].reduced_energy - e_init) / e_init

    pre3 = _wave_map_preset(n, beta=3.0, final_time=0.2)
    st3 = initialize(pre3.grid, pre3.params, pre3.d0, pre3.w0, pre3.g, pre3.f)
    e3_init = total_energy(st3, pre3.params)
    res3 = simulate(pre3)
    last = res3.records[-1]
    bal_rel = abs(last.total_energy + last.damping_integral - e3_init) / e3_init
    ok = cons_rel <= 1e-7 and bal_rel <= 1e-7
    return ok, {"conservation_rel": cons_rel, "damped_balance_rel": bal_rel}


def check_elliptic_convergence(n: int, seed: int, dt_scale: float = 1.0) -> tuple[bool, dict]:
    """Nodal max error of the manufactured sin*sin solution drops ~4x per halving."""
    details: dict = {}
    ok = True
    for eps2 in (0.0, 0.5):
        errors = []
        for m in (8, 16, 32):
            errors.append(_manufactured_error(m, eps2))
        ratios = [errors[i] / errors[i + 1] for i in range(len(errors) - 1)]
        details[f"ratios_eps2_{eps2:g}"] = ratios
        ok = ok and all(3.5 <= r <= 4.5 for r in ratios)
    return ok, details


def _manufactured_error(m: int, eps2: float) -> float:
    grid = GridSpec(n=m, side_length=1.0, origin=(0.0, 0.0))
    tri = fem.Triangulation(grid)
    d = CellVectorField.from_interior(grid, np.broadcast_to([1.0, 0.0, 0.0], (m, m, 3)).copy())
    exact = lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y)
    factor = (2.0 + eps2) * np.pi**2
    f = lambda x, y: factor * exact(x, y)
    g = fem.NodalScalarField.zeros(tri)
    system = fem.assemble_system(tri, d, eps2, g, f)
    phi, _ = fem.solve_potential(system, g, tol=1e-12)
    Xn, Yn = grid.node_mesh()
    return float(np.max(np.abs(phi.values - exact(Xn, Yn))))


def check_contraction(n: int, seed: int, dt_scale: float = 1.0) -> tuple[bool, dict]:
    """Successive stopping norms shrink geometrically under dt = 0.02 h.

    dt_scale deliberately loosens the step; at 10x the bound the iteration
    is expected to stall or blow up, which this check then reports.
    """
    h = 1.0 / n
    preset = get_preset("exp1_pos", n, final_time=0.1)
    preset = replace(preset, params=replace(preset.params, dt=0.02 * h * dt_scale))
    ratios_ok = True
    worst_ratio = 0.0
    iters: list[int] = []

    def on_record(rec, state, stats):
        nonlocal ratios_ok, worst_ratio
        iters.append(stats.iterations)
        hist = stats.norm_history
        for a, b in zip(hist, hist[1:]):
            if a > 0:
                r = b / a
                worst_ratio = max(worst_ratio, r)
                if r >= 1.0:
                    ratios_ok = False

    try:
        simulate(preset, on_record=on_record, allow_dt_retry=False)
    except StepFailureError as exc:
        return False, {
            "failed": "fixed-point iteration exceeded its limit",
            "last_norm": exc.last_norm,
            "mean_iterations": float(np.mean(iters)) if iters else math.nan,
        }
    mean_iters = float(np.mean(iters))
    ok = ratios_ok and mean_iters <= 10.0
    return ok, {"worst_ratio": worst_ratio, "mean_iterations": mean_iters, "steps": len(iters)}


CHECKS: dict[str, Callable[[int, int, float], tuple[bool, dict]]] = {
    "rotation": check_rotation,
    "constraint": check_constraint,
    "orthogonality": check_orthogonality,
    "energy-balance": check_energy_balance,
    "elliptic-convergence": check_elliptic_convergence,
    "contraction": check_contraction,
}


def run_checks(names: list[str], n: int, seed: int, dt_scale: float = 1.0) -> dict:
    report = {"checks": [], "all_passed": True}
    for name in names:
        passed, details = CHECKS[name](n, seed, dt_scale)
        report["checks"].append({"name": name, "passed": passed, "details": details})
        report["all_passed"] = report["all_passed"] and passed
    return report
