"""Reference experiment configurations.

All presets share the domain [-0.5, 0.5]^2, inertia 1/2, unit elastic
constant, the oscillating boundary potential

    g(t, x, y) = 10 sin(2 pi t + 0.2) (x + 0.5) sin(pi y),

zero source and zero initial angular momentum.  The time step follows
dt = h * sqrt(beta h^2 + alpha) / 10 and the fixed-point tolerance h^2 / 20.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .grid import GridSpec
from .stepper import Params

DEFAULT_N = 64
PRESET_NAMES = ("exp1_pos", "exp1_neg", "exp2_lowdamp", "exp2_highdamp")


def domain_grid(n: int = DEFAULT_N) -> GridSpec:
    return GridSpec(n=n, side_length=1.0, origin=(-0.5, -0.5))


def boundary_potential(t: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return 10.0 * math.sin(2.0 * math.pi * t + 0.2) * (x + 0.5) * np.sin(np.pi * y)


def exp1_initial(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Uniform in-plane director (1, 1, 0)/sqrt(2)."""
    d = np.zeros(np.shape(x) + (3,))
    d[..., 0] = d[..., 1] = 1.0 / math.sqrt(2.0)
    return d


def exp2_initial(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Bubble datum pointing up at the origin, down for r >= 1/2.

    d = (2 x1 a, 2 x2 a, a^2 - r^2) / (a^2 + r^2) with a = (1 - 2r)^4; the
    algebraic identity (2ra)^2 + (a^2 - r^2)^2 = (a^2 + r^2)^2 makes it unit
    for every point, and both branches agree at r = 1/2.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.hypot(x, y)
    a = (1.0 - 2.0 * r) ** 4
    denom = a * a + r * r
    inside = r < 0.5
    d = np.empty(np.shape(r) + (3,))
    d[..., 0] = np.where(inside, 2.0 * x * a / denom, 0.0)
    d[..., 1] = np.where(inside, 2.0 * y * a / denom, 0.0)
    d[..., 2] = np.where(inside, (a * a - r * r) / denom, -1.0)
    return d


def zero_momentum(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.zeros(np.shape(x) + (3,))


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    grid: GridSpec
    params: Params
    d0: Callable[[np.ndarray, np.ndarray], np.ndarray]
    w0: Callable[[np.ndarray, np.ndarray], np.ndarray] = zero_momentum
    g: Optional[Callable[[float, np.ndarray, np.ndarray], np.ndarray]] = boundary_potential
    f: Optional[Callable[[float, np.ndarray, np.ndarray], np.ndarray]] = None
    snapshot_times: tuple[float, ...] = field(default_factory=tuple)


def shared_params(
    n: int = DEFAULT_N,
    *,
    beta: float,
    final_time: float,
    eps1: float = 0.0,
    eps2: float = 0.0,
    alpha: float = 0.5,
    k: float = 1.0,
) -> Params:
    """Params with the reference time step and fixed-point tolerance for mesh n."""
    h = 1.0 / n
    return Params(
        dt=h * math.sqrt(beta * h * h + alpha) / 10.0,
        final_time=final_time,
        fp_tol=h * h / 20.0,
        alpha=alpha,
        beta=beta,
        k=k,
        eps1=eps1,
        eps2=eps2,
    )


def get_preset(name: str, n: int = DEFAULT_N, **param_overrides) -> ExperimentPreset:
    """Build a named preset on an n x n grid.

    param_overrides may change the inputs of the shared-parameter formulas
    (alpha, beta, k, eps1, eps2, final_time); derived quantities (dt, fp_tol)
    are recomputed from them.
    """
    if name == "exp1_pos":
        base = dict(beta=2.0, eps1=5.0, eps2=0.5, final_time=2.0)
        d0, snaps = exp1_initial, (0.25, 0.5, 2.0)
    elif name == "exp1_neg":
        base = dict(beta=2.0, eps1=-5.0, eps2=-0.5, final_time=2.0)
        d0, snaps = exp1_initial, (0.25, 0.5, 2.0)
    elif name == "exp2_lowdamp":
        base = dict(beta=0.5, eps1=-5.0, eps2=-0.5, final_time=1.0)
        d0, snaps = exp2_initial, (0.25, 0.5, 0.75, 1.0)
    elif name == "exp2_highdamp":
        base = dict(beta=3.0, eps1=-5.0, eps2=-0.5, final_time=1.0)
        d0, snaps = exp2_initial, (0.25, 0.5, 0.75, 1.0)
    else:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    base.update(param_overrides)
    return ExperimentPreset(
        name=name,
        grid=domain_grid(n),
        params=shared_params(n, **base),
        d0=d0,
        snapshot_times=snaps,
    )
