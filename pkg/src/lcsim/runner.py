"""Simulation loop orchestration and on-disk outputs.

A run produces energies.csv (one diagnostics row per step), one snapshot CSV
per scheduled time, and a manifest recording every resolved parameter; the
manifest is itself a valid config file, so re-running from it reproduces the
run byte for byte.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .diagnostics import DiagnosticsRecord, damping_increment, record_step
from .experiments import DEFAULT_N, PRESET_NAMES, ExperimentPreset, get_preset
from .fem import cell_average_gradients
from .stepper import (
    CflReport,
    InvalidParamsError,
    Params,
    State,
    StepFailureError,
    StepStats,
    cfl_check,
    halved_dt,
    initialize,
    step_with_boundary,
)

ENERGY_COLUMNS = (
    "step",
    "time",
    "reduced_energy",
    "total_energy",
    "damping_integral",
    "constraint_dev",
    "ortho_dev",
    "alignment",
    "fp_iters",
    "fp_final_norm",
)

PARAM_KEYS = (
    "alpha",
    "beta",
    "k",
    "eps1",
    "eps2",
    "final_time",
    "dt",
    "fp_tol",
    "max_fp_iters",
    "cfl_kappa",
    "theta",
    "solver_tol",
)
# keys that feed the shared-parameter formulas; the rest override Params fields directly
BUILDER_KEYS = ("alpha", "beta", "k", "eps1", "eps2", "final_time")


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


@dataclass
class SimulationResult:
    state: State
    records: list[DiagnosticsRecord]
    params: Params
    dt_halved: bool


def simulate(
    preset: ExperimentPreset,
    *,
    on_record: Optional[Callable[[DiagnosticsRecord, State, StepStats], None]] = None,
    on_snapshot: Optional[Callable[[float, State], None]] = None,
    allow_dt_retry: bool = True,
) -> SimulationResult:
    """Run the time loop to final_time.

    On a step failure the time step is halved once and the step retried; a
    second failure propagates.  Snapshots fire at the first step whose time
    reaches each scheduled value.
    """
    params = preset.params
    state = initialize(preset.grid, params, preset.d0, preset.w0, preset.g, preset.f)
    eps_t = 1e-9 * params.final_time
    pending = sorted(preset.snapshot_times)
    snap_idx = 0
    damping = 0.0
    halved = False
    records: list[DiagnosticsRecord] = []

    while state.t < params.final_time - eps_t:
        try:
            new_state, stats = step_with_boundary(state, params, preset.g, preset.f)
        except StepFailureError:
            if halved or not allow_dt_retry:
                raise
            params = halved_dt(params)
            halved = True
            continue
        damping += damping_increment(state.w, new_state.w, params)
        state = new_state
        rec = record_step(state, params, damping, stats.iterations, stats.final_norm)
        records.append(rec)
        if on_record is not None:
            on_record(rec, state, stats)
        while snap_idx < len(pending) and state.t >= pending[snap_idx] - eps_t:
            if on_snapshot is not None:
                on_snapshot(pending[snap_idx], state)
            snap_idx += 1

    return SimulationResult(state=state, records=records, params=params, dt_halved=halved)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def energy_row(rec: DiagnosticsRecord) -> str:
    return ",".join(
        [
            str(rec.step),
            _fmt(rec.time),
            _fmt(rec.reduced_energy),
            _fmt(rec.total_energy),
            _fmt(rec.damping_integral),
            _fmt(rec.constraint_dev),
            _fmt(rec.ortho_dev),
            _fmt(rec.alignment),
            str(rec.fp_iters),
            _fmt(rec.fp_final_norm),
        ]
    )


def write_snapshot(path: Path, state: State) -> None:
    """Cells section (x,y,d,w,cell-averaged field), '#nodes' marker, nodes section."""
    grid = state.d.grid
    X, Y = grid.cell_center_mesh()
    e_avg = cell_average_gradients(state.grads)
    d = state.d.interior
    w = state.w.interior
    cols = [X, Y, d[..., 0], d[..., 1], d[..., 2], w[..., 0], w[..., 1], w[..., 2], e_avg[..., 0], e_avg[..., 1]]
    # rows ordered y-outer, x-inner
    cell_table = np.column_stack([c.T.ravel() for c in cols])
    Xn, Yn = grid.node_mesh()
    node_table = np.column_stack([Xn.T.ravel(), Yn.T.ravel(), state.phi.values.T.ravel()])
    with open(path, "w") as fh:
        fh.write("x,y,d1,d2,d3,w1,w2,w3,Ex_avg,Ey_avg\n")
        for row in cell_table:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
        fh.write("#nodes\n")
        fh.write("x,y,phi\n")
        for row in node_table:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


@dataclass
class RunConfig:
    """Resolved CLI/run settings; overrides hold Params-field replacements."""

    preset: str
    n: int = DEFAULT_N
    out: str = ""
    cfl: str = "warn"
    seed: int = 0
    snapshot_times: Optional[tuple[float, ...]] = None
    overrides: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.preset not in PRESET_NAMES:
            raise ConfigError(f"unknown preset {self.preset!r}; choose from {', '.join(PRESET_NAMES)}")
        if self.cfl not in ("warn", "fail"):
            raise ConfigError(f"cfl mode must be 'warn' or 'fail', got {self.cfl!r}")
        if self.n < 2:
            raise ConfigError(f"grid size n must be at least 2, got {self.n}")
        if not self.out:
            self.out = os.environ.get("SIM_OUT_DIR", "sim_out")


def parse_override(text: str) -> tuple[str, float | int]:
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, _, raw = text.partition("=")
    key = key.strip()
    if key not in PARAM_KEYS:
        raise ConfigError(f"unknown parameter {key!r}; settable keys: {', '.join(PARAM_KEYS)}")
    try:
        return key, int(raw) if key == "max_fp_iters" else float(raw)
    except ValueError as exc:
        raise ConfigError(f"cannot parse value for {key!r}: {raw!r}") from exc


def parse_config_file(path: Path) -> dict:
    """Flat key=value format with # comments; returns raw string values."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = stripped.partition("=")
        out[key.strip()] = value.strip()
    return out


def config_from_sources(file_values: dict, cli_values: dict) -> RunConfig:
    """Merge config-file values and CLI flags; flags win."""
    merged = dict(file_values)
    merged.update({k: v for k, v in cli_values.items() if v is not None})
    overrides = dict(merged.pop("overrides", {}))
    for key in list(merged):
        if key in PARAM_KEYS:
            key2, val = parse_override(f"{key}={merged.pop(key)}")
            overrides.setdefault(key2, val)
    preset = merged.pop("preset", None)
    if preset is None:
        raise ConfigError("a preset is required (e.g. --preset exp1_pos)")
    snap = merged.pop("snapshot_times", None)
    if isinstance(snap, str):
        try:
            snap = tuple(float(v) for v in snap.split(",") if v.strip())
        except ValueError as exc:
            raise ConfigError(f"cannot parse snapshot_times: {snap!r}") from exc
    try:
        cfg = RunConfig(
            preset=str(preset),
            n=int(merged.pop("n", DEFAULT_N)),
            out=str(merged.pop("out", "")),
            cfl=str(merged.pop("cfl", "warn")),
            seed=int(merged.pop("seed", 0)),
            snapshot_times=snap,
            overrides=overrides,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    if merged:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(merged))}")
    return cfg


def resolve_preset(config: RunConfig) -> ExperimentPreset:
    """Apply overrides: formula inputs rebuild dt/fp_tol, the rest set fields."""
    builder = {k: v for k, v in config.overrides.items() if k in BUILDER_KEYS}
    direct = {k: v for k, v in config.overrides.items() if k not in BUILDER_KEYS}
    preset = get_preset(config.preset, config.n, **builder)
    params = replace(preset.params, **direct) if direct else preset.params
    params.validate()
    if config.snapshot_times is not None:
        preset = replace(preset, params=params, snapshot_times=tuple(config.snapshot_times))
    else:
        preset = replace(preset, params=params)
    return preset


def manifest_text(config: RunConfig, preset: ExperimentPreset) -> str:
    p = preset.params
    lines = [
        "# resolved run parameters; feed back via `sim run --config <this file>`",
        f"preset={config.preset}",
        f"n={config.n}",
        f"out={config.out}",
        f"cfl={config.cfl}",
        f"seed={config.seed}",
        "snapshot_times=" + ",".join(_fmt(t) for t in preset.snapshot_times),
        f"alpha={_fmt(p.alpha)}",
        f"beta={_fmt(p.beta)}",
        f"k={_fmt(p.k)}",
        f"eps1={_fmt(p.eps1)}",
        f"eps2={_fmt(p.eps2)}",
        f"final_time={_fmt(p.final_time)}",
        f"dt={_fmt(p.dt)}",
        f"fp_tol={_fmt(p.fp_tol)}",
        f"max_fp_iters={p.max_fp_iters}",
        f"cfl_kappa={_fmt(p.cfl_kappa)}",
        f"theta={_fmt(p.theta)}",
    ]
    if p.solver_tol is not None:
        lines.append(f"solver_tol={_fmt(p.solver_tol)}")
    return "\n".join(lines) + "\n"


def snapshot_filename(t: float) -> str:
    return f"snapshot_t{t:g}.csv"


def run_to_directory(config: RunConfig, warn=print) -> tuple[SimulationResult, CflReport]:
    """Execute a configured run, writing all outputs into config.out."""
    preset = resolve_preset(config)
    report = cfl_check(preset.params, preset.grid)
    if not report.passed:
        msg = (
            f"time step {report.dt:.6g} exceeds the contraction bound "
            f"kappa*h^theta = {report.bound:.6g}"
        )
        if config.cfl == "fail":
            raise InvalidParamsError(msg)
        warn(f"warning: {msg}")

    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "manifest.txt").write_text(manifest_text(config, preset))

    energies = open(out_dir / "energies.csv", "w")
    energies.write(",".join(ENERGY_COLUMNS) + "\n")

    def on_record(rec: DiagnosticsRecord, state: State, stats: StepStats) -> None:
        energies.write(energy_row(rec) + "\n")

    def on_snapshot(t_sched: float, state: State) -> None:
        write_snapshot(out_dir / snapshot_filename(t_sched), state)
        energies.flush()

    try:
        result = simulate(preset, on_record=on_record, on_snapshot=on_snapshot)
    finally:
        energies.close()
    return result, report
