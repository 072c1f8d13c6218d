"""Command-line front end.

Four subcommands: ``trajectory`` (integrate one run and write the sampled
Bloch history), ``phase`` (one run reduced to its final phase record),
``sweep`` (parameter grids, optionally on a worker pool, optionally with a
raster image), and ``verify`` (run the independent oracle cross-checks and
report measured deviations).

Conventions shared by all subcommands:

* every angle flag comes in a ``--name-pi`` / ``--name-rad`` pair; values are
  stored in radians, and pi-unit inputs round-trip to output at 1e-15,
* a flat ``key = value`` config file (``#`` comments) can hold any flag
  value; explicit command-line flags override it,
* every output file starts with a metadata block holding the fully resolved
  configuration, the snapped cycle duration, and the tool version,
* floats are serialized with repr(), the shortest decimal that round-trips
  the underlying binary value, so reruns produce byte-identical files,
* exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, replace

from . import __version__, model, oracle
from .errors import Degenerate, NotPure, PurityViolation, UnwrapAmbiguity
from .gphase import geometric_phase, walk_frames
from .integrator import integrate
from .model import DriveField, FeedbackControl, SimParams
from .sweep import (
    AxisSpec,
    CELL_DEGENERATE,
    STATUS_LABELS,
    SweepGrid,
    SweepSpec,
    fig1_spec,
    fig2_spec,
    run_sweep,
)

VERIFY_DRIFT_TOL = 1e-10
VERIFY_TRAJECTORY_TOL = 1e-7
VERIFY_EIGENVALUE_FLOOR = -1e-8
VERIFY_PHASE_TOL = 1e-6

_TRAJECTORY_COLUMNS = (
    "t",
    "px",
    "py",
    "pz",
    "purity",
    "e_plus",
    "alpha",
    "phi_unwrapped",
    "connection_partial",
)
_SWEEP_COLUMNS = ("axis1_value", "axis2_value", "gamma_g_rad", "gamma_g_pi", "degenerate")


class ConfigError(Exception):
    """Bad flag, config-file entry, or flag combination."""


@dataclass
class RunConfig:
    """Fully resolved run parameters (angles in radians)."""

    gamma: float = 0.05
    theta: float = 0.5 * math.pi
    cap_theta: float | None = None
    omega: float = 0.005
    dt: float = 0.01
    tau: float | None = None
    feedback_angle: float = 0.25 * math.pi
    beta: float = 0.0
    b0: float = 1.0
    mu: float = 1.0
    out: str | None = None
    format: str = "csv"
    thin: int = 10
    workers: int = 1
    plot: str | None = None
    seed: int | None = None
    resolution: int = 17
    placement: str = "endpoints"
    axis1: str | None = None
    axis2: str | None = None
    preset: str | None = None

    def resolved_cap_theta(self) -> float:
        return self.theta if self.cap_theta is None else self.cap_theta

    def resolved_tau(self) -> float:
        if self.tau is not None:
            return self.tau
        if self.omega <= 0.0:
            raise ConfigError("cycle duration needs omega > 0 (or pass --tau)")
        return 2.0 * math.pi / self.omega


_ANGLE_KEYS = ("theta", "cap_theta", "a", "beta")
_ANGLE_DEST = {"theta": "theta", "cap_theta": "cap_theta", "a": "feedback_angle", "beta": "beta"}
_ANGLE_FILE_KEYS = tuple(f"{k}_{u}" for k in _ANGLE_KEYS for u in ("pi", "rad"))
_FLOAT_KEYS = ("gamma", "omega", "dt", "tau", "b0", "mu")
_INT_KEYS = ("thin", "workers", "seed", "resolution")
_STR_KEYS = ("out", "format", "plot", "placement", "axis1", "axis2", "preset")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="feedphase",
        description="Driven dissipative two-level atom under jump feedback: "
        "Bloch trajectories, geometric phase, parameter sweeps.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    descriptions = {
        "trajectory": "integrate one run and write the sampled Bloch history",
        "phase": "integrate one run and write its final phase record",
        "sweep": "evaluate the phase over a parameter grid",
        "verify": "run the independent oracle cross-checks",
    }
    for name, text in descriptions.items():
        cmd = sub.add_parser(name, help=text, description=text)
        _add_shared_flags(cmd)
        if name == "sweep":
            _add_sweep_flags(cmd)
    return parser


def _add_shared_flags(cmd: argparse.ArgumentParser) -> None:
    cmd.add_argument("--config", help="flat key = value config file")
    cmd.add_argument("--gamma", type=float, help="decay rate (units of mu*B0)")
    for key in _ANGLE_KEYS:
        flag = key.replace("_", "-")
        cmd.add_argument(f"--{flag}-pi", type=float, help=f"{key} in units of pi")
        cmd.add_argument(f"--{flag}-rad", type=float, help=f"{key} in radians")
    cmd.add_argument("--omega", type=float, help="drive rotation rate")
    cmd.add_argument("--dt", type=float, help="integrator step")
    cmd.add_argument("--tau", type=float, help="duration (default: one cycle, 2 pi / omega)")
    cmd.add_argument("--b0", type=float, help="field amplitude")
    cmd.add_argument("--mu", type=float, help="magnetic moment")
    cmd.add_argument("--thin", type=int, help="keep every k-th trajectory sample (default 10)")
    cmd.add_argument("--workers", type=int, help="sweep worker processes (default 1)")
    cmd.add_argument("--seed", type=int, help="base seed for the verify draws")
    cmd.add_argument("--out", help="output path (default: stdout)")
    cmd.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")
    cmd.add_argument("--plot", help="write a raster heatmap image to this path (sweep only)")


def _add_sweep_flags(cmd: argparse.ArgumentParser) -> None:
    cmd.add_argument(
        "--axis1",
        help="first (row) axis as name:min:max:count[:log]; A and beta ranges in pi units",
    )
    cmd.add_argument("--axis2", help="second (column) axis, same syntax as --axis1")
    cmd.add_argument(
        "--preset",
        help="fig1:<gamma> (A x beta at that decay rate) or fig2:<A-pi> (gamma x beta)",
    )
    cmd.add_argument("--resolution", type=int, help="points per preset axis (default 17)")
    cmd.add_argument(
        "--placement", choices=("endpoints", "centers"), help="grid point placement"
    )


def _parse_config_value(key: str, value: str, where: str):
    try:
        if key in _FLOAT_KEYS or key in _ANGLE_FILE_KEYS:
            return float(value)
        if key in _INT_KEYS:
            return int(value)
        if key in _STR_KEYS:
            return value
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {key!r}: {exc}") from None
    raise ConfigError(f"{where}: unknown key {key!r}")


def parse_config_file(path: str) -> dict:
    values: dict = {}
    try:
        with open(path, encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        values[key] = _parse_config_value(key, value, f"{path}:{lineno}")
    return values


def _resolve_angle(key: str, args: argparse.Namespace, file_values: dict) -> float | None:
    """Radians from the pi/rad flag pair, command line over config file."""
    cli_pi = getattr(args, f"{key}_pi")
    cli_rad = getattr(args, f"{key}_rad")
    if cli_pi is not None and cli_rad is not None:
        raise ConfigError(f"--{key.replace('_', '-')}-pi and -rad are mutually exclusive")
    if cli_pi is not None:
        return cli_pi * math.pi
    if cli_rad is not None:
        return cli_rad
    file_pi = file_values.get(f"{key}_pi")
    file_rad = file_values.get(f"{key}_rad")
    if file_pi is not None and file_rad is not None:
        raise ConfigError(f"config file sets both {key}_pi and {key}_rad")
    if file_pi is not None:
        return file_pi * math.pi
    if file_rad is not None:
        return file_rad
    return None


def resolve_config(args: argparse.Namespace) -> RunConfig:
    file_values = parse_config_file(args.config) if args.config else {}
    config = RunConfig()

    updates: dict = {}
    for key in _FLOAT_KEYS + _INT_KEYS + _STR_KEYS:
        cli_value = getattr(args, key, None)
        value = cli_value if cli_value is not None else file_values.get(key)
        if value is not None:
            updates[key] = value
    for key in _ANGLE_KEYS:
        value = _resolve_angle(key, args, file_values)
        if value is not None:
            updates[_ANGLE_DEST[key]] = value
    config = replace(config, **updates)

    if config.thin < 1:
        raise ConfigError(f"--thin must be >= 1, got {config.thin}")
    if config.workers < 1:
        raise ConfigError(f"--workers must be >= 1, got {config.workers}")
    if config.resolution < 2:
        raise ConfigError(f"--resolution must be >= 2, got {config.resolution}")
    if config.format not in ("csv", "json"):
        raise ConfigError(f"--format must be csv or json, got {config.format!r}")
    return config


def _build_run_objects(config: RunConfig):
    drive = DriveField(
        b0=config.b0,
        theta_field=config.resolved_cap_theta(),
        omega=config.omega,
        mu=config.mu,
    )
    params = SimParams(
        gamma=config.gamma,
        theta_init=config.theta,
        duration=config.resolved_tau(),
        dt=config.dt,
    )
    ctrl = FeedbackControl.in_plane(config.feedback_angle, config.beta)
    return drive, params, ctrl


def _metadata(config: RunConfig, command: str, extra: dict | None = None) -> dict:
    params = SimParams(
        gamma=config.gamma,
        theta_init=config.theta,
        duration=config.resolved_tau(),
        dt=config.dt,
    )
    cap_theta = config.resolved_cap_theta()
    meta = {
        "tool": "feedphase",
        "version": __version__,
        "command": command,
        "gamma": config.gamma,
        "theta_rad": config.theta,
        "theta_pi": config.theta / math.pi,
        "cap_theta_rad": cap_theta,
        "cap_theta_pi": cap_theta / math.pi,
        "omega": config.omega,
        "a_rad": config.feedback_angle,
        "a_pi": config.feedback_angle / math.pi,
        "beta_rad": config.beta,
        "beta_pi": config.beta / math.pi,
        "b0": config.b0,
        "mu": config.mu,
        "dt": config.dt,
        "tau_requested": config.resolved_tau(),
        "tau_snapped": params.snapped_duration,
        "n_steps": params.n_steps,
        "thin": config.thin,
        "workers": config.workers,
        "format": config.format,
    }
    if extra:
        meta.update(extra)
    return meta


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _emit(config: RunConfig, text: str) -> None:
    if config.out is None:
        sys.stdout.write(text)
    else:
        with open(config.out, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)


def _csv_document(metadata: dict, columns: tuple, rows) -> str:
    lines = [f"# {key} = {_fmt(value)}" for key, value in metadata.items()]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(value) for value in row))
    return "\n".join(lines) + "\n"


def _json_document(payload: dict) -> str:
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def cmd_trajectory(config: RunConfig) -> int:
    drive, params, ctrl = _build_run_objects(config)
    traj = integrate(model.initial_state(config.theta), drive, params, ctrl)
    walk = walk_frames(traj)

    keep = range(0, len(traj), config.thin)
    columns_data = (
        walk.times,
        traj.points[:, 0],
        traj.points[:, 1],
        traj.points[:, 2],
        walk.r,
        walk.e_plus,
        walk.alpha,
        walk.phi,
        walk.partial,
    )
    metadata = _metadata(config, "trajectory")
    if config.format == "csv":
        rows = ([float(col[i]) for col in columns_data] for i in keep)
        _emit(config, _csv_document(metadata, _TRAJECTORY_COLUMNS, rows))
    else:
        data = {
            name: [_jsonable(float(col[i])) for i in keep]
            for name, col in zip(_TRAJECTORY_COLUMNS, columns_data)
        }
        _emit(config, _json_document({"metadata": metadata, "data": data}))
    return 0


def _phase_record(config: RunConfig) -> tuple[dict, int]:
    drive, params, ctrl = _build_run_objects(config)
    record: dict = {
        "gamma_g_rad": None,
        "gamma_g_pi": None,
        "overlap_abs": None,
        "overlap_arg": None,
        "connection_integral": None,
        "max_step_dphi": None,
        "degenerate": False,
        "error": None,
        "failure_time": None,
    }
    try:
        traj = integrate(model.initial_state(config.theta), drive, params, ctrl)
    except PurityViolation as exc:
        record["error"] = "purity-violation"
        record["failure_time"] = exc.time
        return record, 3
    try:
        result = geometric_phase(traj)
    except UnwrapAmbiguity as exc:
        record["error"] = "unwrap-ambiguous"
        record["failure_time"] = exc.time
        return record, 3
    except (NotPure, Degenerate) as exc:
        record["error"] = "degenerate" if isinstance(exc, Degenerate) else "not-pure"
        return record, 3

    record["connection_integral"] = result.connection_integral
    record["max_step_dphi"] = result.max_step_dphi
    record["degenerate"] = result.degenerate
    if result.degenerate:
        record["error"] = "degenerate"
        record["failure_time"] = result.failure_time
        return record, 3
    record["gamma_g_rad"] = result.gamma_g
    record["gamma_g_pi"] = result.gamma_g_pi
    record["overlap_abs"] = abs(result.overlap)
    record["overlap_arg"] = math.atan2(result.overlap.imag, result.overlap.real)
    return record, 0


def cmd_phase(config: RunConfig) -> int:
    record, code = _phase_record(config)
    metadata = _metadata(config, "phase")
    if config.format == "csv":
        columns = tuple(record.keys())
        row = [value if value is not None else math.nan for value in record.values()]
        _emit(config, _csv_document(metadata, columns, [row]))
    else:
        payload = {"metadata": metadata, "result": {k: _jsonable(v) for k, v in record.items()}}
        _emit(config, _json_document(payload))
    return code


def _parse_axis_flag(text: str) -> AxisSpec:
    parts = text.split(":")
    if len(parts) not in (4, 5):
        raise ConfigError(f"axis must be name:min:max:count[:log], got {text!r}")
    name = parts[0]
    log = False
    if len(parts) == 5:
        if parts[4] != "log":
            raise ConfigError(f"axis spacing must be 'log' when given, got {parts[4]!r}")
        log = True
    try:
        lo = float(parts[1])
        hi = float(parts[2])
        count = int(parts[3])
    except ValueError as exc:
        raise ConfigError(f"bad axis {text!r}: {exc}") from None
    if name in ("A", "beta"):
        lo *= math.pi
        hi *= math.pi
    try:
        return AxisSpec(name, lo, hi, count, log=log)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _parse_preset(config: RunConfig) -> SweepSpec:
    assert config.preset is not None
    name, sep, value = config.preset.partition(":")
    if not sep:
        raise ConfigError("preset must be fig1:<gamma> or fig2:<A-pi>")
    try:
        number = float(value)
    except ValueError:
        raise ConfigError(f"bad preset value {value!r}") from None
    common = dict(
        resolution=config.resolution,
        theta=config.theta,
        cap_theta=config.resolved_cap_theta(),
        omega=config.omega,
        dt=config.dt,
        placement=config.placement,
    )
    if name == "fig1":
        return fig1_spec(gamma=number, **common)
    if name == "fig2":
        return fig2_spec(feedback_angle=number * math.pi, **common)
    raise ConfigError(f"unknown preset {name!r}")


def _sweep_spec(config: RunConfig) -> SweepSpec:
    if config.preset is not None and (config.axis1 or config.axis2):
        raise ConfigError("--preset and --axis1/--axis2 are mutually exclusive")
    if config.preset is not None:
        return _parse_preset(config)
    if not (config.axis1 and config.axis2):
        raise ConfigError("sweep needs --preset or both --axis1 and --axis2")
    axis1 = _parse_axis_flag(config.axis1)
    axis2 = _parse_axis_flag(config.axis2)
    swept = {axis1.name, axis2.name}
    fixed = {
        "theta": config.theta,
        "cap_theta": config.resolved_cap_theta(),
        "omega": config.omega,
        "b0": config.b0,
        "mu": config.mu,
        "dt": config.dt,
        "duration": config.resolved_tau(),
    }
    if "A" not in swept:
        fixed["A"] = config.feedback_angle
    if "beta" not in swept:
        fixed["beta"] = config.beta
    if "gamma" not in swept:
        fixed["gamma"] = config.gamma
    try:
        return SweepSpec(axis1=axis1, axis2=axis2, fixed=fixed, placement=config.placement)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _sweep_rows(grid: SweepGrid):
    for i, a1 in enumerate(grid.axis1_values):
        for j, a2 in enumerate(grid.axis2_values):
            value = float(grid.gamma_g[i, j])
            yield (
                float(a1),
                float(a2),
                value,
                value / math.pi,
                bool(grid.status[i, j] == CELL_DEGENERATE),
                int(grid.status[i, j]),
            )


def _write_raster(grid: SweepGrid, path: str) -> None:
    try:
        import matplotlib
    except ImportError:
        raise ConfigError("--plot needs matplotlib, which is not installed") from None
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.8))
    mesh = ax.pcolormesh(
        grid.axis2_values,
        grid.axis1_values,
        grid.gamma_g_pi,
        shading="nearest",
        cmap="viridis",
    )
    if grid.spec.axis2.log:
        ax.set_xscale("log")
    if grid.spec.axis1.log:
        ax.set_yscale("log")
    ax.set_xlabel(grid.spec.axis2.name)
    ax.set_ylabel(grid.spec.axis1.name)
    fig.colorbar(mesh, ax=ax, label="phase (units of pi)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def cmd_sweep(config: RunConfig) -> int:
    spec = _sweep_spec(config)
    grid = run_sweep(spec, workers=config.workers)

    extra = {
        "axis1_name": spec.axis1.name,
        "axis1_min": spec.axis1.start,
        "axis1_max": spec.axis1.stop,
        "axis1_count": spec.axis1.count,
        "axis1_log": spec.axis1.log,
        "axis2_name": spec.axis2.name,
        "axis2_min": spec.axis2.start,
        "axis2_max": spec.axis2.stop,
        "axis2_count": spec.axis2.count,
        "axis2_log": spec.axis2.log,
        "placement": spec.placement,
        "status_codes": "; ".join(f"{k}={v}" for k, v in sorted(STATUS_LABELS.items())),
    }
    metadata = _metadata(config, "sweep", extra=extra)

    if config.format == "csv":
        rows = (row[:5] for row in _sweep_rows(grid))
        _emit(config, _csv_document(metadata, _SWEEP_COLUMNS, rows))
    else:
        cells = [
            {
                "axis1_value": row[0],
                "axis2_value": row[1],
                "gamma_g_rad": _jsonable(row[2]),
                "gamma_g_pi": _jsonable(row[3]),
                "degenerate": row[4],
                "status": row[5],
            }
            for row in _sweep_rows(grid)
        ]
        _emit(config, _json_document({"metadata": metadata, "cells": cells}))
    if config.plot is not None:
        _write_raster(grid, config.plot)
    return 0


def cmd_verify(config: RunConfig) -> int:
    if config.seed is None:
        seeds = {}
    else:
        seeds = {"drift": config.seed, "traj": config.seed + 1, "phase": config.seed + 2}

    lines = []
    failures = 0

    def report(label: str, measured: float, bound: float, larger_ok: bool = False) -> None:
        nonlocal failures
        ok = measured >= bound if larger_ok else measured <= bound
        verdict = "PASS" if ok else "FAIL"
        relation = ">=" if larger_ok else "<="
        lines.append(f"{verdict} {label}: {measured:.3e} (required {relation} {bound:.0e})")
        if not ok:
            failures += 1

    drift_dev = (
        oracle.check_drift_agreement(seed=seeds["drift"])
        if seeds
        else oracle.check_drift_agreement()
    )
    report("drift vs superoperator, 100 draws, max |delta|", drift_dev, VERIFY_DRIFT_TOL)

    traj_dev, min_eig = (
        oracle.check_trajectory_agreement(seed=seeds["traj"])
        if seeds
        else oracle.check_trajectory_agreement()
    )
    report(
        "trajectory vs density-matrix oracle, 20 configs, max |delta|",
        traj_dev,
        VERIFY_TRAJECTORY_TOL,
    )
    report(
        "density-matrix positivity, min eigenvalue",
        min_eig,
        VERIFY_EIGENVALUE_FLOOR,
        larger_ok=True,
    )

    phase_dev = (
        oracle.check_pure_phase_agreement(seed=seeds["phase"])
        if seeds
        else oracle.check_pure_phase_agreement()
    )
    report("zero-decay phase vs pure oracle, 10 draws, max |delta|", phase_dev, VERIFY_PHASE_TOL)

    lines.append("all checks passed" if failures == 0 else f"{failures} check(s) FAILED")
    _emit(config, "\n".join(lines) + "\n")
    return 0 if failures == 0 else 3


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
        if args.command == "trajectory":
            return cmd_trajectory(config)
        if args.command == "phase":
            return cmd_phase(config)
        if args.command == "sweep":
            return cmd_sweep(config)
        return cmd_verify(config)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PurityViolation as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except (NotPure, Degenerate, UnwrapAmbiguity) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entry()
