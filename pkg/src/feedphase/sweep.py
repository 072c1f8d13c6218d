"""Parameter-grid sweeps of the geometric phase.

Two grid layouts mirror the standard presentation of this system: feedback
rotation angle against feedback azimuth at fixed decay rate (fig1 layout,
axis tokens "A" x "beta"), and decay rate against feedback azimuth at fixed
rotation angle (fig2 layout, "gamma" x "beta"). Each cell integrates one full
drive cycle from the pure polar-angle-theta state and accumulates the phase.

Cells are independent pure computations. The engine optionally fans them out
over a process pool; every result lands in a preallocated slot keyed by grid
index, so the grid (and any file serialized from it) is identical for any
worker count or execution order. Per-cell failures are recorded as status
codes, never raised: sweeps are long-running and one bad cell is data.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import model
from .errors import PurityViolation, UnwrapAmbiguity
from .gphase import geometric_phase
from .integrator import integrate
from .model import DriveField, FeedbackControl, SimParams

AXIS_NAMES = ("A", "beta", "gamma")

CELL_OK = 0
CELL_DEGENERATE = 1
CELL_UNWRAP = 2
CELL_PURITY = 3

STATUS_LABELS = {
    CELL_OK: "ok",
    CELL_DEGENERATE: "degenerate",
    CELL_UNWRAP: "unwrap-ambiguous",
    CELL_PURITY: "purity-violation",
}

FIG1_DECAY_RATES = (0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0, 3.0)
FIG2_FEEDBACK_ANGLES = (
    0.25 * math.pi,
    0.5 * math.pi,
    0.75 * math.pi,
    math.pi,
)

_FIXED_DEFAULTS = {
    "theta": 0.5 * math.pi,
    "omega": 0.005,
    "b0": 1.0,
    "mu": 1.0,
    "dt": 0.01,
}
_FIXED_KEYS = frozenset(
    ("A", "beta", "gamma", "theta", "cap_theta", "omega", "b0", "mu", "dt", "duration")
)
_PLACEMENTS = ("endpoints", "centers")


@dataclass(frozen=True)
class AxisSpec:
    """One swept axis: which parameter, its range, and the point count."""

    name: str
    start: float
    stop: float
    count: int
    log: bool = False

    def __post_init__(self) -> None:
        if self.name not in AXIS_NAMES:
            raise ValueError(f"axis name must be one of {AXIS_NAMES}, got {self.name!r}")
        if self.count < 2:
            raise ValueError(f"axis count must be >= 2, got {self.count}")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ValueError("axis range must be finite")
        if self.start == self.stop:
            raise ValueError("axis range must not be empty")
        if self.log and (self.start <= 0.0 or self.stop <= 0.0):
            raise ValueError("log-spaced axis needs a strictly positive range")
        if self.name in ("A", "gamma") and min(self.start, self.stop) < 0.0:
            raise ValueError(f"axis {self.name!r} must be nonnegative")

    def values(self, placement: str = "endpoints") -> np.ndarray:
        if placement == "endpoints":
            if self.log:
                return np.geomspace(self.start, self.stop, self.count)
            return np.linspace(self.start, self.stop, self.count)
        if placement == "centers":
            if self.log:
                edges = np.geomspace(self.start, self.stop, self.count + 1)
                return np.sqrt(edges[:-1] * edges[1:])
            edges = np.linspace(self.start, self.stop, self.count + 1)
            return 0.5 * (edges[:-1] + edges[1:])
        raise ValueError(f"placement must be one of {_PLACEMENTS}, got {placement!r}")


@dataclass(frozen=True)
class SweepSpec:
    """Two axes plus the values of everything held fixed.

    Whichever of the A / beta / gamma triple is not swept must appear in
    ``fixed``; the remaining keys (theta, cap_theta, omega, b0, mu, dt,
    duration) are optional, with cap_theta defaulting to theta and duration
    to one full drive cycle.
    """

    axis1: AxisSpec
    axis2: AxisSpec
    fixed: Mapping[str, float] = field(default_factory=dict)
    placement: str = "endpoints"

    def __post_init__(self) -> None:
        if self.axis1.name == self.axis2.name:
            raise ValueError("the two axes must sweep different parameters")
        if self.placement not in _PLACEMENTS:
            raise ValueError(
                f"placement must be one of {_PLACEMENTS}, got {self.placement!r}"
            )
        swept = {self.axis1.name, self.axis2.name}
        unknown = set(self.fixed) - _FIXED_KEYS
        if unknown:
            raise ValueError(f"unknown fixed parameter(s): {sorted(unknown)}")
        clash = swept & set(self.fixed)
        if clash:
            raise ValueError(f"parameter(s) both swept and fixed: {sorted(clash)}")
        for name in AXIS_NAMES:
            if name not in swept and name not in self.fixed:
                raise ValueError(f"unswept parameter {name!r} needs a fixed value")
        object.__setattr__(self, "fixed", dict(self.fixed))

    def resolved_fixed(self) -> dict[str, float]:
        out = dict(_FIXED_DEFAULTS)
        out.update(self.fixed)
        out.setdefault("cap_theta", out["theta"])
        if "duration" not in out:
            if out["omega"] <= 0.0:
                raise ValueError("a static drive (omega = 0) needs an explicit duration")
            out["duration"] = 2.0 * math.pi / out["omega"]
        return out


@dataclass(frozen=True, eq=False)
class SweepGrid:
    """Completed sweep: phase values and per-cell status, indexed
    [axis1, axis2], plus the snapped cycle duration actually integrated.
    """

    spec: SweepSpec
    axis1_values: np.ndarray
    axis2_values: np.ndarray
    gamma_g: np.ndarray
    status: np.ndarray
    snapped_duration: float
    dt: float

    @property
    def gamma_g_pi(self) -> np.ndarray:
        return self.gamma_g / math.pi

    @property
    def ok_mask(self) -> np.ndarray:
        return self.status == CELL_OK

    @property
    def degenerate_mask(self) -> np.ndarray:
        return self.status == CELL_DEGENERATE


def _evaluate_cell(task):
    (i, j, angle, beta, gamma, theta, cap_theta, omega, b0, mu, duration, dt) = task
    ctrl = FeedbackControl.in_plane(angle, beta)
    drive = DriveField(b0=b0, theta_field=cap_theta, omega=omega, mu=mu)
    params = SimParams(gamma=gamma, theta_init=theta, duration=duration, dt=dt)
    try:
        traj = integrate(model.initial_state(theta), drive, params, ctrl)
    except PurityViolation:
        return i, j, math.nan, CELL_PURITY
    try:
        result = geometric_phase(traj)
    except UnwrapAmbiguity:
        return i, j, math.nan, CELL_UNWRAP
    if result.degenerate:
        return i, j, math.nan, CELL_DEGENERATE
    return i, j, float(result.gamma_g), CELL_OK


def _cell_tasks(spec: SweepSpec, v1: np.ndarray, v2: np.ndarray) -> list[tuple]:
    fixed = spec.resolved_fixed()

    def pick(name: str, i: int, j: int) -> float:
        if spec.axis1.name == name:
            return float(v1[i])
        if spec.axis2.name == name:
            return float(v2[j])
        return float(fixed[name])

    tasks = []
    for i in range(len(v1)):
        for j in range(len(v2)):
            tasks.append(
                (
                    i,
                    j,
                    pick("A", i, j),
                    pick("beta", i, j),
                    pick("gamma", i, j),
                    float(fixed["theta"]),
                    float(fixed["cap_theta"]),
                    float(fixed["omega"]),
                    float(fixed["b0"]),
                    float(fixed["mu"]),
                    float(fixed["duration"]),
                    float(fixed["dt"]),
                )
            )
    return tasks


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepGrid:
    """Evaluate every grid cell, serially or on a process pool."""
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    v1 = spec.axis1.values(spec.placement)
    v2 = spec.axis2.values(spec.placement)
    tasks = _cell_tasks(spec, v1, v2)

    gamma_g = np.full((len(v1), len(v2)), np.nan)
    status = np.zeros((len(v1), len(v2)), dtype=np.uint8)

    def fill(results) -> None:
        for i, j, value, code in results:
            gamma_g[i, j] = value
            status[i, j] = code

    if workers == 1:
        fill(map(_evaluate_cell, tasks))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, len(tasks) // (4 * workers))
            fill(pool.map(_evaluate_cell, tasks, chunksize=chunk))

    fixed = spec.resolved_fixed()
    params = SimParams(
        gamma=0.0, theta_init=fixed["theta"], duration=fixed["duration"], dt=fixed["dt"]
    )
    gamma_g.setflags(write=False)
    status.setflags(write=False)
    v1.setflags(write=False)
    v2.setflags(write=False)
    return SweepGrid(
        spec=spec,
        axis1_values=v1,
        axis2_values=v2,
        gamma_g=gamma_g,
        status=status,
        snapped_duration=params.snapped_duration,
        dt=params.dt,
    )


def fig1_spec(
    gamma: float,
    resolution: int = 17,
    theta: float = 0.5 * math.pi,
    cap_theta: float | None = None,
    omega: float = 0.005,
    dt: float = 0.01,
    placement: str = "endpoints",
) -> SweepSpec:
    """Rotation angle [0, pi] x azimuth [0, 2 pi] at a fixed decay rate."""
    fixed = {"gamma": gamma, "theta": theta, "omega": omega, "dt": dt}
    if cap_theta is not None:
        fixed["cap_theta"] = cap_theta
    return SweepSpec(
        axis1=AxisSpec("A", 0.0, math.pi, resolution),
        axis2=AxisSpec("beta", 0.0, 2.0 * math.pi, resolution),
        fixed=fixed,
        placement=placement,
    )


def fig1_protocol(gamma: float, resolution: int = 17, workers: int = 1, **kwargs) -> SweepGrid:
    return run_sweep(fig1_spec(gamma, resolution, **kwargs), workers=workers)


def fig2_spec(
    feedback_angle: float,
    resolution: int = 17,
    gamma_min: float = 0.001,
    gamma_max: float = 3.0,
    log_gamma: bool = True,
    theta: float = 0.5 * math.pi,
    cap_theta: float | None = None,
    omega: float = 0.005,
    dt: float = 0.01,
    placement: str = "endpoints",
) -> SweepSpec:
    """Decay rate x azimuth [0, 2 pi] at a fixed rotation angle.

    The decay axis spans [0.001, 3] by default, log-spaced unless disabled.
    """
    fixed = {"A": feedback_angle, "theta": theta, "omega": omega, "dt": dt}
    if cap_theta is not None:
        fixed["cap_theta"] = cap_theta
    return SweepSpec(
        axis1=AxisSpec("gamma", gamma_min, gamma_max, resolution, log=log_gamma),
        axis2=AxisSpec("beta", 0.0, 2.0 * math.pi, resolution),
        fixed=fixed,
        placement=placement,
    )


def fig2_protocol(
    feedback_angle: float, resolution: int = 17, workers: int = 1, **kwargs
) -> SweepGrid:
    return run_sweep(fig2_spec(feedback_angle, resolution, **kwargs), workers=workers)
