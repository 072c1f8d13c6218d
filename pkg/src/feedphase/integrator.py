"""Fixed-step classical RK4 integration of the affine Bloch equation.

The right-hand side is evaluated with the instantaneous field at each of the
four substage times, so the rotating drive needs no frozen-field
approximation. The hot loop is compiled with numba; grid sweeps run it a few
hundred times at ~1e5 steps each.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import PurityViolation
from .model import BlochState, DriveField, FeedbackControl, SimParams, rotated_decay_axis

# raising threshold on |p|^2; distinct from the 1e-9 bookkeeping slack
_PURITY_LIMIT_SQ = (1.0 + 1e-6) ** 2


@njit(cache=True)
def _rhs(px, py, pz, t, gamma, mu, b0, sin_tf, cos_tf, omega, vx, vy, vz):
    azimuth = omega * t
    bx = b0 * sin_tf * math.cos(azimuth)
    by = b0 * sin_tf * math.sin(azimuth)
    bz = b0 * cos_tf
    hg = 0.5 * gamma
    dx = 2.0 * mu * (by * pz - bz * py) - hg * (px + vx * pz + vx)
    dy = 2.0 * mu * (bz * px - bx * pz) - hg * (py + vy * pz + vy)
    dz = 2.0 * mu * (bx * py - by * px) - hg * (pz + vz * pz + 1.0 + vz)
    return dx, dy, dz


@njit(cache=True)
def _rk4_step(px, py, pz, t, dt, gamma, mu, b0, sin_tf, cos_tf, omega, vx, vy, vz):
    ax, ay, az = _rhs(px, py, pz, t, gamma, mu, b0, sin_tf, cos_tf, omega, vx, vy, vz)
    half = 0.5 * dt
    bx, by, bz = _rhs(
        px + half * ax, py + half * ay, pz + half * az,
        t + half, gamma, mu, b0, sin_tf, cos_tf, omega, vx, vy, vz,
    )
    cx, cy, cz = _rhs(
        px + half * bx, py + half * by, pz + half * bz,
        t + half, gamma, mu, b0, sin_tf, cos_tf, omega, vx, vy, vz,
    )
    dx, dy, dz = _rhs(
        px + dt * cx, py + dt * cy, pz + dt * cz,
        t + dt, gamma, mu, b0, sin_tf, cos_tf, omega, vx, vy, vz,
    )
    sixth = dt / 6.0
    return (
        px + sixth * (ax + 2.0 * (bx + cx) + dx),
        py + sixth * (ay + 2.0 * (by + cy) + dy),
        pz + sixth * (az + 2.0 * (bz + cz) + dz),
    )


@njit(cache=True)
def _run(out, n, dt, gamma, mu, b0, sin_tf, cos_tf, omega, vx, vy, vz, limit_sq):
    for i in range(n):
        t = i * dt
        x, y, z = _rk4_step(
            out[i, 0], out[i, 1], out[i, 2],
            t, dt, gamma, mu, b0, sin_tf, cos_tf, omega, vx, vy, vz,
        )
        out[i + 1, 0] = x
        out[i + 1, 1] = y
        out[i + 1, 2] = z
        if x * x + y * y + z * z > limit_sq:
            return i + 1
    return -1


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Uniformly sampled Bloch trajectory: times[i] = i * dt, points[i] = p(t_i)."""

    dt: float
    times: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        p = np.asarray(self.points, dtype=float)
        if p.ndim != 2 or p.shape[1] != 3 or t.shape != (p.shape[0],):
            raise ValueError("need times of shape (n,) and points of shape (n, 3)")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "points", p)

    def __len__(self) -> int:
        return self.times.shape[0]

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    def state_at(self, i: int) -> tuple[float, BlochState]:
        return float(self.times[i]), BlochState.from_array(self.points[i])

    def final_state(self) -> BlochState:
        return BlochState.from_array(self.points[-1])


def _kernel_args(drive: DriveField, params: SimParams, ctrl: FeedbackControl):
    vx, vy, vz = rotated_decay_axis(ctrl)
    return (
        params.gamma,
        drive.mu,
        drive.b0,
        math.sin(drive.theta_field),
        math.cos(drive.theta_field),
        drive.omega,
        float(vx),
        float(vy),
        float(vz),
    )


def step(
    state: BlochState,
    t: float,
    dt: float,
    drive: DriveField,
    params: SimParams,
    ctrl: FeedbackControl,
) -> BlochState:
    """One RK4 step from t to t + dt. dt = 0 returns the state unchanged."""
    if dt == 0.0:
        return state
    if dt < 0.0:
        raise ValueError("dt must be >= 0")
    x, y, z = _rk4_step(state.px, state.py, state.pz, t, dt, *_kernel_args(drive, params, ctrl))
    return BlochState(x, y, z)


def integrate(
    p0: BlochState,
    drive: DriveField,
    params: SimParams,
    ctrl: FeedbackControl,
) -> Trajectory:
    """Integrate from t = 0 over round(duration / dt) steps of size dt.

    Raises PurityViolation if |p| ever exceeds 1 + 1e-6, which for this
    contractive family only happens when dt is far too coarse.
    """
    n = params.n_steps
    if n < 1:
        raise ValueError("duration shorter than half a step; nothing to integrate")
    out = np.empty((n + 1, 3))
    out[0] = (p0.px, p0.py, p0.pz)
    bad = _run(out, n, params.dt, *_kernel_args(drive, params, ctrl), _PURITY_LIMIT_SQ)
    if bad >= 0:
        norm = float(np.linalg.norm(out[bad]))
        raise PurityViolation(time=bad * params.dt, norm=norm)
    times = np.arange(n + 1) * params.dt
    out.setflags(write=False)
    times.setflags(write=False)
    return Trajectory(params.dt, times, out)
