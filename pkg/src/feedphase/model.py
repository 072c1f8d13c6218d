"""Domain types and generator construction for a driven dissipative qubit
with unitary jump feedback.

Conventions, used consistently across the package:

* Basis order is (excited, ground): index 0 is |e>, index 1 is |g>.
  sigma_z |e> = +|e>, and the lowering operator |g><e| is the lower-left
  elementary matrix.
* Standard right-handed Pauli set. A Bloch vector p represents
  rho = (I + p . sigma) / 2, hence rho[0, 1] = (p_x - i p_y) / 2.
* hbar = 1. The product mu * b0 sets the unit of frequency and time is
  measured in its inverse; defaults mu = b0 = 1.

The feedback applies a fixed unitary rotation (angle A about a unit axis n)
immediately after every decay event. Averaged over jumps this tilts the
effective decay channel: in Bloch form the dissipative part of the
generator contracts the state toward minus the rotated decay axis
returned by :func:`rotated_decay_axis` instead of toward the ground pole.
The full equation of motion is affine, dp/dt = M(t) p + c, with M and c
assembled by :func:`drift_system`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY2 = np.eye(2, dtype=complex)

# numerical slack allowed on p.p above 1 for states produced by a solver
PURITY_SLACK = 1e-9

_HERMITIAN_TOL = 1e-14
_TRACE_TOL = 1e-14
_EIGENVALUE_FLOOR = -1e-12
_UNIT_AXIS_TOL = 1e-12


@dataclass(frozen=True)
class BlochState:
    """A qubit state as a Bloch vector; |p| <= 1 up to numerical slack."""

    px: float
    py: float
    pz: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.px, self.py, self.pz)):
            raise ValueError("Bloch components must be finite")
        if self.norm_sq > 1.0 + PURITY_SLACK:
            raise ValueError(
                f"Bloch vector length {math.sqrt(self.norm_sq):.12f} violates the purity bound"
            )

    @property
    def norm_sq(self) -> float:
        return self.px * self.px + self.py * self.py + self.pz * self.pz

    @property
    def norm(self) -> float:
        return math.sqrt(self.norm_sq)

    @property
    def array(self) -> np.ndarray:
        return np.array([self.px, self.py, self.pz])

    @classmethod
    def from_array(cls, p) -> "BlochState":
        x, y, z = np.asarray(p, dtype=float)
        return cls(float(x), float(y), float(z))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated 2x2 density matrix (Hermitian, unit trace, positive)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError("density matrix must be 2x2")
        if np.abs(m - m.conj().T).max() > _HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian")
        tr = m[0, 0].real + m[1, 1].real
        if abs(tr - 1.0) > _TRACE_TOL:
            raise ValueError(f"trace {tr!r} is not 1")
        # closed-form eigenvalues of a 2x2 Hermitian matrix
        half_gap = 0.5 * math.hypot((m[0, 0] - m[1, 1]).real, 2.0 * abs(m[0, 1]))
        if 0.5 * tr - half_gap < _EIGENVALUE_FLOOR:
            raise ValueError("density matrix has a negative eigenvalue")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def eigenvalues(self) -> tuple[float, float]:
        """(larger, smaller) eigenvalue pair."""
        m = self.matrix
        mean = 0.5 * (m[0, 0].real + m[1, 1].real)
        half_gap = 0.5 * math.hypot((m[0, 0] - m[1, 1]).real, 2.0 * abs(m[0, 1]))
        return mean + half_gap, mean - half_gap


@dataclass(frozen=True)
class FeedbackControl:
    """Post-jump unitary rotation: magnitude ``angle`` about unit ``axis``.

    ``axis`` must be a unit vector; for angle = 0 the axis is immaterial and
    the convention (0, 0, 1) is stored.
    """

    angle: float
    axis: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if not (math.isfinite(self.angle) and self.angle >= 0.0):
            raise ValueError("feedback angle must be finite and >= 0")
        if self.angle == 0.0:
            object.__setattr__(self, "axis", (0.0, 0.0, 1.0))
            return
        ax = tuple(float(v) for v in self.axis)
        if len(ax) != 3:
            raise ValueError("feedback axis must have 3 components")
        if abs(math.sqrt(ax[0] ** 2 + ax[1] ** 2 + ax[2] ** 2) - 1.0) > _UNIT_AXIS_TOL:
            raise ValueError("feedback axis must be a unit vector")
        object.__setattr__(self, "axis", ax)

    @classmethod
    def in_plane(cls, angle: float, beta: float) -> "FeedbackControl":
        """Equatorial-axis feedback with axis (sin beta, cos beta, 0)."""
        if angle == 0.0:
            return cls(0.0)
        return cls(angle, (math.sin(beta), math.cos(beta), 0.0))


@dataclass(frozen=True)
class DriveField:
    """Field of magnitude b0 rotating on a cone of polar angle theta_field
    at angular rate omega, coupled with moment mu."""

    b0: float = 1.0
    theta_field: float = math.pi / 2
    omega: float = 0.005
    mu: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.b0) and self.b0 >= 0.0):
            raise ValueError("b0 must be finite and >= 0")
        if not math.isfinite(self.omega) or self.omega < 0.0:
            raise ValueError("omega must be finite and >= 0")

    @property
    def mu_b0(self) -> float:
        return self.mu * self.b0

    def cycle_duration(self) -> float:
        """Duration of one full azimuthal revolution, 2 pi / omega."""
        if self.omega <= 0.0:
            raise ValueError("cycle duration needs omega > 0")
        return math.tau / self.omega


@dataclass(frozen=True)
class SimParams:
    """Scalar run parameters: decay rate, initial polar angle, horizon, step."""

    gamma: float
    theta_init: float = math.pi / 2
    duration: float = math.tau / 0.005
    dt: float = 0.01

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma >= 0.0):
            raise ValueError("gamma must be finite and >= 0")
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError("dt must be finite and > 0")
        if not (math.isfinite(self.duration) and self.duration >= 0.0):
            raise ValueError("duration must be finite and >= 0")

    @property
    def n_steps(self) -> int:
        """Step count; the horizon snaps to the nearest integer multiple of dt."""
        return int(round(self.duration / self.dt))

    @property
    def snapped_duration(self) -> float:
        return self.n_steps * self.dt


@dataclass(frozen=True, eq=False)
class DriftSystem:
    """The affine Bloch generator dp/dt = m @ p + c at one instant."""

    m: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        c = np.array(self.c, dtype=float)
        if m.shape != (3, 3) or c.shape != (3,):
            raise ValueError("drift system needs a 3x3 matrix and a 3-vector")
        m.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "c", c)

    def rate(self, p) -> np.ndarray:
        return self.m @ np.asarray(p, dtype=float) + self.c


def feedback_unitary(ctrl: FeedbackControl) -> np.ndarray:
    """The post-jump unitary cos(A) I + i sin(A) (n . sigma)."""
    nx, ny, nz = ctrl.axis
    n_dot_sigma = nx * SIGMA_X + ny * SIGMA_Y + nz * SIGMA_Z
    return math.cos(ctrl.angle) * IDENTITY2 + 1j * math.sin(ctrl.angle) * n_dot_sigma


def rotated_decay_axis(ctrl: FeedbackControl) -> np.ndarray:
    """Bloch image of the feedback-conjugated sigma_z, i.e. the z axis rotated
    by -2A about the feedback axis.

    The dissipator contracts the state toward minus this direction. A = 0 and
    A = pi both return (0, 0, 1), recovering plain decay toward the ground
    pole; the formula is singularity-free in A.
    """
    nx, ny, nz = ctrl.axis
    s2 = math.sin(2.0 * ctrl.angle)
    ss = math.sin(ctrl.angle) ** 2
    return np.array(
        [
            -s2 * ny + 2.0 * ss * nx * nz,
            s2 * nx + 2.0 * ss * ny * nz,
            math.cos(2.0 * ctrl.angle) + 2.0 * ss * nz * nz,
        ]
    )


def drift_system(gamma: float, field, mu: float, ctrl: FeedbackControl) -> DriftSystem:
    """Assemble the affine Bloch generator for a given instantaneous field.

    The antisymmetric part is the precession 2 mu (B x p); the dissipative
    part contracts transverse components at gamma/2 and pulls along the
    rotated decay axis v with the (1 + p_z)-weighted feedback terms folded
    into the third column and the constant c.
    """
    bx, by, bz = np.asarray(field, dtype=float)
    vx, vy, vz = rotated_decay_axis(ctrl)
    hg = 0.5 * gamma
    m = np.array(
        [
            [-hg, -2.0 * mu * bz, 2.0 * mu * by - hg * vx],
            [2.0 * mu * bz, -hg, -2.0 * mu * bx - hg * vy],
            [-2.0 * mu * by, 2.0 * mu * bx, -hg - hg * vz],
        ]
    )
    c = np.array([-hg * vx, -hg * vy, -hg - hg * vz])
    return DriftSystem(m, c)


def field_at(drive: DriveField, t: float) -> np.ndarray:
    """Field vector b0 (sin T cos wt, sin T sin wt, cos T) at time t."""
    azimuth = drive.omega * t
    sin_t = math.sin(drive.theta_field)
    return np.array(
        [
            drive.b0 * sin_t * math.cos(azimuth),
            drive.b0 * sin_t * math.sin(azimuth),
            drive.b0 * math.cos(drive.theta_field),
        ]
    )


def initial_state(theta: float) -> BlochState:
    """Pure state at polar angle theta in the x-z plane: (sin t, 0, cos t)."""
    if not (0.0 <= theta <= math.pi):
        raise ValueError("theta must lie in [0, pi]")
    return BlochState(math.sin(theta), 0.0, math.cos(theta))


def to_density(state: BlochState) -> DensityMatrix:
    """Map a Bloch vector to rho = (I + p . sigma) / 2.

    With the right-handed Pauli set this gives rho[0, 1] = (p_x - i p_y) / 2.
    """
    m = np.array(
        [
            [0.5 * (1.0 + state.pz), 0.5 * (state.px - 1j * state.py)],
            [0.5 * (state.px + 1j * state.py), 0.5 * (1.0 - state.pz)],
        ]
    )
    return DensityMatrix(m)


def from_density(dm: DensityMatrix) -> BlochState:
    """Inverse of :func:`to_density`."""
    m = dm.matrix
    return BlochState(
        2.0 * m[0, 1].real,
        -2.0 * m[0, 1].imag,
        (m[0, 0] - m[1, 1]).real,
    )
