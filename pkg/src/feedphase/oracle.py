"""Independent cross-checks for the Bloch-vector pipeline.

Everything here is rebuilt from elementary 2x2 matrices rather than imported
from the model module, so agreement between the two code paths is evidence
and not tautology. Three oracles are provided:

* a superoperator form of the generator, applied directly to density
  matrices (column-major vectorization, vec(A X B) = (B^T kron A) vec(X)),
* a density-matrix RK4 integrator driven by that superoperator,
* a pure-state Schroedinger oracle for the zero-decay geometric phase,
  gamma = arg<psi(0)|psi(tau)> + Integral <H> dt, reduced to (-pi, pi].

The check_* helpers at the bottom draw randomized configurations, run both
pipelines and report worst-case deviations; the command line "verify"
subcommand and the test suite both call them.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import model
from .integrator import integrate
from .model import DriveField, FeedbackControl, SimParams

_ID = np.eye(2, dtype=complex)
_SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
# basis order (|e>, |g>): the lowering operator maps |e> to |g>
_LOWER = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
_NUMBER = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)


def _as_matrix(rho) -> np.ndarray:
    """Coerce a DensityMatrix wrapper or a plain 2x2 array to an ndarray."""
    return np.asarray(getattr(rho, "matrix", rho), dtype=complex)


def _vec(rho) -> np.ndarray:
    return _as_matrix(rho).flatten(order="F")


def _unvec(v: np.ndarray) -> np.ndarray:
    return v.reshape((2, 2), order="F")


def _feedback_matrix(feedback: FeedbackControl | np.ndarray) -> np.ndarray:
    if isinstance(feedback, FeedbackControl):
        nx, ny, nz = feedback.axis
        n_dot_sigma = nx * _SX + ny * _SY + nz * _SZ
        return math.cos(feedback.angle) * _ID + 1j * math.sin(feedback.angle) * n_dot_sigma
    f = np.asarray(feedback, dtype=complex)
    if f.shape != (2, 2):
        raise ValueError(f"feedback matrix must be 2x2, got shape {f.shape}")
    return f


def density_from_bloch(p) -> np.ndarray:
    """Density matrix (I + p . sigma) / 2 built from the local matrices."""
    px, py, pz = np.asarray(p, dtype=float)
    return 0.5 * (_ID + px * _SX + py * _SY + pz * _SZ)


def bloch_projection(rho) -> np.ndarray:
    """Bloch components as traces tr(sigma_j rho)."""
    rho = _as_matrix(rho)
    return np.array(
        [
            np.trace(_SX @ rho).real,
            np.trace(_SY @ rho).real,
            np.trace(_SZ @ rho).real,
        ]
    )


@dataclass(frozen=True, eq=False)
class Superoperator:
    """4x4 generator acting on column-major vectorized density matrices."""

    matrix: np.ndarray

    def apply(self, rho) -> np.ndarray:
        return _unvec(self.matrix @ _vec(rho))


def _hamiltonian_part(h: np.ndarray) -> np.ndarray:
    return -1j * (np.kron(_ID, h) - np.kron(h.T, _ID))


def _dissipative_part(gamma: float, feedback: FeedbackControl | np.ndarray) -> np.ndarray:
    f = _feedback_matrix(feedback)
    jump = f @ _LOWER
    return gamma * (
        np.kron(jump.conj(), jump)
        - 0.5 * (np.kron(_ID, _NUMBER) + np.kron(_NUMBER.T, _ID))
    )


def build_superoperator(
    gamma: float,
    field,
    mu: float,
    feedback: FeedbackControl | np.ndarray,
) -> Superoperator:
    """Full generator for a fixed field vector."""
    bx, by, bz = np.asarray(field, dtype=float)
    h = mu * (bx * _SX + by * _SY + bz * _SZ)
    return Superoperator(_hamiltonian_part(h) + _dissipative_part(gamma, feedback))


@dataclass(frozen=True, eq=False)
class DensityTrajectory:
    """Sampled density-matrix history from the superoperator integrator."""

    dt: float
    times: np.ndarray
    matrices: np.ndarray

    def __len__(self) -> int:
        return self.matrices.shape[0]

    def bloch_points(self) -> np.ndarray:
        rho = self.matrices
        return np.stack(
            [
                2.0 * rho[:, 0, 1].real,
                -2.0 * rho[:, 0, 1].imag,
                (rho[:, 0, 0] - rho[:, 1, 1]).real,
            ],
            axis=1,
        )

    def min_eigenvalue(self) -> float:
        """Smallest eigenvalue over all samples (of the Hermitian parts)."""
        h = 0.5 * (self.matrices + np.conj(np.transpose(self.matrices, (0, 2, 1))))
        a = h[:, 0, 0].real
        d = h[:, 1, 1].real
        disc = np.sqrt((a - d) ** 2 + 4.0 * np.abs(h[:, 0, 1]) ** 2)
        return float((0.5 * (a + d - disc)).min())


def integrate_superoperator(
    rho0: np.ndarray,
    drive: DriveField,
    params: SimParams,
    feedback: FeedbackControl | np.ndarray,
) -> DensityTrajectory:
    """RK4 on vec(rho) with the time-dependent generator.

    The generator splits as L(t) = L_static + c(t) G_x + s(t) G_y where only
    the transverse field components rotate; the static part absorbs the
    dissipator and the axial field term.
    """
    n = params.n_steps
    if n < 1:
        raise ValueError("need at least one step")
    dt = params.dt
    mu = drive.mu

    g_x = _hamiltonian_part(mu * _SX)
    g_y = _hamiltonian_part(mu * _SY)
    l_static = _dissipative_part(params.gamma, feedback) + _hamiltonian_part(
        mu * drive.b0 * math.cos(drive.theta_field) * _SZ
    )
    amp = drive.b0 * math.sin(drive.theta_field)
    omega = drive.omega

    def generator(t: float) -> np.ndarray:
        phase = omega * t
        return l_static + (amp * math.cos(phase)) * g_x + (amp * math.sin(phase)) * g_y

    out = np.empty((n + 1, 2, 2), dtype=complex)
    out[0] = _as_matrix(rho0)
    v = _vec(rho0)
    half = 0.5 * dt
    for i in range(n):
        t = i * dt
        l_1 = generator(t)
        l_m = generator(t + half)
        l_4 = generator(t + dt)
        k1 = l_1 @ v
        k2 = l_m @ (v + half * k1)
        k3 = l_m @ (v + half * k2)
        k4 = l_4 @ (v + dt * k3)
        v = v + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        out[i + 1] = _unvec(v)
    times = np.arange(n + 1) * dt
    return DensityTrajectory(dt=dt, times=times, matrices=out)


@njit(cache=True)
def _schrodinger_run(c0, c1, n, dt, mu, b0, sin_tf, cos_tf, omega, energies):
    """RK4 for d psi/dt = -i H(t) psi, recording the normalized <H> samples."""

    def h_apply(a0, a1, t):
        phase = omega * t
        bx = b0 * sin_tf * math.cos(phase)
        by = b0 * sin_tf * math.sin(phase)
        bz = b0 * cos_tf
        h0 = mu * (bz * a0 + (bx - 1j * by) * a1)
        h1 = mu * ((bx + 1j * by) * a0 - bz * a1)
        return h0, h1

    def mean_energy(a0, a1, t):
        h0, h1 = h_apply(a0, a1, t)
        num = (np.conj(a0) * h0 + np.conj(a1) * h1).real
        den = (np.conj(a0) * a0 + np.conj(a1) * a1).real
        return num / den

    energies[0] = mean_energy(c0, c1, 0.0)
    half = 0.5 * dt
    sixth = dt / 6.0
    for i in range(n):
        t = i * dt
        h0, h1 = h_apply(c0, c1, t)
        k10, k11 = -1j * h0, -1j * h1
        h0, h1 = h_apply(c0 + half * k10, c1 + half * k11, t + half)
        k20, k21 = -1j * h0, -1j * h1
        h0, h1 = h_apply(c0 + half * k20, c1 + half * k21, t + half)
        k30, k31 = -1j * h0, -1j * h1
        h0, h1 = h_apply(c0 + dt * k30, c1 + dt * k31, t + dt)
        k40, k41 = -1j * h0, -1j * h1
        c0 = c0 + sixth * (k10 + 2.0 * (k20 + k30) + k40)
        c1 = c1 + sixth * (k11 + 2.0 * (k21 + k31) + k41)
        energies[i + 1] = mean_energy(c0, c1, t + dt)
    return c0, c1


def pure_phase_oracle(
    theta: float,
    drive: DriveField,
    tau: float | None = None,
    dt: float = 0.01,
) -> float:
    """Geometric phase of the decay-free (pure Schroedinger) evolution.

    Integrates |psi> under H(t) from the polar-angle-theta initial state and
    removes the dynamical phase: arg<psi(0)|psi(tau)> + Integral <H> dt,
    reduced to (-pi, pi].
    """
    if tau is None:
        tau = drive.cycle_duration()
    n = int(round(tau / dt))
    if n < 1:
        raise ValueError("need at least one step")
    half_theta = 0.5 * theta
    c0_init = math.cos(half_theta)
    c1_init = math.sin(half_theta)
    energies = np.empty(n + 1)
    c0, c1 = _schrodinger_run(
        complex(c0_init),
        complex(c1_init),
        n,
        dt,
        drive.mu,
        drive.b0,
        math.sin(drive.theta_field),
        math.cos(drive.theta_field),
        drive.omega,
        energies,
    )
    inner = c0_init * c0 + c1_init * c1
    dynamical = dt * (energies.sum() - 0.5 * (energies[0] + energies[-1]))
    total = cmath.phase(inner) + dynamical
    r = math.remainder(total, math.tau)
    if r <= -math.pi:
        r += math.tau
    return r


def _random_unit_vector(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def check_drift_agreement(n_draws: int = 100, seed: int = 20240811) -> float:
    """Worst deviation between the closed-form Bloch drift and the
    superoperator projected onto Bloch components, over random
    (field, decay rate, feedback, state) draws.

    Half of the draws use an equatorial feedback axis, half a fully random
    one, so the axial-axis terms are exercised too.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(n_draws):
        field = _random_unit_vector(rng) * rng.uniform(0.0, 2.0)
        gamma = rng.uniform(0.0, 3.0)
        mu = rng.uniform(0.5, 2.0)
        angle = rng.uniform(0.0, 2.0 * math.pi)
        if k % 2 == 0:
            ctrl = FeedbackControl.in_plane(angle, rng.uniform(0.0, 2.0 * math.pi))
        else:
            ctrl = FeedbackControl(angle=angle, axis=tuple(_random_unit_vector(rng)))
        p = _random_unit_vector(rng) * rng.uniform(0.0, 1.0)

        system = model.drift_system(gamma, field, mu, ctrl)
        rate_model = system.rate(p)

        sup = build_superoperator(gamma, field, mu, ctrl)
        rate_oracle = bloch_projection(sup.apply(density_from_bloch(p)))

        worst = max(worst, float(np.abs(rate_model - rate_oracle).max()))
    return worst


def check_trajectory_agreement(
    n_configs: int = 20,
    seed: int = 20240812,
    tau: float = 10.0,
    dt: float = 0.01,
) -> tuple[float, float]:
    """Integrate random configurations with both pipelines.

    Returns (worst Bloch-component deviation over all samples, smallest
    density-matrix eigenvalue seen by the superoperator run).
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    min_eig = math.inf
    for k in range(n_configs):
        gamma = rng.uniform(0.0, 3.0)
        theta = rng.uniform(0.0, math.pi)
        drive = DriveField(
            b0=rng.uniform(0.5, 1.5),
            theta_field=rng.uniform(0.0, math.pi),
            omega=rng.uniform(0.01, 0.5),
            mu=rng.uniform(0.5, 1.5),
        )
        angle = rng.uniform(0.0, 2.0 * math.pi)
        if k % 2 == 0:
            ctrl = FeedbackControl.in_plane(angle, rng.uniform(0.0, 2.0 * math.pi))
        else:
            ctrl = FeedbackControl(angle=angle, axis=tuple(_random_unit_vector(rng)))
        params = SimParams(gamma=gamma, theta_init=theta, duration=tau, dt=dt)

        p0 = model.initial_state(theta)
        traj = integrate(p0, drive, params, ctrl)
        dens = integrate_superoperator(model.to_density(p0), drive, params, ctrl)

        worst = max(worst, float(np.abs(traj.points - dens.bloch_points()).max()))
        min_eig = min(min_eig, dens.min_eigenvalue())
    return worst, min_eig


def check_pure_phase_agreement(
    n_draws: int = 10, seed: int = 20240813, dt: float = 0.0025
) -> float:
    """Worst wrapped phase difference between the mixed-state pipeline at
    zero decay rate and the pure Schroedinger oracle, over random drives.

    Draws share the initial polar angle and the field polar angle (the
    adiabatic tracking regime); the rotation rate stays at or below 0.05.
    Both pipelines sample at the same dt; their quadrature errors scale as
    dt^2, and the default step keeps the worst deviation near 1e-7.
    """
    from .gphase import geometric_phase, wrap_angle

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_draws):
        theta = rng.uniform(0.15, math.pi - 0.15)
        drive = DriveField(
            b0=1.0,
            theta_field=theta,
            omega=rng.uniform(0.005, 0.05),
            mu=1.0,
        )
        params = SimParams(
            gamma=0.0, theta_init=theta, duration=drive.cycle_duration(), dt=dt
        )
        ctrl = FeedbackControl(angle=0.0)
        traj = integrate(model.initial_state(theta), drive, params, ctrl)
        result = geometric_phase(traj)
        reference = pure_phase_oracle(theta, drive, tau=params.snapped_duration, dt=dt)
        assert result.gamma_g is not None
        worst = max(worst, abs(wrap_angle(result.gamma_g - reference)))
    return worst
