"""Integrator tests: closed forms, conservation laws, convergence, failure modes."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import expm

from feedphase.errors import PurityViolation
from feedphase.integrator import Trajectory, integrate, step
from feedphase.model import (
    BlochState,
    DriveField,
    FeedbackControl,
    SimParams,
    drift_system,
    field_at,
    initial_state,
)

NO_FEEDBACK = FeedbackControl(0.0)


def test_trajectory_container():
    params = SimParams(gamma=0.1, duration=1.0, dt=0.1)
    traj = integrate(initial_state(0.3), DriveField(), params, NO_FEEDBACK)
    assert len(traj) == 11
    assert_allclose(traj.duration, 1.0)
    assert_allclose(np.diff(traj.times), 0.1)
    t0, s0 = traj.state_at(0)
    assert t0 == 0.0
    assert_allclose(s0.array, initial_state(0.3).array)
    assert_allclose(traj.final_state().array, traj.points[-1])
    assert not traj.points.flags.writeable


def test_trajectory_shape_validation():
    with pytest.raises(ValueError):
        Trajectory(dt=0.1, times=np.zeros(3), points=np.zeros((4, 3)))


def test_integrate_rejects_empty_run():
    with pytest.raises(ValueError):
        integrate(
            initial_state(0.3),
            DriveField(),
            SimParams(gamma=0.1, duration=0.001, dt=0.01),
            NO_FEEDBACK,
        )


def test_pure_decay_closed_form():
    # dark drive, no feedback: p_z(t) = 2 exp(-gamma t) - 1
    drive = DriveField(b0=0.0)
    params = SimParams(gamma=1.0, theta_init=0.0, duration=5.0, dt=1e-3)
    traj = integrate(initial_state(0.0), drive, params, NO_FEEDBACK)
    for t in (0.5, 1.0, 2.0, 5.0):
        i = int(round(t / params.dt))
        assert_allclose(traj.points[i, 2], 2.0 * math.exp(-t) - 1.0, atol=1e-8)
        assert_allclose(traj.points[i, :2], 0.0, atol=1e-12)


def test_transverse_decay_rate():
    # equatorial start: |p| decays at gamma/2 while precessing about z
    drive = DriveField(b0=1.0, theta_field=0.0, omega=0.0)
    params = SimParams(gamma=0.4, theta_init=math.pi / 2, duration=3.0, dt=1e-3)
    traj = integrate(initial_state(math.pi / 2), drive, params, NO_FEEDBACK)
    i = len(traj) - 1
    r_xy = math.hypot(traj.points[i, 0], traj.points[i, 1])
    assert_allclose(r_xy, math.exp(-0.2 * 3.0), atol=1e-8)


def test_larmor_circle():
    # static field along z, rate 2 mu b0: p = (cos 2t, sin 2t, 0)
    drive = DriveField(b0=1.0, theta_field=0.0, omega=0.0)
    params = SimParams(gamma=0.0, theta_init=math.pi / 2, duration=10.0, dt=0.005)
    traj = integrate(initial_state(math.pi / 2), drive, params, NO_FEEDBACK)
    exact = np.stack(
        [np.cos(2 * traj.times), np.sin(2 * traj.times), np.zeros_like(traj.times)],
        axis=1,
    )
    assert np.abs(traj.points - exact).max() < 1e-8
    norms = np.sqrt((traj.points**2).sum(axis=1))
    assert np.abs(norms - 1.0).max() < 1e-10


def test_norm_conserved_full_cycle_rotating_drive():
    # gamma = 0 keeps |p| = 1; rotating-drive geometry at the default step
    drive = DriveField(theta_field=math.pi / 2, omega=0.005)
    params = SimParams(gamma=0.0, theta_init=math.pi / 2, duration=drive.cycle_duration(), dt=1e-2)
    traj = integrate(initial_state(math.pi / 2), drive, params, NO_FEEDBACK)
    norms = np.sqrt((traj.points**2).sum(axis=1))
    assert np.abs(norms - 1.0).max() < 1e-8


def test_norm_conserved_full_cycle_static_axis():
    # worst case: fast precession for the whole cycle needs dt = 5e-3
    drive = DriveField(theta_field=0.0, omega=0.005)
    params = SimParams(gamma=0.0, theta_init=math.pi / 2, duration=drive.cycle_duration(), dt=5e-3)
    traj = integrate(initial_state(math.pi / 2), drive, params, NO_FEEDBACK)
    norms = np.sqrt((traj.points**2).sum(axis=1))
    assert np.abs(norms - 1.0).max() < 1e-8


def test_purity_never_exceeds_slack():
    rng = np.random.default_rng(37)
    for _ in range(5):
        drive = DriveField(omega=rng.uniform(0.01, 0.1), theta_field=rng.uniform(0, math.pi))
        ctrl = FeedbackControl.in_plane(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi))
        params = SimParams(gamma=rng.uniform(0, 2), theta_init=rng.uniform(0, math.pi), duration=20.0, dt=0.01)
        traj = integrate(initial_state(params.theta_init), drive, params, ctrl)
        norms = np.sqrt((traj.points**2).sum(axis=1))
        assert norms.max() <= 1.0 + 1e-9


def test_step_identity_and_validation():
    s = BlochState(0.2, 0.1, 0.5)
    assert step(s, 0.0, 0.0, DriveField(), SimParams(gamma=0.1), NO_FEEDBACK) is s
    with pytest.raises(ValueError):
        step(s, 0.0, -0.1, DriveField(), SimParams(gamma=0.1), NO_FEEDBACK)


def test_step_matches_matrix_exponential():
    # static field: the affine flow p(dt) = e^{M dt}(p + M^{-1}c) - M^{-1}c
    drive = DriveField(b0=0.8, theta_field=0.0, omega=0.0)
    ctrl = FeedbackControl.in_plane(0.7, 1.1)
    params = SimParams(gamma=0.3, dt=0.01)
    sys = drift_system(0.3, field_at(drive, 0.0), 1.0, ctrl)
    p0 = initial_state(1.0).array
    shift = np.linalg.solve(sys.m, sys.c)
    exact = expm(sys.m * 0.01) @ (p0 + shift) - shift
    got = step(initial_state(1.0), 0.0, 0.01, drive, params, ctrl)
    assert_allclose(got.array, exact, atol=1e-11)


def test_integration_is_deterministic():
    drive = DriveField(omega=0.02)
    ctrl = FeedbackControl.in_plane(0.9, 0.4)
    params = SimParams(gamma=0.5, duration=10.0, dt=0.01)
    a = integrate(initial_state(1.2), drive, params, ctrl)
    b = integrate(initial_state(1.2), drive, params, ctrl)
    assert np.array_equal(a.points, b.points)


def test_purity_violation_on_unstable_step():
    # dt far beyond the RK4 stability limit blows the norm up
    drive = DriveField(b0=0.0)
    params = SimParams(gamma=3.0, duration=40.0, dt=2.0)
    with pytest.raises(PurityViolation) as info:
        integrate(initial_state(math.pi / 2), drive, params, NO_FEEDBACK)
    assert info.value.norm > 1.0 + 1e-6
    assert info.value.time > 0.0


def test_refinement_consistency():
    # halving dt moves the endpoint by O(dt^4)
    drive = DriveField(omega=0.05)
    ctrl = FeedbackControl.in_plane(1.2, 0.3)
    ends = []
    for dt in (0.02, 0.01):
        params = SimParams(gamma=0.2, duration=30.0, dt=dt)
        ends.append(integrate(initial_state(math.pi / 2), drive, params, ctrl).final_state().array)
    assert np.abs(ends[0] - ends[1]).max() < 1e-7
