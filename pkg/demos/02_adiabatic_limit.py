"""Recover the adiabatic (unitary) phase, and see where weak decay breaks it.

With no decay and a slow drive, the cycle phase approaches the solid-angle
value wrap(2 pi cos^2(theta/2)) for a cone of polar angle theta; the
pure-state oracle integrates the Schrodinger equation directly and agrees
with the mixed-state pipeline to better than 1e-6.

Switching on even a small decay rate is not a small perturbation for every
cone. Near the equator the Bloch length stays order one and the phase sits
close to the solid angle. For near-polar cones the length passes close to
zero mid-cycle (the state brushes the maximally mixed point), the endpoint
overlap nearly vanishes, and the phase leaves the Berry value entirely.
"""

import math

from feedphase import (
    DriveField,
    FeedbackControl,
    SimParams,
    geometric_phase,
    initial_state,
    integrate,
    pure_phase_oracle,
    wrap_angle,
)

OMEGA = 0.005


def pipeline_phase(theta, gamma):
    drive = DriveField(theta_field=theta, omega=OMEGA)
    params = SimParams(
        gamma=gamma, theta_init=theta, duration=drive.cycle_duration(), dt=0.01
    )
    traj = integrate(initial_state(theta), drive, params, FeedbackControl(0.0))
    return geometric_phase(traj)


print("theta/pi   solid-angle/pi   oracle/pi   gamma=0/pi   gamma=1e-3/pi   |overlap|")
for frac in (1 / 6, 1 / 4, 1 / 3, 1 / 2, 2 / 3):
    theta = frac * math.pi
    ideal = wrap_angle(2 * math.pi * math.cos(theta / 2) ** 2)
    oracle = pure_phase_oracle(theta, DriveField(theta_field=theta, omega=OMEGA), dt=0.0025)
    unitary = pipeline_phase(theta, 0.0)
    damped = pipeline_phase(theta, 1e-3)
    print(
        f"{frac:8.4f}  {ideal / math.pi:15.5f}  {oracle / math.pi:9.5f}  "
        f"{unitary.gamma_g / math.pi:10.5f}  {damped.gamma_g / math.pi:13.5f}  "
        f"{abs(damped.overlap):9.5f}"
    )

print(
    "\ncolumns 2-4 agree: the zero-decay pipeline reproduces the oracle and"
    "\nthe solid angle up to the finite-rate correction. In the last two"
    "\ncolumns a near-unit overlap marks cones that keep their Berry-like"
    "\nphase at gamma = 1e-3, while a collapsing overlap (top rows) marks"
    "\ntrajectories that brush the maximally mixed point and jump branch."
)
