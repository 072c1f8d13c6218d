"""Integrate one damped run and look at the raw Bloch history.

Equivalent command line:

    feedphase trajectory --gamma 0.2 --a-pi 0.25 --tau 60 --thin 100
"""

import math

import numpy as np

from feedphase import (
    DriveField,
    FeedbackControl,
    SimParams,
    initial_state,
    integrate,
)

drive = DriveField(omega=0.05)
ctrl = FeedbackControl.in_plane(math.pi / 4, 0.0)
params = SimParams(gamma=0.2, theta_init=math.pi / 2, duration=60.0, dt=0.01)

traj = integrate(initial_state(params.theta_init), drive, params, ctrl)
norms = np.sqrt((traj.points**2).sum(axis=1))

print(f"{len(traj)} samples over tau = {traj.duration:g}")
print("      t        p_x        p_y        p_z        |p|")
for i in range(0, len(traj), 600):
    t = traj.times[i]
    x, y, z = traj.points[i]
    print(f"{t:7.2f}  {x:9.5f}  {y:9.5f}  {z:9.5f}  {norms[i]:9.6f}")

# the same decay rate with the drive switched off has a closed form
dark = DriveField(b0=0.0)
dark_params = SimParams(gamma=0.2, theta_init=0.0, duration=60.0, dt=0.01)
dark_traj = integrate(initial_state(0.0), dark, dark_params, FeedbackControl(0.0))
worst = max(
    abs(dark_traj.points[i, 2] - (2.0 * math.exp(-0.2 * dark_traj.times[i]) - 1.0))
    for i in range(len(dark_traj))
)
print(f"\ndark-drive check: max |p_z - (2 e^(-gamma t) - 1)| = {worst:.2e}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4))
    for k, label in enumerate(("p_x", "p_y", "p_z")):
        ax.plot(traj.times, traj.points[:, k], label=label, lw=0.9)
    ax.plot(traj.times, norms, label="|p|", color="black", ls="--", lw=0.9)
    ax.set_xlabel("t")
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig("relaxation_trajectory.png", dpi=130)
    print("wrote relaxation_trajectory.png")
except ImportError:
    print("matplotlib not installed; skipping the plot")
