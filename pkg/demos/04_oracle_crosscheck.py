"""Run the independent cross-checks that back the fast Bloch pipeline.

Equivalent command line:

    feedphase verify

Three layers: the assembled drift generator against a vectorized
density-matrix superoperator, full trajectories against density-matrix
integration, and the zero-decay phase against a direct Schrodinger solve.
"""

import time

from feedphase import (
    check_drift_agreement,
    check_pure_phase_agreement,
    check_trajectory_agreement,
)

t0 = time.perf_counter()
drift_dev = check_drift_agreement(n_draws=100)
print(f"drift vs superoperator (100 draws):   max |delta| = {drift_dev:.3e}")

traj_dev, min_eig = check_trajectory_agreement(n_configs=20, tau=10.0, dt=0.01)
print(f"trajectory vs density matrix (20):    max |delta| = {traj_dev:.3e}")
print(f"positivity along the way:             min eigenvalue = {min_eig:.3e}")

phase_dev = check_pure_phase_agreement(n_draws=10)
print(f"zero-decay phase vs pure oracle (10): max |delta| = {phase_dev:.3e}")

print(f"\nall checks in {time.perf_counter() - t0:.1f} s")
