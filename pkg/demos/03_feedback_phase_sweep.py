"""Map the cycle phase over the feedback controls (rotation angle x azimuth).

Equivalent command line:

    feedphase sweep --preset fig1:0.05 --resolution 9 --plot phase_grid.png
"""

import math

import numpy as np

from feedphase import CELL_OK, STATUS_LABELS, fig1_protocol

GAMMA = 0.05
RESOLUTION = 9

grid = fig1_protocol(GAMMA, RESOLUTION, workers=2)

ok = grid.status == CELL_OK
print(f"decay rate {GAMMA}, {RESOLUTION}x{RESOLUTION} grid, {ok.sum()} cells ok")
for code in np.unique(grid.status):
    print(f"  status {code} ({STATUS_LABELS[int(code)]}): {(grid.status == code).sum()} cells")

values = grid.gamma_g_pi
print(f"phase range over ok cells: [{np.nanmin(values[ok]):+.4f}, {np.nanmax(values[ok]):+.4f}] pi")

print("\nphase / pi (rows: angle 0..pi, columns: azimuth 0..2 pi, . = flagged)")
for i in range(RESOLUTION):
    cells = []
    for j in range(RESOLUTION):
        cells.append(f"{values[i, j]:+.3f}" if ok[i, j] else "     .")
    print("  ".join(cells))

# the azimuth shift by pi mirrors the angle about pi/2
a = grid.gamma_g[1, 1]
b = grid.gamma_g[RESOLUTION - 2, (1 + (RESOLUTION - 1) // 2) % (RESOLUTION - 1)]
print(f"\nreflection check: {a:+.9f} vs {b:+.9f} rad")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4.5))
    mesh = ax.pcolormesh(
        grid.axis2_values / math.pi,
        grid.axis1_values / math.pi,
        values,
        shading="nearest",
        cmap="viridis",
    )
    ax.set_xlabel("azimuth / pi")
    ax.set_ylabel("angle / pi")
    fig.colorbar(mesh, ax=ax, label="phase / pi")
    fig.tight_layout()
    fig.savefig("phase_grid.png", dpi=130)
    print("wrote phase_grid.png")
except ImportError:
    print("matplotlib not installed; skipping the heatmap")
