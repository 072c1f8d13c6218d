"""Bloch-vector dynamics of a driven two-level atom whose spontaneous
emission is steered by unitary jump feedback, and the geometric phase the
state picks up along one drive cycle.

The flat API re-exports the pieces most scripts need: domain types and the
drift construction (model), the trajectory integrator, the phase accumulator
(gphase), independent cross-check oracles, and grid sweep protocols. The
command line lives in feedphase.cli (entry point: feedphase).
"""

__version__ = "0.1.0"

from .errors import Degenerate, NotPure, PurityViolation, UnwrapAmbiguity
from .gphase import (
    EigenFrame,
    PhaseResult,
    accumulate,
    eigenframe,
    geometric_phase,
    overlap,
    walk_frames,
    wrap_angle,
)
from .integrator import Trajectory, integrate, step
from .model import (
    BlochState,
    DensityMatrix,
    DriftSystem,
    DriveField,
    FeedbackControl,
    SimParams,
    drift_system,
    feedback_unitary,
    field_at,
    from_density,
    initial_state,
    rotated_decay_axis,
    to_density,
)
from .oracle import (
    DensityTrajectory,
    Superoperator,
    build_superoperator,
    check_drift_agreement,
    check_pure_phase_agreement,
    check_trajectory_agreement,
    integrate_superoperator,
    pure_phase_oracle,
)
from .sweep import (
    CELL_DEGENERATE,
    CELL_OK,
    CELL_PURITY,
    CELL_UNWRAP,
    FIG1_DECAY_RATES,
    FIG2_FEEDBACK_ANGLES,
    STATUS_LABELS,
    AxisSpec,
    SweepGrid,
    SweepSpec,
    fig1_protocol,
    fig1_spec,
    fig2_protocol,
    fig2_spec,
    run_sweep,
)

__all__ = [
    "__version__",
    "AxisSpec",
    "BlochState",
    "CELL_DEGENERATE",
    "CELL_OK",
    "CELL_PURITY",
    "CELL_UNWRAP",
    "Degenerate",
    "DensityMatrix",
    "DensityTrajectory",
    "DriftSystem",
    "DriveField",
    "EigenFrame",
    "FeedbackControl",
    "FIG1_DECAY_RATES",
    "FIG2_FEEDBACK_ANGLES",
    "STATUS_LABELS",
    "NotPure",
    "PhaseResult",
    "PurityViolation",
    "SimParams",
    "Superoperator",
    "SweepGrid",
    "SweepSpec",
    "Trajectory",
    "UnwrapAmbiguity",
    "accumulate",
    "build_superoperator",
    "check_drift_agreement",
    "check_pure_phase_agreement",
    "check_trajectory_agreement",
    "drift_system",
    "eigenframe",
    "feedback_unitary",
    "field_at",
    "fig1_protocol",
    "fig1_spec",
    "fig2_protocol",
    "fig2_spec",
    "from_density",
    "geometric_phase",
    "initial_state",
    "integrate",
    "integrate_superoperator",
    "overlap",
    "pure_phase_oracle",
    "rotated_decay_axis",
    "run_sweep",
    "step",
    "to_density",
    "walk_frames",
    "wrap_angle",
]
