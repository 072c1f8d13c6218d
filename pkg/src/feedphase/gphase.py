"""Geometric phase of a (generally nonunitary) Bloch trajectory.

The instantaneous state rho(p) is diagonalized in closed form. Writing
r = |p|, alpha for the polar angle of p and phi for the phase of the
coherence rho[0, 1] (phi = atan2(-p_y, p_x), the azimuth measured clockwise),
the spectral data are

    e_pm  = (1 +- r) / 2,
    |E+>  = (cos(alpha/2) e^{i phi}, sin(alpha/2)),
    |E->  = (sin(alpha/2) e^{i phi}, -cos(alpha/2)),

in the gauge where the ground-state component is real and nonnegative. For a
trajectory that starts pure, only the principal branch contributes and the
phase reduces to

    gamma_g = arg( <E+(0)|E+(tau)> * exp(-i Integral cos^2(alpha/2) dphi) ),

reduced to (-pi, pi]. The azimuth is unwrapped step to step; a step of
|dphi| >= pi/2 is refused as ambiguous rather than silently folded, and when
the transverse component is numerically zero the azimuth is held at its
previous value (the connection increment vanishes there anyway).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import Degenerate, NotPure, UnwrapAmbiguity
from .integrator import Trajectory
from .model import BlochState

DEGENERACY_EPS = 1e-9
XY_EPS = 1e-9
MAX_STEP_DPHI = 0.5 * math.pi
PURITY_EPS = 1e-9
OVERLAP_EPS = 1e-9


def wrap_angle(x: float) -> float:
    """Reduce an angle to the interval (-pi, pi]."""
    r = math.remainder(x, math.tau)
    if r <= -math.pi:
        r += math.tau
    return r


@dataclass(frozen=True)
class EigenFrame:
    """Spectral frame of one Bloch sample."""

    e_plus: float
    e_minus: float
    alpha: float
    phi: float
    xy_norm: float
    r: float


@dataclass(frozen=True)
class PhaseResult:
    """Outcome of the phase accumulation over one trajectory."""

    connection_integral: float
    overlap: complex | None
    gamma_g: float | None
    degenerate: bool
    max_step_dphi: float
    frame_initial: EigenFrame
    frame_final: EigenFrame | None
    failure_time: float | None = None

    @property
    def gamma_g_pi(self) -> float | None:
        """gamma_g in units of pi."""
        if self.gamma_g is None:
            return None
        return self.gamma_g / math.pi


def eigenframe(state: BlochState, phi_prev: float | None = None) -> EigenFrame:
    """Spectral frame of a single state, with the azimuth unwrapped against
    phi_prev (nearest 2 pi branch) and held at phi_prev near the polar axis.

    Raises Degenerate when |p| <= 1e-9.
    """
    r = state.norm
    if r <= DEGENERACY_EPS:
        raise Degenerate()
    xy = math.hypot(state.px, state.py)
    alpha = math.atan2(xy, state.pz)
    if xy < XY_EPS:
        phi = 0.0 if phi_prev is None else phi_prev
    else:
        raw = math.atan2(-state.py, state.px)
        if phi_prev is None:
            phi = raw
        else:
            phi = raw + math.tau * round((phi_prev - raw) / math.tau)
    return EigenFrame(
        e_plus=0.5 * (1.0 + r),
        e_minus=0.5 * (1.0 - r),
        alpha=alpha,
        phi=phi,
        xy_norm=xy,
        r=r,
    )


def principal_eigenvector(frame: EigenFrame) -> np.ndarray:
    """|E+> as a 2-vector in the (|e>, |g>) basis."""
    half = 0.5 * frame.alpha
    return np.array([math.cos(half) * cmath.exp(1j * frame.phi), math.sin(half)])


def minor_eigenvector(frame: EigenFrame) -> np.ndarray:
    """|E-> as a 2-vector in the (|e>, |g>) basis."""
    half = 0.5 * frame.alpha
    return np.array([math.sin(half) * cmath.exp(1j * frame.phi), -math.cos(half)])


def accumulate(prev: EigenFrame, nxt: EigenFrame) -> float:
    """Trapezoidal connection increment 1/2 (w_prev + w_next) dphi with
    w = cos^2(alpha / 2).

    Raises UnwrapAmbiguity when |dphi| >= pi/2.
    """
    dphi = nxt.phi - prev.phi
    if abs(dphi) >= MAX_STEP_DPHI:
        raise UnwrapAmbiguity(time=math.nan, dphi=dphi)
    w_prev = math.cos(0.5 * prev.alpha) ** 2
    w_next = math.cos(0.5 * nxt.alpha) ** 2
    return 0.5 * (w_prev + w_next) * dphi


def overlap(first: EigenFrame, last: EigenFrame) -> complex:
    """<E+(first)|E+(last)> using the unwrapped azimuths."""
    return math.cos(0.5 * first.alpha) * math.cos(0.5 * last.alpha) * cmath.exp(
        1j * (last.phi - first.phi)
    ) + math.sin(0.5 * first.alpha) * math.sin(0.5 * last.alpha)


@dataclass(frozen=True, eq=False)
class FrameWalk:
    """Vectorized frame data along a trajectory.

    Arrays are nan beyond the first degenerate sample (if any). The walk is
    the exact array form of folding :func:`eigenframe` / :func:`accumulate`
    sample by sample.
    """

    times: np.ndarray
    r: np.ndarray
    alpha: np.ndarray
    phi: np.ndarray
    e_plus: np.ndarray
    partial: np.ndarray  # running connection integral, partial[0] = 0
    max_step_dphi: float
    first_degenerate: int | None
    first_ambiguous: int | None


def walk_frames(traj: Trajectory) -> FrameWalk:
    p = traj.points
    n = p.shape[0]
    r_full = np.sqrt(np.einsum("ij,ij->i", p, p))

    degenerate = r_full <= DEGENERACY_EPS
    first_degenerate: int | None = None
    limit = n
    if degenerate.any():
        first_degenerate = int(np.argmax(degenerate))
        limit = first_degenerate

    px, py, pz = p[:limit, 0], p[:limit, 1], p[:limit, 2]
    xy = np.hypot(px, py)
    alpha = np.arctan2(xy, pz)

    # sequential unwrap-with-hold, done on the valid subsequence: a held
    # sample repeats the previous azimuth, so unwrapping the valid samples
    # against each other reproduces the per-step recursion exactly
    phi = np.zeros(limit)
    valid = xy >= XY_EPS
    if valid.any():
        idx = np.flatnonzero(valid)
        unwrapped = np.unwrap(np.arctan2(-py[idx], px[idx]))
        phi[idx] = unwrapped
        if idx[0] > 0:
            phi[: idx[0]] = 0.0
        gaps = np.diff(idx)
        if (gaps > 1).any() or idx[-1] < limit - 1:
            # forward-fill held stretches between and after valid samples
            fill = np.maximum.accumulate(np.where(valid, np.arange(limit), -1))
            mask = (~valid) & (fill >= 0)
            phi[mask] = phi[fill[mask]]

    dphi = np.diff(phi)
    max_step = float(np.abs(dphi).max()) if dphi.size else 0.0
    first_ambiguous: int | None = None
    if dphi.size and max_step >= MAX_STEP_DPHI:
        first_ambiguous = int(np.argmax(np.abs(dphi) >= MAX_STEP_DPHI)) + 1

    weight = np.cos(0.5 * alpha) ** 2
    partial = np.zeros(limit)
    if limit > 1:
        np.cumsum(0.5 * (weight[:-1] + weight[1:]) * dphi, out=partial[1:])

    def _pad(a):
        if limit == n:
            return a
        full = np.full(n, np.nan)
        full[:limit] = a
        return full

    return FrameWalk(
        times=traj.times,
        r=r_full,
        alpha=_pad(alpha),
        phi=_pad(phi),
        e_plus=_pad(0.5 * (1.0 + r_full[:limit])),
        partial=_pad(partial),
        max_step_dphi=max_step,
        first_degenerate=first_degenerate,
        first_ambiguous=first_ambiguous,
    )


def _frame_from_walk(walk: FrameWalk, i: int) -> EigenFrame:
    r = float(walk.r[i])
    return EigenFrame(
        e_plus=0.5 * (1.0 + r),
        e_minus=0.5 * (1.0 - r),
        alpha=float(walk.alpha[i]),
        phi=float(walk.phi[i]),
        xy_norm=float(r * math.sin(walk.alpha[i])) if math.isfinite(walk.alpha[i]) else 0.0,
        r=r,
    )


def geometric_phase(traj: Trajectory) -> PhaseResult:
    """Accumulate the connection along the trajectory and close the phase.

    Requires a pure initial sample (|p(0)| >= 1 - 1e-9), raising NotPure
    otherwise. An azimuth step of |dphi| >= pi/2 raises UnwrapAmbiguity with
    the offending time. A degenerate interior sample does not raise: the
    result comes back flagged with gamma_g omitted and the integral truncated
    at the last well-defined frame. An endpoint overlap of magnitude at or
    below 1e-9 is flagged the same way, since the argument of a vanishing
    overlap carries no information (this covers trajectories that cross the
    origin between samples).
    """
    walk = walk_frames(traj)
    r0 = float(walk.r[0])
    if r0 < 1.0 - PURITY_EPS:
        raise NotPure(r0)

    if walk.first_ambiguous is not None:
        k = walk.first_ambiguous
        raise UnwrapAmbiguity(
            time=float(walk.times[k]), dphi=float(walk.phi[k] - walk.phi[k - 1])
        )

    frame0 = _frame_from_walk(walk, 0)

    if walk.first_degenerate is not None:
        k = walk.first_degenerate
        last_valid = k - 1
        return PhaseResult(
            connection_integral=float(walk.partial[last_valid]),
            overlap=None,
            gamma_g=None,
            degenerate=True,
            max_step_dphi=walk.max_step_dphi,
            frame_initial=frame0,
            frame_final=_frame_from_walk(walk, last_valid) if last_valid >= 0 else None,
            failure_time=float(walk.times[k]),
        )

    frame_tau = _frame_from_walk(walk, len(traj) - 1)
    integral = float(walk.partial[-1])
    ov = overlap(frame0, frame_tau)
    if abs(ov) <= OVERLAP_EPS:
        return PhaseResult(
            connection_integral=integral,
            overlap=ov,
            gamma_g=None,
            degenerate=True,
            max_step_dphi=walk.max_step_dphi,
            frame_initial=frame0,
            frame_final=frame_tau,
            failure_time=float(walk.times[-1]),
        )
    gamma = cmath.phase(ov * cmath.exp(-1j * integral))
    if gamma <= -math.pi:
        gamma += math.tau
    return PhaseResult(
        connection_integral=integral,
        overlap=ov,
        gamma_g=gamma,
        degenerate=False,
        max_step_dphi=walk.max_step_dphi,
        frame_initial=frame0,
        frame_final=frame_tau,
    )
