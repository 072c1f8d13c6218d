"""Exception types shared across the package."""
from __future__ import annotations


class PurityViolation(RuntimeError):
    """Integration produced a Bloch vector noticeably outside the unit ball."""

    def __init__(self, time: float, norm: float):
        self.time = time
        self.norm = norm
        super().__init__(f"|p| = {norm:.9f} exceeds 1 + 1e-6 at t = {time:.6f}")


class Degenerate(RuntimeError):
    """The state is (numerically) maximally mixed, so its eigenframe is undefined."""

    def __init__(self, time: float | None = None):
        self.time = time
        where = "" if time is None else f" at t = {time:.6f}"
        super().__init__(f"degenerate state: |p| below the eigenframe threshold{where}")


class UnwrapAmbiguity(RuntimeError):
    """The azimuth moved by >= pi/2 in one step; the branch choice is unreliable."""

    def __init__(self, time: float, dphi: float):
        self.time = time
        self.dphi = dphi
        super().__init__(
            f"azimuth step |dphi| = {abs(dphi):.6f} >= pi/2 at t = {time:.6f}; "
            "reduce dt near the polar axis"
        )


class NotPure(ValueError):
    """Phase extraction requires a pure initial state."""

    def __init__(self, norm: float):
        self.norm = norm
        super().__init__(f"initial |p| = {norm:.12f} is not pure (need |p| >= 1 - 1e-9)")
