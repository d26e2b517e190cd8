"""Matching-condition checks and control-law synthesis between systems
related by a configuration diffeomorphism.

The lifted map carries T*Q2 to T*Q1 via q1 = phi^-1(q2), p1 = Dphi(q1)^T p2,
which is symplectic by construction; symplecticity is still verified
numerically through the M^T J M = J condition as a guard against bad
Jacobians.  All checks are pointwise over sample clouds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .phasespace import PhasePoint, TangentSample
from .rch import ControlLaw, RCHSystem, ZERO_FORCE

__all__ = [
    "ConfigDiffeo",
    "CotangentLift",
    "cotangent_lift",
    "matching_residual",
    "solve_control",
    "closed_loop_check",
    "MatchingReport",
    "VerticalityError",
]

SYMPLECTIC_TOL = 1e-8


class VerticalityError(RuntimeError):
    """Synthesized control has a horizontal part: matching conditions fail."""


@dataclass(frozen=True)
class ConfigDiffeo:
    """Configuration diffeomorphism with forward/inverse and Jacobian."""

    forward: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray] | None = None  # D(forward) at q1
    label: str = "phi"

    @staticmethod
    def identity(n: int) -> "ConfigDiffeo":
        eye = np.eye(n)
        return ConfigDiffeo(lambda q: q, lambda q: q, lambda q: eye, label="id")

    @staticmethod
    def linear(A: np.ndarray, label: str = "linear") -> "ConfigDiffeo":
        A = np.asarray(A, dtype=float)
        Ainv = np.linalg.inv(A)
        return ConfigDiffeo(lambda q: A @ q, lambda q: Ainv @ q, lambda q: A, label=label)

    def jacobian_at(self, q1: np.ndarray) -> np.ndarray:
        q1 = np.asarray(q1, dtype=float)
        if self.jacobian is not None:
            return np.asarray(self.jacobian(q1), dtype=float)
        h = 1e-6 * max(1.0, float(np.linalg.norm(q1)))
        n = q1.size
        m = np.asarray(self.forward(q1), dtype=float).size
        J = np.empty((m, n))
        for i in range(n):
            qp, qm = q1.copy(), q1.copy()
            qp[i] += h
            qm[i] -= h
            J[:, i] = (np.asarray(self.forward(qp)) - np.asarray(self.forward(qm))) / (2.0 * h)
        return J

    def check_inverse(self, qs: Sequence[np.ndarray], tol: float = 1e-10) -> float:
        worst = 0.0
        for q in qs:
            q = np.asarray(q, dtype=float)
            worst = max(worst, float(np.max(np.abs(self.inverse(np.asarray(self.forward(q))) - q))))
        if worst > tol:
            raise ValueError(f"forward/inverse mismatch {worst:.3e} for {self.label!r}")
        return worst


def cotangent_lift(phi: ConfigDiffeo, z2: PhasePoint) -> PhasePoint:
    """Lifted map T*Q2 -> T*Q1: q1 = phi^-1(q2), p1 = Dphi(q1)^T p2."""
    q1 = np.asarray(phi.inverse(z2.q), dtype=float)
    Dphi = phi.jacobian_at(q1)
    if abs(np.linalg.det(Dphi)) < 1e-14:
        raise np.linalg.LinAlgError(f"singular Jacobian of {phi.label!r}")
    return PhasePoint(q1, Dphi.T @ z2.p)


def _push_inverse(phi: ConfigDiffeo, z1: PhasePoint) -> PhasePoint:
    """The companion map T*Q1 -> T*Q2 (lift of the inverse diffeomorphism)."""
    q2 = np.asarray(phi.forward(z1.q), dtype=float)
    Dphi = phi.jacobian_at(z1.q)
    return PhasePoint(q2, np.linalg.solve(Dphi.T, z1.p))


@dataclass(frozen=True)
class CotangentLift:
    """The lifted map of a configuration diffeomorphism, with tangent map."""

    phi: ConfigDiffeo

    def __call__(self, z2: PhasePoint) -> PhasePoint:
        return cotangent_lift(self.phi, z2)

    def inverse(self, z1: PhasePoint) -> PhasePoint:
        return _push_inverse(self.phi, z1)

    def tangent(self, z2: PhasePoint) -> np.ndarray:
        """Jacobian of the lift as a map R^2n -> R^2n at z2."""
        v0 = z2.as_vector()
        h = 1e-6 * max(1.0, float(np.linalg.norm(v0)))
        n = z2.n
        J = np.empty((2 * n, 2 * n))
        for i in range(2 * n):
            vp, vm = v0.copy(), v0.copy()
            vp[i] += h
            vm[i] -= h
            J[:, i] = (self(PhasePoint.from_vector(vp)).as_vector()
                       - self(PhasePoint.from_vector(vm)).as_vector()) / (2.0 * h)
        return J

    def symplectic_residual(self, z2: PhasePoint) -> float:
        n = z2.n
        M = self.tangent(z2)
        Omega = np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])
        return float(np.max(np.abs(M.T @ Omega @ M - Omega)))


def _pull_vertical(phi: ConfigDiffeo, z1: PhasePoint, v2: np.ndarray) -> np.ndarray:
    """Pull a fiber increment at the image point back to z1: Dphi(q1)^T v2."""
    return phi.jacobian_at(z1.q).T @ np.asarray(v2, dtype=float)


def _conjugated_force(sys2: RCHSystem, lift: CotangentLift):
    """The force of system 2 conjugated to chart 1 through the lifted map."""
    from .phasespace import FiberMap

    if sys2.F is ZERO_FORCE:
        return None
    return FiberMap(
        evaluator=lambda z1: lift(sys2.F(lift.inverse(z1))),
        label="conjugated-force",
    )


def _mismatch(
    sys1: RCHSystem,
    sys2: RCHSystem,
    lift: CotangentLift,
    z1: PhasePoint,
) -> np.ndarray:
    """X_H1 + vlift(F1)X_H1 - T(phi^*)X_H2 - vlift(conj F2)X_H1 at z1."""
    from .phasespace import vlift_of_map

    z2 = lift.inverse(z1)
    m = sys1.open_loop_vf(z1).as_vector()
    m = m - lift.tangent(z2) @ sys2.xh(z2).as_vector()
    f2c = _conjugated_force(sys2, lift)
    if f2c is not None:
        m = m - vlift_of_map(f2c, sys1.xh, z1).as_vector()
    return m


@dataclass(frozen=True)
class MatchingReport:
    rch1_symplectic_residual: float
    horizontal_residual: float
    vertical_excess: float
    closed_loop_residual: float | None
    n_samples: int
    tolerance: float

    @property
    def passed(self) -> bool:
        ok = (self.rch1_symplectic_residual < SYMPLECTIC_TOL
              and self.horizontal_residual < self.tolerance
              and self.vertical_excess < self.tolerance)
        if self.closed_loop_residual is not None:
            ok = ok and self.closed_loop_residual < self.tolerance
        return ok

    def to_dict(self) -> dict:
        return {
            "rch1_symplectic_residual": self.rch1_symplectic_residual,
            "horizontal_residual": self.horizontal_residual,
            "vertical_excess": self.vertical_excess,
            "closed_loop_residual": self.closed_loop_residual,
            "n_samples": self.n_samples,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


def matching_residual(
    sys1: RCHSystem,
    sys2: RCHSystem,
    phi: ConfigDiffeo,
    samples: Sequence[PhasePoint],
    tolerance: float = 1e-6,
) -> MatchingReport:
    """Pointwise matching-condition residuals over a sample cloud in T*Q1.

    The mismatch field is X_H1 + vlift(F1)X_H1 minus the pulled-back open
    loop field of system 2 (force conjugated through the lift).  Its
    horizontal part must vanish and its vertical part must sit inside
    span(W1).
    """
    lift = CotangentLift(phi)
    n = sys1.chart.config_dim
    sympl = 0.0
    horiz = 0.0
    vert = 0.0
    for z1 in samples:
        z2 = lift.inverse(z1)
        sympl = max(sympl, lift.symplectic_residual(z2))
        m = _mismatch(sys1, sys2, lift, z1)
        horiz = max(horiz, float(np.max(np.abs(m[:n]))))
        vert = max(vert, sys1.W.distance(m[n:]))
    return MatchingReport(
        rch1_symplectic_residual=sympl,
        horizontal_residual=horiz,
        vertical_excess=vert,
        closed_loop_residual=None,
        n_samples=len(samples),
        tolerance=tolerance,
    )


def solve_control(
    sys1: RCHSystem,
    sys2: RCHSystem,
    phi: ConfigDiffeo,
    u2: ControlLaw | None,
    z1: PhasePoint,
    verticality_tol: float = 1e-8,
) -> np.ndarray:
    """Fiber increment of the synthesized control vlift(u1) at z1.

    vlift(u1) = -X_H1 - vlift(F1) + T(phi^*)(X_H2) + vlift(conj F2)
    + pulled u2, with the system-2 force conjugated through the lift and
    the system-2 control increment pulled along the fibers.  The result
    must be vertical; a horizontal remainder means the matching conditions
    fail.
    """
    lift = CotangentLift(phi)
    n = sys1.chart.config_dim
    m = -_mismatch(sys1, sys2, lift, z1)
    if u2 is not None:
        z2 = lift.inverse(z1)
        uc = u2.contribution(sys2.xh, z2)
        m = m + np.concatenate([np.zeros(n), _pull_vertical(phi, z1, uc.dp)])
    if float(np.max(np.abs(m[:n]))) > verticality_tol * max(1.0, float(np.max(np.abs(m)))):
        raise VerticalityError(
            f"synthesized control is not vertical (horizontal part "
            f"{float(np.max(np.abs(m[:n]))):.3e}); matching conditions violated"
        )
    return m[n:]


def synthesized_law(
    sys1: RCHSystem,
    sys2: RCHSystem,
    phi: ConfigDiffeo,
    u2: ControlLaw | None,
) -> ControlLaw:
    """Wrap solve_control as a feedback law on system 1."""
    return ControlLaw(
        subset=sys1.W,
        vertical_field=lambda z1: solve_control(sys1, sys2, phi, u2, z1),
        label="u1-synthesized",
    )


def closed_loop_check(
    sys1: RCHSystem,
    u1: ControlLaw | None,
    sys2: RCHSystem,
    u2: ControlLaw | None,
    phi: ConfigDiffeo,
    samples2: Sequence[PhasePoint],
    tolerance: float = 1e-6,
) -> MatchingReport:
    """Compare the two closed-loop fields through the lifted map.

    Samples live in T*Q2; the residual is the mismatch between the system-1
    closed loop at the lifted point and the pushed system-2 closed loop.
    """
    lift = CotangentLift(phi)
    worst = 0.0
    total = 0.0
    for z2 in samples2:
        z1 = lift(z2)
        field1 = sys1.open_loop_vf(z1).as_vector()
        if u1 is not None:
            field1 = field1 + u1.contribution(sys1.xh, z1).as_vector()
        field2 = sys2.open_loop_vf(z2).as_vector()
        if u2 is not None:
            field2 = field2 + u2.contribution(sys2.xh, z2).as_vector()
        pushed = lift.tangent(z2) @ field2
        r = float(np.max(np.abs(field1 - pushed)))
        worst = max(worst, r)
        total += r
    return MatchingReport(
        rch1_symplectic_residual=0.0,
        horizontal_residual=0.0,
        vertical_excess=0.0,
        closed_loop_residual=worst,
        n_samples=len(samples2),
        tolerance=tolerance,
    )
