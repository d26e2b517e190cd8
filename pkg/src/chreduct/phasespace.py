"""Trivialized cotangent-bundle charts R^n x R^n.

A phase point is a pair (q, p).  Tangent vectors at a phase point carry a
(dq, dp) split; the vertical subspace is dq = 0.  Vertical lifts along a
fiber are straight-line transports because all fibers here are vector
spaces.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .liealg import CoalgebraVector, abelian, numeric_gradient, so3

__all__ = [
    "FiberMismatchError",
    "PhaseSpaceChart",
    "PhasePoint",
    "TangentSample",
    "FiberMap",
    "canonical_xh",
    "vlift_fiber",
    "vlift_of_map",
    "momentum_map",
]

FIBER_PRESERVE_TOL = 1e-12


class FiberMismatchError(ValueError):
    """Raised when fiber operations mix points over different base points."""


@dataclass(frozen=True)
class PhasePoint:
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if q.shape != p.shape or q.ndim != 1:
            raise ValueError("q and p must be 1-d vectors of equal length")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise ValueError("phase point has non-finite entries")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.q.size

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])

    @staticmethod
    def from_vector(z: np.ndarray) -> "PhasePoint":
        z = np.asarray(z, dtype=float)
        n = z.size // 2
        return PhasePoint(z[:n], z[n:])


@dataclass(frozen=True)
class TangentSample:
    """Tangent vector (dq, dp) at a base phase point."""

    base: PhasePoint
    dq: np.ndarray
    dp: np.ndarray

    def __post_init__(self):
        dq = np.atleast_1d(np.asarray(self.dq, dtype=float))
        dp = np.atleast_1d(np.asarray(self.dp, dtype=float))
        if dq.shape != (self.base.n,) or dp.shape != (self.base.n,):
            raise ValueError("tangent components must match the base dimension")
        object.__setattr__(self, "dq", dq)
        object.__setattr__(self, "dp", dp)

    @property
    def is_vertical(self) -> bool:
        return bool(np.all(self.dq == 0.0))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.dq, self.dp])


@dataclass(frozen=True)
class PhaseSpaceChart:
    """A global chart R^n x R^n, optionally carrying a lifted group action.

    Implemented actions: ``"translation"`` (R^n acting on itself) and
    ``"so3"`` (rotations of R^3).
    """

    config_dim: int
    label: str = "chart"
    group_action: str | None = None

    def __post_init__(self):
        if self.config_dim < 1:
            raise ValueError("config_dim must be >= 1")
        if self.group_action not in (None, "translation", "so3"):
            raise ValueError(f"unknown group action {self.group_action!r}")
        if self.group_action == "so3" and self.config_dim != 3:
            raise ValueError("so3 action requires config_dim == 3")

    def point(self, q, p) -> PhasePoint:
        z = PhasePoint(q, p)
        if z.n != self.config_dim:
            raise ValueError(f"point dimension {z.n} != chart dimension {self.config_dim}")
        return z


def _grad_qp(
    H: Callable[[PhasePoint], float],
    z: PhasePoint,
    grad: Callable[[PhasePoint], tuple[np.ndarray, np.ndarray]] | None,
) -> tuple[np.ndarray, np.ndarray]:
    if grad is not None:
        gq, gp = grad(z)
        return np.asarray(gq, dtype=float), np.asarray(gp, dtype=float)
    g = numeric_gradient(lambda v: H(PhasePoint.from_vector(v)), z.as_vector())
    return g[: z.n], g[z.n :]


def canonical_xh(
    H: Callable[[PhasePoint], float],
    z: PhasePoint,
    grad: Callable[[PhasePoint], tuple[np.ndarray, np.ndarray]] | None = None,
) -> TangentSample:
    """Hamiltonian vector field in Darboux coordinates: (dH/dp, -dH/dq)."""
    gq, gp = _grad_qp(H, z, grad)
    return TangentSample(z, dq=gp, dp=-gq)


def vlift_fiber(rho: TangentSample, a: PhasePoint) -> TangentSample:
    """Transport the vertical part of ``rho`` to another point of the same fiber."""
    if rho.base.q.shape != a.q.shape or np.max(np.abs(rho.base.q - a.q)) > FIBER_PRESERVE_TOL:
        raise FiberMismatchError("points lie in different fibers (base configurations differ)")
    return TangentSample(a, dq=np.zeros_like(a.q), dp=rho.dp.copy())


@dataclass(frozen=True)
class FiberMap:
    """A fiber-preserving map of the phase space (same q in, same q out)."""

    evaluator: Callable[[PhasePoint], PhasePoint]
    jacobian: Callable[[PhasePoint], np.ndarray] | None = None
    label: str = "fiber-map"

    def __call__(self, z: PhasePoint) -> PhasePoint:
        out = self.evaluator(z)
        if np.max(np.abs(out.q - z.q)) > FIBER_PRESERVE_TOL:
            raise FiberMismatchError(f"{self.label}: map moved the base configuration")
        return out

    def jacobian_at(self, z: PhasePoint) -> np.ndarray:
        """2n x 2n Jacobian of the map as R^2n -> R^2n."""
        if self.jacobian is not None:
            J = np.asarray(self.jacobian(z), dtype=float)
            if J.shape != (2 * z.n, 2 * z.n):
                raise ValueError("analytic Jacobian has wrong shape")
            return J
        v0 = z.as_vector()
        h = 1e-6 * max(1.0, float(np.linalg.norm(v0)))
        J = np.empty((2 * z.n, 2 * z.n))
        for i in range(2 * z.n):
            vp = v0.copy()
            vm = v0.copy()
            vp[i] += h
            vm[i] -= h
            J[:, i] = (self(PhasePoint.from_vector(vp)).as_vector()
                       - self(PhasePoint.from_vector(vm)).as_vector()) / (2.0 * h)
        return J


def vlift_of_map(
    F: FiberMap,
    X: Callable[[PhasePoint], TangentSample],
    alpha: PhasePoint,
    mode: str = "pushforward",
) -> TangentSample:
    """Vertical lift of a vector field under a fiber-preserving map.

    ``pushforward`` (default): push X(alpha) forward by TF, keep the
    vertical part, transport it back to alpha along the fiber.  The
    alternative reading ``evaluate-at-image`` instead pushes forward
    X(F(alpha)).
    """
    if mode == "pushforward":
        v = X(alpha)
        J = F.jacobian_at(alpha)
    elif mode == "evaluate-at-image":
        image = F(alpha)
        v = X(image)
        J = F.jacobian_at(image)
    else:
        raise ValueError(f"unknown vlift mode {mode!r}")
    pushed = J @ v.as_vector()
    n = alpha.n
    return TangentSample(alpha, dq=np.zeros(n), dp=pushed[n:])


def momentum_map(chart: PhaseSpaceChart, z: PhasePoint) -> CoalgebraVector:
    """Momentum map of the chart's registered lifted action.

    Computed through the basis pairing <J(z), xi> = p . xi_Q(q), which
    closes to p for translations and q x p for rotations.
    """
    if chart.group_action is None:
        raise ValueError(f"chart {chart.label!r} has no registered group action")
    if chart.group_action == "translation":
        algebra = abelian(chart.config_dim)
        generators = [np.asarray(e, dtype=float) for e in np.eye(chart.config_dim)]
        values = [float(np.dot(z.p, xi_q)) for xi_q in generators]
        return CoalgebraVector(algebra, np.array(values))
    # so3: xi_Q(q) = xi x q
    algebra = so3()
    values = [float(np.dot(z.p, np.cross(xi, z.q))) for xi in np.eye(3)]
    return CoalgebraVector(algebra, np.array(values))
