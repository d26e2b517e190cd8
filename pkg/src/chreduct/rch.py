"""Controlled Hamiltonian systems on trivialized charts.

The closed-loop dynamical vector field is the sum of the canonical
Hamiltonian field, the vertical lift of the force map, and the vertical
lift of the control.  Force and control only ever touch the momentum
components, so the dq part of the composite field equals that of the
Hamiltonian field alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .phasespace import (
    FiberMap,
    PhasePoint,
    PhaseSpaceChart,
    TangentSample,
    canonical_xh,
    momentum_map,
    vlift_of_map,
)

__all__ = [
    "ZERO_FORCE",
    "ControlSubset",
    "ControlLaw",
    "RCHSystem",
    "Trajectory",
    "dynamical_vf",
    "integrate",
    "rk4_step",
]

CONTAINMENT_TOL = 1e-10


class _ZeroForce:
    """Sentinel force whose vertical-lift contribution is identically zero."""

    def __repr__(self):
        return "ZERO_FORCE"


ZERO_FORCE = _ZeroForce()


@dataclass(frozen=True)
class ControlSubset:
    """Linear vertical distribution spanned by fiber direction vectors."""

    directions: np.ndarray  # shape (n, k); columns span the allowed fiber subspace
    label: str = "W"

    def __post_init__(self):
        d = np.atleast_2d(np.asarray(self.directions, dtype=float))
        if d.size and np.linalg.matrix_rank(d) < d.shape[1]:
            raise ValueError("control directions are linearly dependent")
        object.__setattr__(self, "directions", d)

    @staticmethod
    def full(n: int, label: str = "W") -> "ControlSubset":
        return ControlSubset(np.eye(n), label)

    @staticmethod
    def empty(n: int, label: str = "W") -> "ControlSubset":
        return ControlSubset(np.zeros((n, 0)), label)

    def distance(self, v: np.ndarray) -> float:
        """Distance of a fiber vector from span(directions)."""
        v = np.asarray(v, dtype=float)
        if self.directions.shape[1] == 0:
            return float(np.linalg.norm(v))
        coeffs, *_ = np.linalg.lstsq(self.directions, v, rcond=None)
        return float(np.linalg.norm(v - self.directions @ coeffs))

    def contains(self, v: np.ndarray, tol: float = CONTAINMENT_TOL) -> bool:
        return self.distance(v) <= tol * max(1.0, float(np.linalg.norm(v)))


@dataclass(frozen=True)
class ControlLaw:
    """Feedback law valued in a control subset.

    Either a plain vertical increment field (``vertical_field``) or a
    fiber-preserving map treated by the literal vertical-lift rule
    (``fiber_map``).  Outputs are checked for containment in W.
    """

    subset: ControlSubset
    vertical_field: Callable[[PhasePoint], np.ndarray] | None = None
    fiber_map: FiberMap | None = None
    label: str = "u"

    @staticmethod
    def zero(subset: ControlSubset) -> "ControlLaw":
        return ControlLaw(subset, vertical_field=lambda z: np.zeros(z.n), label="u=0")

    def contribution(self, xh: Callable[[PhasePoint], TangentSample], z: PhasePoint) -> TangentSample:
        """Vertical tangent contribution vlift(u)X_H at z."""
        if self.fiber_map is not None:
            out = vlift_of_map(self.fiber_map, xh, z)
        elif self.vertical_field is not None:
            dp = np.asarray(self.vertical_field(z), dtype=float)
            out = TangentSample(z, dq=np.zeros(z.n), dp=dp)
        else:
            raise ValueError("control law has neither a vertical field nor a fiber map")
        if not self.subset.contains(out.dp):
            raise ValueError(
                f"control law {self.label!r} left its subset "
                f"(distance {self.subset.distance(out.dp):.3e})"
            )
        return out


@dataclass(frozen=True)
class RCHSystem:
    """Hamiltonian + force map + control subset on a trivialized chart."""

    chart: PhaseSpaceChart
    H: Callable[[PhasePoint], float]
    F: FiberMap | _ZeroForce = ZERO_FORCE
    W: ControlSubset | None = None
    grad_H: Callable[[PhasePoint], tuple[np.ndarray, np.ndarray]] | None = None
    label: str = "rch"

    def __post_init__(self):
        if self.W is None:
            object.__setattr__(self, "W", ControlSubset.full(self.chart.config_dim))

    def xh(self, z: PhasePoint) -> TangentSample:
        return canonical_xh(self.H, z, grad=self.grad_H)

    def open_loop_vf(self, z: PhasePoint) -> TangentSample:
        """X_H + vlift(F), no control."""
        out = self.xh(z)
        if self.F is not ZERO_FORCE:
            fv = vlift_of_map(self.F, self.xh, z)
            out = TangentSample(z, dq=out.dq, dp=out.dp + fv.dp)
        return out


def dynamical_vf(sys: RCHSystem, u: ControlLaw | None, z: PhasePoint) -> TangentSample:
    """Composite closed-loop field X_H + vlift(F)X_H + vlift(u)X_H."""
    out = sys.open_loop_vf(z)
    if u is not None:
        uc = u.contribution(sys.xh, z)
        out = TangentSample(z, dq=out.dq, dp=out.dp + uc.dp)
    return out


@dataclass(frozen=True)
class Trajectory:
    """Time-stamped states with per-step diagnostics columns."""

    times: np.ndarray
    states: np.ndarray  # shape (n_times, state_dim)
    state_labels: tuple[str, ...]
    diagnostics: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.states, dtype=float)
        if t.ndim != 1 or s.shape[0] != t.size:
            raise ValueError("times and states must have matching leading length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if len(self.state_labels) != s.shape[1]:
            raise ValueError("state labels do not match state dimension")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", s)

    def to_csv(self, path):
        header = ["t", *self.state_labels, *self.diagnostics.keys()]
        cols = [self.times] + [self.states[:, i] for i in range(self.states.shape[1])]
        cols += [np.asarray(v, dtype=float) for v in self.diagnostics.values()]
        with open(path, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in zip(*cols):
                fh.write(",".join(format(x, ".17g") for x in row) + "\n")


def rk4_step(f: Callable[[np.ndarray], np.ndarray], y: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _state_labels(n: int) -> tuple[str, ...]:
    return tuple(f"q{i}" for i in range(n)) + tuple(f"p{i}" for i in range(n))


def integrate(
    sys: RCHSystem,
    u: ControlLaw | None,
    z0: PhasePoint,
    t_end: float,
    dt: float,
) -> Trajectory:
    """Fixed-step RK4 flow of the closed-loop field with diagnostics."""
    if dt <= 0 or t_end <= 0:
        raise ValueError("dt and t_end must be positive")
    n_steps = int(round(t_end / dt))

    def rhs(y: np.ndarray) -> np.ndarray:
        return dynamical_vf(sys, u, PhasePoint.from_vector(y)).as_vector()

    has_j = sys.chart.group_action is not None
    times = [0.0]
    states = [z0.as_vector()]
    y = z0.as_vector()
    for step in range(n_steps):
        try:
            y = rk4_step(rhs, y, dt)
        except ValueError as exc:
            raise FloatingPointError(f"non-finite state at step {step + 1}") from exc
        if not np.all(np.isfinite(y)):
            raise FloatingPointError(f"non-finite state at step {step + 1}")
        times.append((step + 1) * dt)
        states.append(y)

    states = np.asarray(states)
    diagnostics: dict[str, np.ndarray] = {
        "energy": np.array([sys.H(PhasePoint.from_vector(s)) for s in states])
    }
    if has_j:
        jvals = np.array(
            [momentum_map(sys.chart, PhasePoint.from_vector(s)).coords for s in states]
        )
        for i in range(jvals.shape[1]):
            diagnostics[f"J{i}"] = jvals[:, i]
    return Trajectory(
        times=np.asarray(times),
        states=states,
        state_labels=_state_labels(z0.n),
        diagnostics=diagnostics,
    )
