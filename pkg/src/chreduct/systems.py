"""Built-in reduced systems: rigid body and heavy top, with and without
internal rotors.

Rotor convention: locked inertia tensor I_lock = I + sum_a J_a axis_a axis_a^T
with reduced energy (Pi - B l) . I_lock^-1 (Pi - B l) / 2 + l . J^-1 l / 2,
where B stacks the rotor axes.  Alternate rotor models can be added beside
these constructors without touching the generic machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .liealg import se3, so3
from .reduction import ReducedSystem

__all__ = [
    "RigidBodyParams",
    "HeavyTopParams",
    "RotorParams",
    "free_rigid_body",
    "heavy_top",
    "rigid_body_with_rotors",
    "heavy_top_with_rotors",
    "SYSTEM_REGISTRY",
    "build_system",
]


@dataclass(frozen=True)
class RigidBodyParams:
    """Principal moments of inertia (kg m^2).

    Physical realizability (triangle inequalities among the moments) is not
    enforced; any positive diagonal inertia is accepted.
    """

    inertia: np.ndarray

    def __post_init__(self):
        I = np.asarray(self.inertia, dtype=float)
        if I.shape != (3,) or np.any(I <= 0):
            raise ValueError("inertia must be a positive 3-vector")
        object.__setattr__(self, "inertia", I)


@dataclass(frozen=True)
class HeavyTopParams:
    """Inertia, gravity torque coefficient mgl (N m), body center-of-mass axis."""

    inertia: np.ndarray
    mgl: float
    chi: np.ndarray

    def __post_init__(self):
        I = np.asarray(self.inertia, dtype=float)
        chi = np.asarray(self.chi, dtype=float)
        if I.shape != (3,) or np.any(I <= 0):
            raise ValueError("inertia must be a positive 3-vector")
        if self.mgl < 0:
            raise ValueError("mgl must be nonnegative")
        if chi.shape != (3,) or abs(np.linalg.norm(chi) - 1.0) > 1e-12:
            raise ValueError("chi must be a unit 3-vector")
        object.__setattr__(self, "inertia", I)
        object.__setattr__(self, "chi", chi)


@dataclass(frozen=True)
class RotorParams:
    """Rotor inertias (k <= 3) and their orthonormal body axes."""

    inertias: np.ndarray
    axes: np.ndarray | None = None  # shape (3, k); defaults to principal axes

    def __post_init__(self):
        J = np.atleast_1d(np.asarray(self.inertias, dtype=float))
        if J.ndim != 1 or J.size < 1 or J.size > 3 or np.any(J <= 0):
            raise ValueError("rotor inertias must be 1-3 positive values")
        axes = self.axes
        if axes is None:
            axes = np.eye(3)[:, : J.size]
        axes = np.asarray(axes, dtype=float)
        if axes.shape != (3, J.size):
            raise ValueError(f"axes must have shape (3, {J.size})")
        if np.max(np.abs(axes.T @ axes - np.eye(J.size))) > 1e-10:
            raise ValueError("rotor axes must be orthonormal")
        object.__setattr__(self, "inertias", J)
        object.__setattr__(self, "axes", axes)

    @property
    def k(self) -> int:
        return self.inertias.size

    def locked_inertia(self, body_inertia: np.ndarray) -> np.ndarray:
        I_lock = np.diag(body_inertia) + self.axes @ np.diag(self.inertias) @ self.axes.T
        if np.min(np.linalg.eigvalsh(I_lock)) <= 0:
            raise ValueError("locked inertia tensor is not positive definite")
        return I_lock


def free_rigid_body(params: RigidBodyParams) -> ReducedSystem:
    """Free rigid body on the rotation-algebra dual: Pi_dot = Pi x Omega."""
    I = params.inertia

    def h(y: np.ndarray) -> float:
        return 0.5 * float(np.dot(y, y / I))

    def grad_h(y: np.ndarray) -> np.ndarray:
        return y / I

    return ReducedSystem(algebra=so3(), rotor_dim=0, h=h, grad_h=grad_h,
                         label="rigid-body")


def heavy_top(params: HeavyTopParams) -> ReducedSystem:
    """Heavy top on the dual pair (Pi, Gamma) of the Euclidean algebra."""
    I, mgl, chi = params.inertia, params.mgl, params.chi

    def h(y: np.ndarray) -> float:
        return 0.5 * float(np.dot(y[:3], y[:3] / I)) + mgl * float(np.dot(y[3:], chi))

    def grad_h(y: np.ndarray) -> np.ndarray:
        return np.concatenate([y[:3] / I, mgl * chi])

    return ReducedSystem(algebra=se3(), rotor_dim=0, h=h, grad_h=grad_h,
                         label="heavy-top")


def rigid_body_with_rotors(params: RigidBodyParams, rotors: RotorParams) -> ReducedSystem:
    """Carrier body plus rotors under the locked-inertia convention.

    State (Pi, theta, l); the control subset is the rotor momentum block.
    """
    k = rotors.k
    I_lock_inv = np.linalg.inv(rotors.locked_inertia(params.inertia))
    B = rotors.axes
    J_inv = 1.0 / rotors.inertias

    def h(y: np.ndarray) -> float:
        pi, l = y[:3], y[3 + k:]
        body = pi - B @ l
        return 0.5 * float(body @ I_lock_inv @ body) + 0.5 * float(np.dot(l, J_inv * l))

    def grad_h(y: np.ndarray) -> np.ndarray:
        pi, l = y[:3], y[3 + k:]
        omega = I_lock_inv @ (pi - B @ l)
        return np.concatenate([omega, np.zeros(k), -B.T @ omega + J_inv * l])

    return ReducedSystem(algebra=so3(), rotor_dim=k, h=h, grad_h=grad_h,
                         label="rigid-body-rotors")


def heavy_top_with_rotors(params: HeavyTopParams, rotors: RotorParams) -> ReducedSystem:
    """Heavy top carrying internal rotors; gravity enters through h only."""
    k = rotors.k
    I_lock_inv = np.linalg.inv(rotors.locked_inertia(params.inertia))
    B = rotors.axes
    J_inv = 1.0 / rotors.inertias
    mgl, chi = params.mgl, params.chi

    def h(y: np.ndarray) -> float:
        pi, gamma, l = y[:3], y[3:6], y[6 + k:]
        body = pi - B @ l
        return (0.5 * float(body @ I_lock_inv @ body)
                + mgl * float(np.dot(gamma, chi))
                + 0.5 * float(np.dot(l, J_inv * l)))

    def grad_h(y: np.ndarray) -> np.ndarray:
        pi, l = y[:3], y[6 + k:]
        omega = I_lock_inv @ (pi - B @ l)
        return np.concatenate([omega, mgl * chi, np.zeros(k), -B.T @ omega + J_inv * l])

    return ReducedSystem(algebra=se3(), rotor_dim=k, h=h, grad_h=grad_h,
                         label="heavy-top-rotors")


def _build_rigid_body(params: dict) -> ReducedSystem:
    return free_rigid_body(RigidBodyParams(np.asarray(params["I"], dtype=float)))


def _build_heavy_top(params: dict) -> ReducedSystem:
    return heavy_top(HeavyTopParams(
        np.asarray(params["I"], dtype=float),
        float(params.get("mgl", 1.0)),
        np.asarray(params.get("chi", [0.0, 0.0, 1.0]), dtype=float),
    ))


def _rotors_from(params: dict) -> RotorParams:
    axes = params.get("axes")
    return RotorParams(
        np.asarray(params.get("J", [1.0]), dtype=float),
        None if axes is None else np.asarray(axes, dtype=float),
    )


def _build_rigid_body_rotors(params: dict) -> ReducedSystem:
    return rigid_body_with_rotors(
        RigidBodyParams(np.asarray(params["I"], dtype=float)), _rotors_from(params)
    )


def _build_heavy_top_rotors(params: dict) -> ReducedSystem:
    return heavy_top_with_rotors(
        HeavyTopParams(
            np.asarray(params["I"], dtype=float),
            float(params.get("mgl", 1.0)),
            np.asarray(params.get("chi", [0.0, 0.0, 1.0]), dtype=float),
        ),
        _rotors_from(params),
    )


SYSTEM_REGISTRY: dict[str, Callable[[dict], ReducedSystem]] = {
    "rigid-body": _build_rigid_body,
    "heavy-top": _build_heavy_top,
    "rigid-body-rotors": _build_rigid_body_rotors,
    "heavy-top-rotors": _build_heavy_top_rotors,
}


def build_system(name: str, params: dict) -> ReducedSystem:
    """Instantiate a registered system from a parameter dictionary."""
    if name not in SYSTEM_REGISTRY:
        raise KeyError(
            f"unknown system {name!r}; registry: {sorted(SYSTEM_REGISTRY)}"
        )
    return SYSTEM_REGISTRY[name](params)
