"""Numerical checks of the geometric Hamilton-Jacobi theorem.

Two faces of the same statement: a generating function W solves the
Hamilton-Jacobi equation H(q, dW(q)) = const iff base curves driven
through dW lift to integral curves of the Hamiltonian field.  Both are
rendered as residual checks and compared case by case.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .liealg import numeric_gradient
from .phasespace import PhasePoint, canonical_xh
from .rch import rk4_step

__all__ = [
    "GeneratingFunction",
    "HJReport",
    "hj_residual",
    "hj_curve_check",
    "hj_equivalence_suite",
    "load_case_json",
    "run_case",
]


@dataclass(frozen=True)
class GeneratingFunction:
    """Scalar function on configuration space with its gradient policy."""

    W: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray] | None = None
    label: str = "W"

    def __call__(self, q: np.ndarray) -> float:
        return float(self.W(np.asarray(q, dtype=float)))

    def dW(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(q), dtype=float)
        return numeric_gradient(self.W, q)


@dataclass(frozen=True)
class HJReport:
    check: str
    residual: float
    tolerance: float
    energy: float | None = None
    truncated_at: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.residual < self.tolerance

    def to_dict(self) -> dict:
        d = {
            "check": self.check,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }
        if self.energy is not None:
            d["energy"] = self.energy
        if self.truncated_at is not None:
            d["truncated_at"] = self.truncated_at
        d.update(self.extra)
        return d


def hj_residual(
    H: Callable[[PhasePoint], float],
    W: GeneratingFunction,
    qs: Sequence[np.ndarray],
    tolerance: float = 1e-8,
) -> HJReport:
    """Spread of H(q, dW(q)) around its mean over the sampled configurations."""
    values = np.array([H(PhasePoint(np.atleast_1d(q), W.dW(np.atleast_1d(q)))) for q in qs])
    energy = float(np.mean(values))
    spread = float(np.max(np.abs(values - energy))) if values.size else 0.0
    return HJReport(check="hj-residual", residual=spread, tolerance=tolerance, energy=energy)


def hj_curve_check(
    H: Callable[[PhasePoint], float],
    W: GeneratingFunction,
    q0: np.ndarray,
    t_end: float,
    dt: float = 1e-4,
    domain: tuple[np.ndarray, np.ndarray] | None = None,
    tolerance: float = 1e-5,
    grad_H: Callable[[PhasePoint], tuple[np.ndarray, np.ndarray]] | None = None,
) -> HJReport:
    """Integral-curve defect of the lifted base curve.

    The base curve follows dq/dt = dH/dp(q, dW(q)) under RK4.  The defect
    compares the central-difference time derivative of the lifted curve
    t -> (q(t), dW(q(t))) against the Hamiltonian field along it.
    """
    q0 = np.atleast_1d(np.asarray(q0, dtype=float))

    def in_domain(q: np.ndarray) -> bool:
        if domain is None:
            return True
        lo, hi = domain
        return bool(np.all(q >= lo) and np.all(q <= hi))

    if not in_domain(q0):
        raise ValueError("q0 outside the declared working domain")

    def base_rhs(q: np.ndarray) -> np.ndarray:
        z = PhasePoint(q, W.dW(q))
        return canonical_xh(H, z, grad=grad_H).dq

    n_steps = int(round(t_end / dt))
    qs = [q0]
    truncated_at = None
    for step in range(n_steps):
        q_next = rk4_step(base_rhs, qs[-1], dt)
        if not in_domain(q_next):
            truncated_at = (step + 1) * dt
            break
        qs.append(q_next)
    qs = np.asarray(qs)
    if qs.shape[0] < 3:
        raise ValueError("trajectory left the domain immediately; nothing to check")

    lifted = np.array([PhasePoint(q, W.dW(q)).as_vector() for q in qs])
    # central differences on the interior nodes vs the Hamiltonian field
    deriv = (lifted[2:] - lifted[:-2]) / (2.0 * dt)
    defects = []
    for i in range(1, qs.shape[0] - 1):
        z = PhasePoint.from_vector(lifted[i])
        xh = canonical_xh(H, z, grad=grad_H).as_vector()
        defects.append(float(np.max(np.abs(deriv[i - 1] - xh))))
    return HJReport(
        check="hj-curve",
        residual=float(np.max(defects)),
        tolerance=tolerance,
        truncated_at=truncated_at,
    )


def hj_equivalence_suite(cases: Sequence[dict], tolerance_residual: float = 1e-8,
                         tolerance_curve: float = 1e-5) -> dict:
    """Run both checks on every case and demand their verdicts agree.

    Each case supplies ``H``, ``W``, sample configurations ``qs``, a curve
    start ``q0`` with ``t_end``/``dt``, an optional ``domain`` box, and an
    optional ``grad_H``.
    """
    rows = []
    agree = True
    for case in cases:
        res = hj_residual(case["H"], case["W"], case["qs"], tolerance=tolerance_residual)
        curve = hj_curve_check(
            case["H"], case["W"], case["q0"], case.get("t_end", 0.5),
            dt=case.get("dt", 1e-4), domain=case.get("domain"),
            tolerance=tolerance_curve, grad_H=case.get("grad_H"),
        )
        row = {
            "label": case.get("label", "case"),
            "residual": res.to_dict(),
            "curve": curve.to_dict(),
            "agree": res.passed == curve.passed,
        }
        if "expected" in case:
            row["expected"] = case["expected"]
            row["as_expected"] = (res.passed == (case["expected"] == "solution"))
            agree = agree and row["as_expected"]
        agree = agree and row["agree"]
        rows.append(row)
    return {"checks": rows, "pass": agree}


_HAMILTONIANS = {
    "free-particle": lambda params: (lambda z: 0.5 * float(np.dot(z.p, z.p))),
    "harmonic-oscillator": lambda params: (
        lambda z: 0.5 * float(np.dot(z.p, z.p) + np.dot(z.q, z.q))
    ),
}

_GENERATORS = {
    "linear": lambda params: GeneratingFunction(
        W=lambda q: float(np.dot(np.asarray(params.get("c", [1.0]), dtype=float), q)),
        grad=lambda q: np.asarray(params.get("c", [1.0]), dtype=float),
        label="linear",
    ),
    "oscillator-branch": lambda params: GeneratingFunction(
        # W'(q) = sqrt(1 - q^2): the |q| < 1 branch of the unit-energy solution
        W=lambda q: 0.5 * float(q[0] * np.sqrt(1.0 - q[0] ** 2) + np.arcsin(q[0])),
        grad=lambda q: np.array([np.sqrt(1.0 - q[0] ** 2)]),
        label="oscillator-branch",
    ),
    "quadratic": lambda params: GeneratingFunction(
        W=lambda q: float(params.get("a", 1.0)) * float(np.dot(q, q)),
        grad=lambda q: 2.0 * float(params.get("a", 1.0)) * np.asarray(q, dtype=float),
        label="quadratic",
    ),
}


def load_case_json(source) -> dict:
    """Build a runnable case from the JSON case-file schema.

    Schema: ``{"hamiltonian": {"name", params...}, "W": {"name", params...},
    "domain": [[lo...], [hi...]], "expected": "solution" | "non-solution",
    "qs": [...], "q0": [...], "t_end", "dt"}``.
    """
    if isinstance(source, (str, bytes)):
        doc = json.loads(source)
    else:
        doc = json.load(source)
    hspec = dict(doc["hamiltonian"])
    hname = hspec.pop("name")
    if hname not in _HAMILTONIANS:
        raise ValueError(f"unknown Hamiltonian {hname!r}; known: {sorted(_HAMILTONIANS)}")
    wspec = dict(doc["W"])
    wname = wspec.pop("name")
    if wname not in _GENERATORS:
        raise ValueError(f"unknown generating function {wname!r}; known: {sorted(_GENERATORS)}")
    case = {
        "label": doc.get("label", f"{hname}/{wname}"),
        "H": _HAMILTONIANS[hname](hspec),
        "W": _GENERATORS[wname](wspec),
        "qs": [np.asarray(q, dtype=float) for q in doc["qs"]],
        "q0": np.asarray(doc["q0"], dtype=float),
        "t_end": float(doc.get("t_end", 0.5)),
        "dt": float(doc.get("dt", 1e-4)),
    }
    if "domain" in doc:
        lo, hi = doc["domain"]
        case["domain"] = (np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
    if "expected" in doc:
        case["expected"] = doc["expected"]
    return case


def run_case(case: dict) -> dict:
    """Run both checks on one case; returns the suite row for it."""
    return hj_equivalence_suite([case])
