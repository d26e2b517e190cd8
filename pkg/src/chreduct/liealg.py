"""Finite-dimensional Lie algebras given by structure constants.

Everything downstream (coadjoint dynamics, orbit forms, reduced vector
fields) is driven by the rank-3 structure-constant array ``c[i, j, k]``
with ``[e_i, e_j] = sum_k c[i, j, k] e_k``.  The dual pairing is the
coordinate dot product in the fixed basis, so elements of the algebra and
its dual are both plain coordinate vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping

import json

import numpy as np

__all__ = [
    "AlgebraMismatchError",
    "LieAlgebraSpec",
    "AlgebraVector",
    "CoalgebraVector",
    "bracket",
    "ad_star",
    "kks_form",
    "lie_poisson_vf",
    "numeric_gradient",
    "so3",
    "se3",
    "abelian",
    "product",
    "load_algebra_json",
]

JACOBI_TOL = 1e-12
CASIMIR_TOL = 1e-10


class AlgebraMismatchError(ValueError):
    """Raised when an operation mixes vectors from different algebras."""


def numeric_gradient(f: Callable[[np.ndarray], float], x: np.ndarray) -> np.ndarray:
    """Central-difference gradient with step scaled to |x|."""
    x = np.asarray(x, dtype=float)
    h = 1e-6 * max(1.0, float(np.linalg.norm(x)))
    g = np.empty_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2.0 * h)
    return g


@dataclass(frozen=True)
class LieAlgebraSpec:
    """A Lie algebra in a fixed basis.

    ``casimirs`` maps names to scalar functions on the dual (coordinates
    in, real out).  Antisymmetry and the Jacobi identity are validated at
    construction; Casimir invariance is validated numerically.
    """

    name: str
    dim: int
    structure_constants: np.ndarray
    casimirs: Mapping[str, Callable[[np.ndarray], float]] = field(default_factory=dict)

    def __post_init__(self):
        c = np.asarray(self.structure_constants, dtype=float)
        if c.shape != (self.dim, self.dim, self.dim):
            raise ValueError(
                f"structure constants must have shape {(self.dim,) * 3}, got {c.shape}"
            )
        object.__setattr__(self, "structure_constants", c)
        if np.max(np.abs(c + np.swapaxes(c, 0, 1))) > JACOBI_TOL:
            raise ValueError("structure constants are not antisymmetric in (i, j)")
        residual = (
            np.einsum("ijm,mkn->ijkn", c, c)
            + np.einsum("jkm,min->ijkn", c, c)
            + np.einsum("kim,mjn->ijkn", c, c)
        )
        if np.max(np.abs(residual)) > JACOBI_TOL:
            raise ValueError(f"Jacobi identity violated for algebra {self.name!r}")
        self._check_casimirs()

    def _check_casimirs(self, n_samples: int = 20, seed: int = 0):
        rng = np.random.default_rng(seed)
        for cname, cfun in self.casimirs.items():
            for _ in range(n_samples):
                mu = rng.standard_normal(self.dim)
                grad = numeric_gradient(cfun, mu)
                flow = _ad_star_coords(self.structure_constants, grad, mu)
                if np.linalg.norm(flow) > CASIMIR_TOL * max(1.0, np.linalg.norm(mu) ** 3):
                    raise ValueError(
                        f"{cname!r} is not a Casimir of algebra {self.name!r}"
                    )

    def vector(self, coords) -> "AlgebraVector":
        return AlgebraVector(self, np.asarray(coords, dtype=float))

    def covector(self, coords) -> "CoalgebraVector":
        return CoalgebraVector(self, np.asarray(coords, dtype=float))

    def basis(self) -> list["AlgebraVector"]:
        return [self.vector(row) for row in np.eye(self.dim)]

    def casimir_values(self, mu: np.ndarray) -> dict[str, float]:
        return {name: float(f(np.asarray(mu, dtype=float))) for name, f in self.casimirs.items()}


@dataclass(frozen=True)
class AlgebraVector:
    """Element of the algebra in basis coordinates."""

    algebra: LieAlgebraSpec
    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.shape != (self.algebra.dim,):
            raise ValueError(
                f"coordinate length {coords.shape} does not match dim {self.algebra.dim}"
            )
        object.__setattr__(self, "coords", coords)


@dataclass(frozen=True)
class CoalgebraVector:
    """Element of the dual in dual-basis coordinates."""

    algebra: LieAlgebraSpec
    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.shape != (self.algebra.dim,):
            raise ValueError(
                f"coordinate length {coords.shape} does not match dim {self.algebra.dim}"
            )
        object.__setattr__(self, "coords", coords)


def _same_algebra(*vecs) -> LieAlgebraSpec:
    alg = vecs[0].algebra
    for v in vecs[1:]:
        if v.algebra is not alg and (
            v.algebra.name != alg.name or v.algebra.dim != alg.dim
        ):
            raise AlgebraMismatchError(
                f"mixed algebras {alg.name!r} (dim {alg.dim}) and "
                f"{v.algebra.name!r} (dim {v.algebra.dim})"
            )
    return alg


def bracket(xi: AlgebraVector, eta: AlgebraVector) -> AlgebraVector:
    """Lie bracket [xi, eta] through the structure constants."""
    alg = _same_algebra(xi, eta)
    out = np.einsum("ijk,i,j->k", alg.structure_constants, xi.coords, eta.coords)
    return AlgebraVector(alg, out)


def _ad_star_coords(c: np.ndarray, xi: np.ndarray, mu: np.ndarray) -> np.ndarray:
    # <ad*_xi mu, eta> = <mu, [xi, eta]>  =>  (ad*_xi mu)_j = c[i, j, k] xi_i mu_k
    return np.einsum("ijk,i,k->j", c, xi, mu)


def ad_star(xi: AlgebraVector, mu: CoalgebraVector) -> CoalgebraVector:
    """Coadjoint operator: <ad_star(xi, mu), eta> = <mu, [xi, eta]>."""
    alg = _same_algebra(xi, mu)
    return CoalgebraVector(alg, _ad_star_coords(alg.structure_constants, xi.coords, mu.coords))


def kks_form(nu: CoalgebraVector, xi: AlgebraVector, eta: AlgebraVector) -> float:
    """Orbit two-form value <nu, [xi, eta]> at nu."""
    alg = _same_algebra(nu, xi, eta)
    return float(np.dot(nu.coords, bracket(xi, eta).coords))


def lie_poisson_vf(
    h: Callable[[np.ndarray], float],
    mu: CoalgebraVector,
    grad_h: Callable[[np.ndarray], np.ndarray] | None = None,
) -> CoalgebraVector:
    """Coadjoint-orbit dynamics mu_dot = ad_star(grad h(mu), mu).

    The sign is fixed so that the free rigid body on so(3)* flows by
    ``Pi_dot = Pi x Omega`` (body/left convention).
    """
    alg = mu.algebra
    g = np.asarray(grad_h(mu.coords) if grad_h is not None else numeric_gradient(h, mu.coords),
                   dtype=float)
    if g.shape != (alg.dim,):
        raise ValueError(f"gradient shape {g.shape} does not match dim {alg.dim}")
    return CoalgebraVector(alg, _ad_star_coords(alg.structure_constants, g, mu.coords))


def _eps3() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for i, j, k in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
        eps[i, j, k] = 1.0
        eps[j, i, k] = -1.0
    return eps


@lru_cache(maxsize=None)
def so3() -> LieAlgebraSpec:
    """Rotation algebra; bracket is the cross product."""
    return LieAlgebraSpec(
        name="so3",
        dim=3,
        structure_constants=_eps3(),
        casimirs={"spin_sq": lambda mu: float(np.dot(mu, mu))},
    )


@lru_cache(maxsize=None)
def se3() -> LieAlgebraSpec:
    """Euclidean algebra so(3) |x R^3; coordinates ordered (omega, v)."""
    eps = _eps3()
    c = np.zeros((6, 6, 6))
    c[:3, :3, :3] = eps
    # [omega, v] block: [e_i, e_{3+b}] = eps[i, b, k] e_{3+k}
    c[:3, 3:, 3:] = eps
    c[3:, :3, 3:] = -np.swapaxes(eps, 0, 1)
    return LieAlgebraSpec(
        name="se3",
        dim=6,
        structure_constants=c,
        casimirs={
            "gamma_sq": lambda mu: float(np.dot(mu[3:], mu[3:])),
            "pi_dot_gamma": lambda mu: float(np.dot(mu[:3], mu[3:])),
        },
    )


@lru_cache(maxsize=None)
def abelian(n: int, name: str | None = None) -> LieAlgebraSpec:
    """R^n with zero bracket; every coordinate is a Casimir."""
    if n < 1:
        raise ValueError("abelian algebra needs n >= 1")

    def coord(i):
        return lambda mu: float(mu[i])

    return LieAlgebraSpec(
        name=name or f"r{n}",
        dim=n,
        structure_constants=np.zeros((n, n, n)),
        casimirs={f"x{i}": coord(i) for i in range(n)},
    )


def product(a: LieAlgebraSpec, b: LieAlgebraSpec, name: str | None = None) -> LieAlgebraSpec:
    """Direct sum a (+) b with block-diagonal structure constants."""
    n, m = a.dim, b.dim
    c = np.zeros((n + m, n + m, n + m))
    c[:n, :n, :n] = a.structure_constants
    c[n:, n:, n:] = b.structure_constants

    def lift(f, sl):
        return lambda mu: f(mu[sl])

    casimirs = {}
    for cname, f in a.casimirs.items():
        casimirs[f"{a.name}.{cname}"] = lift(f, slice(0, n))
    for cname, f in b.casimirs.items():
        casimirs[f"{b.name}.{cname}"] = lift(f, slice(n, n + m))
    return LieAlgebraSpec(
        name=name or f"{a.name}+{b.name}",
        dim=n + m,
        structure_constants=c,
        casimirs=casimirs,
    )


_BUILTIN_CASIMIRS = {
    "spin_sq": lambda mu: float(np.dot(mu[:3], mu[:3])),
    "gamma_sq": lambda mu: float(np.dot(mu[3:6], mu[3:6])),
    "pi_dot_gamma": lambda mu: float(np.dot(mu[:3], mu[3:6])),
}


def load_algebra_json(source) -> LieAlgebraSpec:
    """Build an algebra from a JSON document.

    Schema: ``{"name", "dim", "structure_constants": [[i, j, k, value], ...],
    "casimirs": [builtin names]}`` with sparse triples; the antisymmetric
    partner of each triple may be omitted.
    """
    if isinstance(source, (str, bytes)):
        doc = json.loads(source)
    else:
        doc = json.load(source)
    dim = int(doc["dim"])
    c = np.zeros((dim, dim, dim))
    for i, j, k, value in doc.get("structure_constants", []):
        c[i, j, k] = value
        c[j, i, k] = -value
    casimirs = {}
    for cname in doc.get("casimirs", []):
        if cname not in _BUILTIN_CASIMIRS:
            raise ValueError(f"unknown built-in Casimir {cname!r}")
        casimirs[cname] = _BUILTIN_CASIMIRS[cname]
    return LieAlgebraSpec(
        name=str(doc["name"]), dim=dim, structure_constants=c, casimirs=casimirs
    )
