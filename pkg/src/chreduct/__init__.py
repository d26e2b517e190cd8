"""Controlled Hamiltonian systems with symmetry: composite dynamics,
momentum-map reduction, equivalence checking, and Hamilton-Jacobi
verification on rigid-body and heavy-top examples."""

__version__ = "0.1.0"

from . import equivalence, hamjac, liealg, phasespace, rch, reduction, systems

__all__ = [
    "__version__",
    "equivalence",
    "hamjac",
    "liealg",
    "phasespace",
    "rch",
    "reduction",
    "systems",
]
