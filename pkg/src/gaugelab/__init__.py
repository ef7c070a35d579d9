"""SU(2) lattice gauge fields: Coulomb gauge fixing, integrability-radius norms,
regularity scales, frame degrees and annular/bubble decompositions."""

from .kernels import BACKEND
from .lattice import Ball, Lattice, ScalarField

__version__ = "0.1.0"
__all__ = ["BACKEND", "Ball", "Lattice", "ScalarField", "__version__"]
