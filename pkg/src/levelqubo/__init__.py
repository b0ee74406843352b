"""levelqubo: penalty synthesis and QUBO compilation for binary linear programs."""

from .polynomial import Polynomial, multilinear_reduce
from .qubo import QuboModel, to_qubo

__all__ = ["Polynomial", "multilinear_reduce", "QuboModel", "to_qubo"]
__version__ = "0.1.0"
