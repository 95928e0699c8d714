"""Exact wall-crossing structures on graded Lie algebras."""
from .errors import GenericityError, InvariantError
from .group import (GroupElement, LineOrder, PhaseOrder, elementary_T, exp_lie, factorize_by_rays, factorize_logs,
                    group_product, inv, log_group, mul)
from .lattice import DegreeFunction, RationalCone, SkewLattice, quadratic_refinements
from .liealg import LieElement, Truncation, make_backend
from .quiver import dt_invariants, kronecker, kronecker_quiver

__version__ = "0.1.0"

__all__ = [
    "GenericityError", "InvariantError", "GroupElement", "LineOrder", "PhaseOrder", "elementary_T", "exp_lie",
    "factorize_by_rays", "factorize_logs", "group_product", "inv", "log_group", "mul", "DegreeFunction",
    "RationalCone", "SkewLattice", "quadratic_refinements", "LieElement", "Truncation", "make_backend",
    "dt_invariants", "kronecker", "kronecker_quiver", "__version__",
]
