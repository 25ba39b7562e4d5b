"""Numerical reduction of generalized complex, Kahler and hyper-Kahler structures
on split exact Courant algebroids over coordinate charts."""
from .linalg import FiberMetric, Subspace
from .calculus import Field, axioms_residual, courant_bracket, exterior_derivative, pairing
from .structures import (
    BihermitianData,
    eigenbundle,
    from_complex,
    from_symplectic,
    gk_from_bihermitian,
    integrability_residual,
    metric_from,
)
from .reduction import ReductionData, Tolerances, reduce_at
from .scenarios import RunConfig, builtin, run

__version__ = "0.1.0"
