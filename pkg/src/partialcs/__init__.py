"""Partially sparse recovery: l1 minimization over the sparse block only.

The unknown is split as ``x = (x1, x2)`` with ``x1`` sparse and ``x2`` dense;
only ``||x1||_1`` is minimized. The package provides the solvers, the
projected reduction, exact desk-scale NSP/RIP certificates, Gaussian
generators and Monte Carlo experiments.
"""
from .errors import (
    DimensionMismatch,
    DomainError,
    Infeasible,
    InsufficientData,
    NoSolution,
    NonFiniteInput,
    NotSymmetric,
    NumericalBreakdown,
    PartialCSError,
    RankDeficient,
    TooLarge,
)
from .partial import (
    PartialSolution,
    PartiallySparseSignal,
    PartitionedMatrix,
    recover_direct,
    recover_projected,
    reduce_problem,
    split_matrix,
)
from .solvers import SolveOptions, SolveReport, Status, admm_basis_pursuit, admm_bpdn, simplex_l1

__version__ = "0.1.0"

__all__ = [
    "DimensionMismatch",
    "DomainError",
    "Infeasible",
    "InsufficientData",
    "NoSolution",
    "NonFiniteInput",
    "NotSymmetric",
    "NumericalBreakdown",
    "PartialCSError",
    "RankDeficient",
    "TooLarge",
    "PartialSolution",
    "PartiallySparseSignal",
    "PartitionedMatrix",
    "recover_direct",
    "recover_projected",
    "reduce_problem",
    "split_matrix",
    "SolveOptions",
    "SolveReport",
    "Status",
    "admm_basis_pursuit",
    "admm_bpdn",
    "simplex_l1",
]
