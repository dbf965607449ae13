"""Orthogonal low-rank approximation of dense tensors.

The main entry points are :func:`run_od_alm` (CP-ALS start, augmented
Lagrangian fit, orthogonalization and projection) and :func:`run_cp_als`.
"""
from .alm import AlmConfig, AlmState, RunTrace, od_alm_fit
from .als import AlsConfig, als_fit, hosvd_init
from .exceptions import (
    DegenerateComponentError,
    DomainError,
    InfeasibleError,
    NonDescentError,
    OptimizationError,
    ShapeError,
)
from .generators import generate
from .kruskal import (
    KruskalTensor,
    gram_hadamard,
    is_orthogonal,
    kruskal_norm,
    pairwise_inner,
    rebalance,
    reconstruct,
    relative_error,
)
from .optimize import LbfgsConfig, lbfgs_minimize
from .orthogonalize import OrthonormalRankOneList, orthogonalize, project
from .pipeline import DecompositionResult, decompose, run_cp_als, run_od_alm
from .tensor import DenseTensor, hosvd, inner, khatri_rao, mttkrp, norm, unfold

__version__ = "0.1.0"
