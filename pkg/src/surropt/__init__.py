"""Surrogate-assisted box-constrained optimisation with Kriging and compact-support splines."""

from .bench import Objective, make_objective, quadratic, sasena
from .dataset import Dataset, ModelFitError
from .psi_ai import OptimizeResult, PsiConfig, RunHistory, optimize, reduce_dvs
from .space import DesignSpace, SamplePlan, generate

__all__ = [
    "Dataset",
    "DesignSpace",
    "ModelFitError",
    "Objective",
    "OptimizeResult",
    "PsiConfig",
    "RunHistory",
    "SamplePlan",
    "generate",
    "make_objective",
    "optimize",
    "quadratic",
    "reduce_dvs",
    "sasena",
]
