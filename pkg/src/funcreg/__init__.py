"""Least-squares scalar-on-function regression in identifiable subspaces of L2([-1, 1])."""

from . import errors, fnspace, fpca, kernels, processes, regression, subspace
from .errors import (
    AssumptionViolated,
    ConfigError,
    FuncRegError,
    NotIdentifiable,
    RankDeficient,
    SingularCovariance,
)
from .fnspace import FunctionExpr, gram, inner_product, norm, parse_expr
from .subspace import Subspace, build_E, d_theta

__version__ = "0.1.0"

__all__ = [
    "AssumptionViolated",
    "ConfigError",
    "FuncRegError",
    "FunctionExpr",
    "NotIdentifiable",
    "RankDeficient",
    "SingularCovariance",
    "Subspace",
    "build_E",
    "d_theta",
    "errors",
    "fnspace",
    "fpca",
    "gram",
    "inner_product",
    "kernels",
    "norm",
    "parse_expr",
    "processes",
    "regression",
    "subspace",
]
