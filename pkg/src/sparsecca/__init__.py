"""Sparse canonical correlation analysis by one generalized eigen decomposition.

Y is regressed on X row by row with the Lasso; the fitted responses and the
sample covariance of Y form a symmetric-definite pencil whose leading
eigenvectors give every canonical pair at once.
"""

from .baselines import NuggetConfig, classical_cca, nugget_cca, pca_reduce
from .ecca import CanonicalModel, Projection, fit_ecca, project
from .exceptions import (
    ConvergenceError,
    DegenerateSampleError,
    InputError,
    NotPositiveDefiniteError,
    NotSymmetricError,
    NumericalError,
    SingularCovarianceError,
    SparseCCAError,
    TuningError,
)
from .lasso import LassoConfig, LassoFit, default_lambda_grid, fit_all, fit_row
from .matcore import Dataset, center, cholesky, sym_eigen
from .permtest import PermTestResult, Procedure, perm_test
from .tuning import SplitSpec, TuneResult, split, tune_lambda

__version__ = "0.1.0"

__all__ = [
    "CanonicalModel",
    "ConvergenceError",
    "Dataset",
    "DegenerateSampleError",
    "InputError",
    "LassoConfig",
    "LassoFit",
    "NotPositiveDefiniteError",
    "NotSymmetricError",
    "NuggetConfig",
    "NumericalError",
    "PermTestResult",
    "Procedure",
    "Projection",
    "SingularCovarianceError",
    "SparseCCAError",
    "SplitSpec",
    "TuneResult",
    "TuningError",
    "center",
    "cholesky",
    "classical_cca",
    "default_lambda_grid",
    "fit_all",
    "fit_ecca",
    "fit_row",
    "nugget_cca",
    "pca_reduce",
    "perm_test",
    "project",
    "split",
    "sym_eigen",
    "tune_lambda",
]
