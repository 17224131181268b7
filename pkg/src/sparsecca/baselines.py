"""Classical CCA, CCA with nugget (ridge) parameters, and PCA reduction of Y.

Both CCA variants go through the same Cholesky + Jacobi pencil path as E-CCA,
so their output obeys the same normalization and sign conventions and can
serve as exact oracles for it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ecca import CanonicalModel, pairs_from_pencil
from .exceptions import InputError, NotPositiveDefiniteError
from .matcore import Dataset, center, gram, mirror_upper, solve_spd, sym_eigen


@dataclass(frozen=True)
class NuggetConfig:
    mu_x: float = 0.0
    mu_y: float = 0.0

    def __post_init__(self):
        if not (self.mu_x >= 0 and self.mu_y >= 0):
            raise InputError(f"nugget parameters must be >= 0, got mu_x={self.mu_x}, mu_y={self.mu_y}")


def _cca_from_covariances(data: Dataset, k_pairs: int, mu_x: float, mu_y: float, method: str) -> CanonicalModel:
    n = data.n
    sxx = gram(data.x, 1.0 / n)
    syy = gram(data.y, 1.0 / n)
    sxy = (data.x @ data.y.T) / n
    if mu_x:
        sxx = sxx + mu_x * np.eye(data.p)
    if mu_y:
        syy = syy + mu_y * np.eye(data.d)
    # p x d, never an explicit inverse
    b_map = solve_spd(sxx, sxy)
    m = mirror_upper(sxy.T @ b_map)
    return pairs_from_pencil(m, syy, k_pairs, b_map, data, lambda1=None, method=method)


def classical_cca(data: Dataset, k_pairs: int = 1) -> CanonicalModel:
    """Sample CCA for ``p < n`` and ``d < n``.

    ``a`` solves the pencil ``(S_YX S_XX^-1 S_XY, S_YY)``, ``b ∝ S_XX^-1 S_XY a``.
    Eigenvalues are the squared sample canonical correlations.

    Raises
    ------
    NotPositiveDefiniteError
        If either Gram matrix is singular; use :func:`nugget_cca` instead.
    """
    data = center(data)
    try:
        return _cca_from_covariances(data, k_pairs, 0.0, 0.0, "classical")
    except NotPositiveDefiniteError as err:
        raise type(err)(
            err.index,
            f"classical CCA needs nonsingular covariance matrices (p={data.p}, d={data.d}, n={data.n}); "
            "use nugget_cca with positive nugget parameters",
        ) from err


def nugget_cca(data: Dataset, config: NuggetConfig, k_pairs: int = 1) -> CanonicalModel:
    """CCA with ridge terms ``mu_x I`` and ``mu_y I`` added to the covariance matrices.

    Works for ``p > n`` when ``mu_x > 0``.  Costs one p x p Cholesky, O(p^3).
    """
    data = center(data)
    return _cca_from_covariances(data, k_pairs, float(config.mu_x), float(config.mu_y), "nugget")


def default_num_components(d: int) -> int:
    return math.ceil(d / 2)


def pca_reduce(y, num_components: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Project ``y`` (d x n) onto its leading principal axes.

    Returns ``(u, reduced)`` where the rows of ``u`` (num_components x d) are
    the top eigenvectors of the centered ``YY^T/n`` and ``reduced = u @ Y_centered``.
    ``num_components`` defaults to ``ceil(d / 2)``.
    """
    y = np.asarray(y, dtype=np.float64)
    d, n = y.shape
    if num_components is None:
        num_components = default_num_components(d)
    if not 1 <= num_components <= min(d, n):
        raise InputError(f"num_components must be in [1, {min(d, n)}], got {num_components}")
    yc = y - y.mean(axis=1, keepdims=True)
    eig = sym_eigen(gram(yc, 1.0 / n))
    u = eig.vectors[:, :num_components].T.copy()
    return u, u @ yc
