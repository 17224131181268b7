"""Eigenvector-based sparse CCA.

Pipeline: center the data, fit the d row-wise Lassos to get ``B_hat``, form
the d x d pencil ``(m, s) = ((B_hat X)(B_hat X)^T / n, Y Y^T / n)``, and read
all K canonical pairs off a single symmetric eigen-decomposition.  The pencil
is reduced with the Cholesky factor of ``s`` (``W = L^-1 m L^-T``), so the
eigenvalues are real and the ``a`` vectors are ``s``-orthogonal.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import InputError, NotPositiveDefiniteError, SingularCovarianceError
from .lasso import LassoConfig, LassoFit, fit_all
from .matcore import Dataset, center, cholesky, fix_sign, gram, mirror_upper, pearson, sym_eigen

DEGENERATE_NORM = 1e-12
GAP_RTOL = 1e-8


class DegenerateSpectrumWarning(UserWarning):
    """Two reported eigenvalues are numerically indistinguishable."""


@dataclass(frozen=True)
class CanonicalModel:
    """K canonical pairs.

    ``a`` is d x K and ``b`` is p x K, both with unit-norm columns.  Each
    ``a`` column is sign-fixed so its first entry above 1e-12 in magnitude is
    positive; ``b`` is the normalized image of ``a`` and inherits that sign,
    because flipping ``b`` alone would flip the canonical correlation.  Columns listed in
    ``degenerate_pairs`` have ``b`` equal to zero and correlation 0.
    ``x_means``/``y_means`` are the training means used to center new data.
    """

    k_pairs: int
    a: np.ndarray
    b: np.ndarray
    eigenvalues: np.ndarray
    train_correlations: np.ndarray
    lambda1: float | None
    degenerate_pairs: frozenset
    x_means: np.ndarray
    y_means: np.ndarray
    method: str = "ecca"

    @property
    def correlations(self) -> np.ndarray:
        """Canonical correlations implied by the eigenvalues (``sqrt`` of them)."""
        return np.sqrt(self.eigenvalues)


@dataclass(frozen=True)
class Projection:
    u: np.ndarray
    v: np.ndarray
    correlations: np.ndarray
    zero_variance: frozenset


def assemble_gamma(fit: LassoFit, data: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """The pencil ``(m, s)`` whose eigenpairs are those of ``(YY^T)^-1 B_hat X (B_hat X)^T``."""
    if fit.b_hat.shape != (data.d, data.p):
        raise InputError(f"fit has shape {fit.b_hat.shape}, data needs ({data.d}, {data.p})")
    fitted = fit.b_hat @ data.x
    return gram(fitted, 1.0 / data.n), gram(data.y, 1.0 / data.n)


def _reduce_pencil(m: np.ndarray, s: np.ndarray, k_pairs: int) -> tuple[np.ndarray, np.ndarray]:
    """Top ``k_pairs`` eigenpairs of ``m a = lam s a``; ``a`` columns unit norm."""
    d = s.shape[0]
    if not 1 <= k_pairs <= d:
        raise InputError(f"k_pairs must be in [1, {d}], got {k_pairs}")
    try:
        low = cholesky(s)
    except NotPositiveDefiniteError as err:
        raise SingularCovarianceError(
            err.index, "YY^T/n singular: requires d < n and non-degenerate Y"
        ) from err
    half = scipy.linalg.solve_triangular(low, m, lower=True, check_finite=False)
    w = scipy.linalg.solve_triangular(low, half.T, lower=True, check_finite=False)
    w = mirror_upper(0.5 * (w + w.T))
    eig = sym_eigen(w)
    values = np.array(eig.values[:k_pairs])
    top = eig.values[0]
    gaps = -np.diff(eig.values[: min(k_pairs + 1, d)])
    if top > 0 and np.any(gaps < GAP_RTOL * top):
        warnings.warn(
            "repeated eigenvalues among the requested pairs; their vectors are not unique",
            DegenerateSpectrumWarning,
            stacklevel=3,
        )
    a = scipy.linalg.solve_triangular(low.T, eig.vectors[:, :k_pairs], lower=False, check_finite=False)
    a = a / np.linalg.norm(a, axis=0)
    for k in range(k_pairs):
        a[:, k] = fix_sign(a[:, k])
    # W is PSD, so negatives are rounding noise
    values = np.maximum(values, 0.0)
    return values, a


def pairs_from_pencil(
    m: np.ndarray,
    s: np.ndarray,
    k_pairs: int,
    b_map: np.ndarray,
    data: Dataset,
    lambda1: float | None = None,
    method: str = "ecca",
) -> CanonicalModel:
    """Canonical pairs from a pencil and a linear map ``a -> b' = b_map @ a``.

    ``b_map`` is p x d: ``B_hat^T`` for E-CCA, ``Sigma_XX^-1 Sigma_XY`` for
    classical CCA.  ``data`` must be the centered training data.
    """
    values, a = _reduce_pencil(np.asarray(m, dtype=float), np.asarray(s, dtype=float), k_pairs)
    b_raw = b_map @ a
    b = np.zeros_like(b_raw)
    degenerate = set()
    for k in range(k_pairs):
        norm = np.linalg.norm(b_raw[:, k])
        if norm <= DEGENERATE_NORM:
            degenerate.add(k)
            continue
        b[:, k] = b_raw[:, k] / norm
    corr = np.zeros(k_pairs)
    for k in range(k_pairs):
        if k not in degenerate:
            corr[k], _ = pearson(a[:, k] @ data.y, b[:, k] @ data.x)
    for arr in (a, b, values, corr):
        arr.flags.writeable = False
    return CanonicalModel(
        k_pairs=k_pairs,
        a=a,
        b=b,
        eigenvalues=values,
        train_correlations=corr,
        lambda1=lambda1,
        degenerate_pairs=frozenset(degenerate),
        x_means=data.x_means,
        y_means=data.y_means,
        method=method,
    )


def solve_pairs(m, s, k_pairs: int, fit: LassoFit, data: Dataset) -> CanonicalModel:
    """Canonical pairs from the E-CCA pencil: ``a`` from the pencil, ``b ∝ B_hat^T a``."""
    return pairs_from_pencil(m, s, k_pairs, fit.b_hat.T, data, lambda1=fit.lambda1, method="ecca")


def fit_ecca(data: Dataset, config: LassoConfig | float, k_pairs: int = 1, threads: int = 1) -> CanonicalModel:
    """Fit E-CCA end to end.

    Parameters
    ----------
    data : Dataset
        Raw or centered; raw data is centered here and its means are kept
        on the model for :func:`project`.
    config : LassoConfig or float
        A bare float is taken as ``lambda1`` with default stopping rules.
    k_pairs : int
        Number of pairs, ``1 <= k_pairs <= d``.  All are extracted from one
        eigen-decomposition.
    threads : int
        Worker threads for the row-wise Lasso fits.
    """
    return fit_ecca_with_lasso(data, config, k_pairs, threads)[0]


def fit_ecca_with_lasso(
    data: Dataset, config: LassoConfig | float, k_pairs: int = 1, threads: int = 1
) -> tuple[CanonicalModel, LassoFit]:
    """Like :func:`fit_ecca` but also returns the Lasso fit (for warm starts)."""
    if not isinstance(config, LassoConfig):
        config = LassoConfig(float(config))
    data = center(data)
    if data.d >= data.n:
        raise SingularCovarianceError(0, f"YY^T/n singular: requires d < n (d={data.d}, n={data.n})")
    fit = fit_all(data, config, threads=threads)
    m, s = assemble_gamma(fit, data)
    return solve_pairs(m, s, k_pairs, fit, data), fit


def project(model: CanonicalModel, data: Dataset) -> Projection:
    """Canonical variables ``u_k = a_k^T Y``, ``v_k = b_k^T X`` on (new) data.

    ``data`` is centered with the model's *training* means, whatever its own
    centering state.  Degenerate pairs and zero-variance projections report
    correlation 0 and are listed in ``zero_variance``.
    """
    if data.d != model.a.shape[0] or data.p != model.b.shape[0]:
        raise InputError(
            f"data has d={data.d}, p={data.p}; model expects d={model.a.shape[0]}, p={model.b.shape[0]}"
        )
    x = data.raw_x() - model.x_means[:, None]
    y = data.raw_y() - model.y_means[:, None]
    u = model.a.T @ y
    v = model.b.T @ x
    corr = np.zeros(model.k_pairs)
    flagged = set(model.degenerate_pairs)
    for k in range(model.k_pairs):
        if k in model.degenerate_pairs:
            continue
        corr[k], zero = pearson(u[k], v[k])
        if zero:
            flagged.add(k)
    return Projection(u, v, corr, frozenset(flagged))
