"""Row-wise Lasso fits for the multivariate regression of Y on X.

Each response row ``y_k`` is fit separately by minimizing

    sum_i (y_ik - beta^T X_i)^2 + lambda1 * ||beta||_1

(sum of squares, no ``1/(2n)`` factor).  Because of that scaling the natural
penalty grows like ``sqrt(n log p)``, see :func:`default_lambda_grid`.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import _kernels
from .exceptions import InputError
from .matcore import Dataset, as_matrix

GRID_CONSTANTS = (0.01, 0.03, 0.1, 0.3, 1.0, 3.0)
# coordinate sweeps between exact support solves
SWEEP_CHUNK = 25
SUPPORT_KKT_TOL = 1e-9


@dataclass(frozen=True)
class LassoConfig:
    """Penalty and stopping rule for coordinate descent.

    ``tol`` bounds ``max_j |delta beta_j| / max(1, |beta_j|)`` over a full
    sweep.  ``warm_start`` is either a length-p vector (used for every row) or
    a d x p matrix (one start per row).
    """

    lambda1: float = 0.0
    max_iters: int = 10000
    tol: float = 1e-8
    warm_start: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if not np.isfinite(self.lambda1) or self.lambda1 < 0:
            raise InputError(f"lambda1 must be a finite non-negative number, got {self.lambda1}")
        if not self.tol > 0:
            raise InputError(f"tol must be positive, got {self.tol}")
        if int(self.max_iters) < 1:
            raise InputError(f"max_iters must be >= 1, got {self.max_iters}")

    def with_lambda(self, lambda1: float, warm_start=None) -> "LassoConfig":
        return LassoConfig(lambda1, self.max_iters, self.tol, warm_start)


@dataclass(frozen=True)
class RowDiagnostics:
    iters: int
    converged: bool
    objective: float
    history: np.ndarray | None = None


@dataclass(frozen=True)
class LassoFit:
    """Stacked per-row solutions ``b_hat`` (d x p) plus diagnostics."""

    b_hat: np.ndarray
    supports: tuple
    lambda1: float
    iters: np.ndarray
    converged: np.ndarray
    objective: np.ndarray

    @property
    def union_support(self) -> np.ndarray:
        return np.flatnonzero(np.any(self.b_hat != 0.0, axis=0))

    @property
    def is_zero(self) -> bool:
        return not np.any(self.b_hat)


def lasso_objective(x: np.ndarray, y_row: np.ndarray, beta: np.ndarray, lambda1: float) -> float:
    res = y_row - beta @ x
    return float(res @ res + lambda1 * np.abs(beta).sum())


def use_covariance_updates(p: int, n: int) -> bool:
    """Whether the ``XX^T`` form is cheaper than residual updates."""
    return n >= p


def fit_row(
    x, y_row, config: LassoConfig, trace: bool = False, gram: np.ndarray | None = None
) -> tuple[np.ndarray, RowDiagnostics]:
    """Solve one Lasso problem by cyclic coordinate descent.

    Every ``SWEEP_CHUNK`` sweeps without convergence, an exact solve on the
    current signed support is attempted and kept only if it passes the KKT
    conditions.  This finishes ill-conditioned problems where plain
    coordinate descent converges linearly and slowly.

    Parameters
    ----------
    x : array, shape (p, n)
        Features as rows, samples as columns.  Rows with zero norm get a
        coefficient pinned at zero.
    y_row : array, shape (n,)
    config : LassoConfig
    trace : bool
        Record the objective after every sweep in ``diagnostics.history``.
    gram : array, shape (p, p), optional
        Precomputed ``x @ x.T``.  Supplying it (or ``n >= p``) switches to
        covariance updates; the iteration is the same, only cheaper.

    Returns
    -------
    beta : array, shape (p,)
    diagnostics : RowDiagnostics
        ``iters`` counts coordinate sweeps.  ``converged`` is False when
        ``max_iters`` ran out; ``beta`` is then the last (lowest-objective)
        iterate.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y_row = np.ascontiguousarray(np.asarray(y_row, dtype=np.float64).reshape(-1))
    p, n = x.shape
    if y_row.shape[0] != n:
        raise InputError(f"y_row has {y_row.shape[0]} samples but x has {n}")
    if n < 1:
        raise InputError("need at least one sample")
    beta = _initial_beta(config.warm_start, 0, p)
    max_iters = int(config.max_iters)
    lam = float(config.lambda1)
    history = np.empty(max_iters if trace else 1)
    if gram is None and use_covariance_updates(p, n):
        gram = x @ x.T
    xy = x @ y_row
    sweeps, converged = 0, False
    while sweeps < max_iters and not converged:
        budget = min(SWEEP_CHUNK, max_iters - sweeps)
        hist = history[sweeps:] if trace else history
        if gram is not None:
            done, converged = _kernels.lasso_cd_gram(
                np.ascontiguousarray(gram), xy, float(y_row @ y_row), lam,
                beta, budget, float(config.tol), hist, trace,
            )
        else:
            done, converged = _kernels.lasso_cd(x, y_row, lam, beta, budget, float(config.tol), hist, trace)
        sweeps += int(done)
        if not converged:
            converged = _support_solve(x, y_row, xy, gram, lam, beta)
    diag = RowDiagnostics(
        iters=int(sweeps),
        converged=bool(converged),
        objective=lasso_objective(x, y_row, beta, lam),
        history=history[:sweeps].copy() if trace else None,
    )
    return beta, diag


def _support_solve(x, y_row, xy, gram, lam, beta) -> bool:
    """Try to finish a row exactly from the current signed support.

    On support ``A`` with signs ``s`` the optimum solves
    ``G_AA beta_A = (x y)_A - (lam / 2) s``.  The candidate replaces ``beta``
    (in place) only if it keeps the signs and satisfies the KKT conditions
    on every inactive feature, in which case it is the exact minimizer.
    """
    active = np.flatnonzero(beta)
    if active.size == 0 or active.size > x.shape[1]:
        return False
    signs = np.sign(beta[active])
    g_aa = gram[np.ix_(active, active)] if gram is not None else x[active] @ x[active].T
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            cand = scipy.linalg.solve(g_aa, xy[active] - 0.5 * lam * signs, assume_a="pos")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning, ValueError):
        return False
    if not np.all(np.sign(cand) == signs):
        return False
    full = np.zeros_like(beta)
    full[active] = cand
    grad = 2.0 * (xy - (gram @ full if gram is not None else x @ (full @ x)))
    tol = SUPPORT_KKT_TOL * max(1.0, float(np.abs(xy).max()))
    if np.abs(grad[active] - lam * signs).max() > tol:
        return False
    inactive = np.ones(beta.size, dtype=bool)
    inactive[active] = False
    if inactive.any() and np.abs(grad[inactive]).max() > lam + tol:
        return False
    beta[:] = full
    return True


def _initial_beta(warm_start, row: int, p: int) -> np.ndarray:
    if warm_start is None:
        return np.zeros(p)
    ws = np.asarray(warm_start, dtype=np.float64)
    start = ws[row] if ws.ndim == 2 else ws
    if start.shape != (p,):
        raise InputError(f"warm start has shape {ws.shape}, expected ({p},) or (d, {p})")
    return start.copy()


def fit_all(data: Dataset, config: LassoConfig, threads: int = 1) -> LassoFit:
    """Fit every response row of ``data.y`` against ``data.x``.

    Rows are independent; with ``threads > 1`` they run on a thread pool and
    are assembled by row index, so the result does not depend on scheduling.
    """
    x = np.ascontiguousarray(data.x)
    ys = data.y
    d, p = data.d, data.p
    gram = x @ x.T if use_covariance_updates(p, data.n) else None

    def one(k):
        row_cfg = LassoConfig(
            config.lambda1,
            config.max_iters,
            config.tol,
            None if config.warm_start is None else _initial_beta(config.warm_start, k, p),
        )
        return fit_row(x, ys[k], row_cfg, gram=gram)

    if threads > 1 and d > 1:
        with ThreadPoolExecutor(max_workers=min(threads, d)) as pool:
            results = list(pool.map(one, range(d)))
    else:
        results = [one(k) for k in range(d)]

    b_hat = np.zeros((d, p))
    for k, (beta, _) in enumerate(results):
        b_hat[k] = beta
    b_hat = as_matrix(b_hat, "b_hat")
    return LassoFit(
        b_hat=b_hat,
        supports=tuple(np.flatnonzero(b_hat[k]) for k in range(d)),
        lambda1=float(config.lambda1),
        iters=np.array([r[1].iters for r in results], dtype=np.int64),
        converged=np.array([r[1].converged for r in results], dtype=bool),
        objective=np.array([r[1].objective for r in results]),
    )


def kkt_violations(x: np.ndarray, y_row: np.ndarray, beta: np.ndarray, lambda1: float) -> np.ndarray:
    """Per-feature subgradient violation for one row."""
    grad = 2.0 * (x @ (y_row - beta @ x))
    active = beta != 0.0
    viol = np.maximum(0.0, np.abs(grad) - lambda1)
    viol[active] = np.abs(grad[active] - lambda1 * np.sign(beta[active]))
    return viol


def kkt_check(fit: LassoFit, data: Dataset) -> np.ndarray:
    """Largest KKT violation for every row of ``fit`` (length d)."""
    return np.array(
        [kkt_violations(data.x, data.y[k], fit.b_hat[k], fit.lambda1).max(initial=0.0) for k in range(data.d)]
    )


def full_shrink_threshold(x: np.ndarray, y_row: np.ndarray) -> float:
    """Smallest lambda1 at which the solution is exactly zero: ``2 max_j |x_j^T y|``."""
    return float(2.0 * np.max(np.abs(x @ y_row), initial=0.0))


def default_lambda_grid(n: int, p: int, constants=GRID_CONSTANTS) -> np.ndarray:
    """Ascending grid ``c * sqrt(n log p)``; ``log p`` is floored at ``log 2``."""
    scale = np.sqrt(n * np.log(max(p, 2)))
    return np.array(sorted(float(c) * scale for c in constants))
