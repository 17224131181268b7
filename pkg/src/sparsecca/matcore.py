"""Dense data model and small linear-algebra kernels.

Matrices are plain ``float64`` numpy arrays; :func:`as_matrix` is the single
gate that admits them (2-D, finite).  Samples are stored as *columns*: ``X`` is
p x n and ``Y`` is d x n.  CSV I/O (samples as rows) transposes at the edge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _kernels
from .exceptions import (
    ConvergenceError,
    DegenerateSampleError,
    InputError,
    NotPositiveDefiniteError,
    NotSymmetricError,
)

SYMMETRY_RTOL = 1e-10
SIGN_EPS = 1e-12
PIVOT_RTOL = 1e-12
JACOBI_MAX_SWEEPS = 100
JACOBI_MAX_DIM = 512
# off-diagonal Frobenius norm target, relative to ||S||_F
JACOBI_RTOL = 1e-14


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    """Return ``values`` as a read-only, C-contiguous, finite float64 2-D array."""
    arr = np.array(values, dtype=np.float64, copy=True, order="C")
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise InputError(f"{name} must be 2-D, got {arr.ndim} dimensions")
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise InputError(f"{name} has a non-finite entry at ({bad[0]}, {bad[1]})")
    arr.flags.writeable = False
    return arr


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} has non-finite entries")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Dataset:
    """Paired samples: ``x`` is p x n, ``y`` is d x n (samples are columns).

    When ``centered`` is true, ``x_means``/``y_means`` hold the row means that
    were subtracted, so the raw data is ``x + x_means[:, None]``.
    """

    x: np.ndarray
    y: np.ndarray
    x_means: np.ndarray
    y_means: np.ndarray
    centered: bool = False

    def __post_init__(self):
        object.__setattr__(self, "x", as_matrix(self.x, "x"))
        object.__setattr__(self, "y", as_matrix(self.y, "y"))
        object.__setattr__(self, "x_means", _as_vector(self.x_means, "x_means"))
        object.__setattr__(self, "y_means", _as_vector(self.y_means, "y_means"))
        if self.x.shape[1] != self.y.shape[1]:
            raise InputError(
                f"x and y disagree on sample count: x is {self.x.shape[0]}x{self.x.shape[1]}, "
                f"y is {self.y.shape[0]}x{self.y.shape[1]} (features x samples)"
            )
        if self.x_means.shape[0] != self.p or self.y_means.shape[0] != self.d:
            raise InputError("mean vectors do not match feature counts")

    @classmethod
    def from_arrays(cls, x, y) -> "Dataset":
        """Uncentered dataset from feature-by-sample arrays."""
        x = as_matrix(x, "x")
        y = as_matrix(y, "y")
        return cls(x, y, np.zeros(x.shape[0]), np.zeros(y.shape[0]), False)

    @classmethod
    def from_samples(cls, x_rows, y_rows) -> "Dataset":
        """Uncentered dataset from sample-by-feature arrays (analyst layout)."""
        return cls.from_arrays(np.asarray(x_rows, dtype=float).T, np.asarray(y_rows, dtype=float).T)

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def p(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.y.shape[0]

    def raw_x(self) -> np.ndarray:
        return self.x + self.x_means[:, None] if self.centered else self.x

    def raw_y(self) -> np.ndarray:
        return self.y + self.y_means[:, None] if self.centered else self.y

    def raw(self) -> "Dataset":
        """The uncentered data this dataset represents."""
        if not self.centered:
            return self
        return Dataset.from_arrays(self.raw_x(), self.raw_y())

    def subset(self, columns) -> "Dataset":
        """Uncentered dataset restricted to sample indices ``columns``."""
        cols = np.asarray(columns, dtype=np.intp)
        return Dataset.from_arrays(self.raw_x()[:, cols], self.raw_y()[:, cols])

    def with_x(self, x) -> "Dataset":
        """Same ``y`` (raw), new raw ``x``; result is uncentered."""
        return Dataset.from_arrays(x, self.raw_y())


def center(data: Dataset) -> Dataset:
    """Subtract row means from ``x`` and ``y``; no-op on already centered data."""
    if data.n < 2:
        raise DegenerateSampleError(f"centering needs at least 2 samples, got {data.n}")
    if data.centered:
        return data
    x_means = data.x.mean(axis=1)
    y_means = data.y.mean(axis=1)
    return Dataset(
        data.x - x_means[:, None],
        data.y - y_means[:, None],
        x_means,
        y_means,
        True,
    )


def mirror_upper(m: np.ndarray) -> np.ndarray:
    """Copy the upper triangle onto the lower one so the result is bitwise symmetric."""
    upper = np.triu(m)
    return upper + np.triu(m, 1).T


def gram(m, scale: float = 1.0) -> np.ndarray:
    """``scale * M @ M.T`` with exactly mirrored triangles."""
    m = np.asarray(m, dtype=np.float64)
    return mirror_upper(scale * (m @ m.T))


def check_symmetric(s: np.ndarray, name: str = "matrix") -> None:
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise InputError(f"{name} must be square, got shape {s.shape}")
    scale = np.max(np.abs(s)) if s.size else 0.0
    asym = np.max(np.abs(s - s.T)) if s.size else 0.0
    if asym > SYMMETRY_RTOL * scale:
        raise NotSymmetricError(
            f"{name} is not symmetric: max |S - S^T| = {asym:.3e} exceeds {SYMMETRY_RTOL:g} * {scale:.3e}"
        )


def _cholesky_reference(s: np.ndarray, threshold: float) -> np.ndarray:
    # column-by-column factorization; used only to locate a failing pivot
    d = s.shape[0]
    low = np.zeros_like(s)
    for j in range(d):
        pivot = s[j, j] - low[j, :j] @ low[j, :j]
        if not pivot > threshold:
            raise NotPositiveDefiniteError(
                j, f"matrix is not positive definite: pivot {j} is {pivot:.3e} (threshold {threshold:.3e})"
            )
        low[j, j] = np.sqrt(pivot)
        low[j + 1 :, j] = (s[j + 1 :, j] - low[j + 1 :, :j] @ low[j, :j]) / low[j, j]
    return low


def cholesky(s) -> np.ndarray:
    """Lower-triangular ``L`` with ``S = L @ L.T``.

    Raises
    ------
    NotPositiveDefiniteError
        If some pivot is at most ``1e-12 * max(diag(S))``; ``.index`` names it.
    """
    s = np.asarray(s, dtype=np.float64)
    check_symmetric(s, "cholesky input")
    if s.shape[0] == 0:
        return np.zeros((0, 0))
    max_diag = float(np.max(np.diag(s)))
    threshold = PIVOT_RTOL * max(max_diag, 0.0)
    if max_diag <= 0.0:
        raise NotPositiveDefiniteError(int(np.argmax(np.diag(s) <= 0.0)))
    try:
        low = scipy.linalg.cholesky(s, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return _cholesky_reference(s, threshold)
    pivots = np.diag(low) ** 2
    failing = np.flatnonzero(~(pivots > threshold))
    if failing.size:
        j = int(failing[0])
        raise NotPositiveDefiniteError(
            j, f"matrix is not positive definite: pivot {j} is {pivots[j]:.3e} (threshold {threshold:.3e})"
        )
    return low


def fix_sign(v: np.ndarray, eps: float = SIGN_EPS) -> np.ndarray:
    """Flip ``v`` so its first entry with ``|entry| > eps`` is positive."""
    idx = np.flatnonzero(np.abs(v) > eps)
    if idx.size and v[idx[0]] < 0:
        return -v
    return v


def fix_column_signs(m: np.ndarray, eps: float = SIGN_EPS) -> np.ndarray:
    out = np.array(m, dtype=np.float64, copy=True)
    for k in range(out.shape[1]):
        out[:, k] = fix_sign(out[:, k], eps)
    return out


@dataclass(frozen=True)
class SymEigen:
    """Eigen-decomposition: ``values`` descending, ``vectors`` columns orthonormal."""

    values: np.ndarray
    vectors: np.ndarray
    sweeps: int = 0


def sym_eigen(s) -> SymEigen:
    """Cyclic Jacobi eigen-decomposition of a symmetric matrix.

    Eigenvalues are sorted descending (stable for ties) and each eigenvector
    is sign-fixed so its first entry above ``1e-12`` in magnitude is positive.
    Identical input bits give identical output bits.

    Raises
    ------
    NotSymmetricError
        If ``max|S - S^T| > 1e-10 * max|S|``.
    ConvergenceError
        If 100 sweeps do not reduce the off-diagonal mass below tolerance.
    """
    s = np.asarray(s, dtype=np.float64)
    check_symmetric(s, "sym_eigen input")
    d = s.shape[0]
    if d > JACOBI_MAX_DIM:
        raise InputError(f"sym_eigen supports dimension <= {JACOBI_MAX_DIM}, got {d}")
    if not np.all(np.isfinite(s)):
        raise InputError("sym_eigen input has non-finite entries")
    work = mirror_upper(s)
    vectors = np.eye(d)
    sweeps = _kernels.jacobi_sweeps(work, vectors, JACOBI_MAX_SWEEPS, JACOBI_RTOL)
    if sweeps < 0:
        raise ConvergenceError(f"Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps")
    values = np.diag(work).copy()
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = fix_column_signs(vectors[:, order])
    values.flags.writeable = False
    vectors.flags.writeable = False
    return SymEigen(values, vectors, int(sweeps))


def solve_spd(s, rhs) -> np.ndarray:
    """Solve ``S @ Z = rhs`` for symmetric positive definite ``S`` via Cholesky."""
    rhs = np.asarray(rhs, dtype=np.float64)
    vector_rhs = rhs.ndim == 1
    low = cholesky(s)
    z = scipy.linalg.solve_triangular(low, rhs, lower=True, check_finite=False)
    z = scipy.linalg.solve_triangular(low.T, z, lower=False, check_finite=False)
    return z.reshape(-1) if vector_rhs else z


def pearson(u: np.ndarray, v: np.ndarray) -> tuple[float, bool]:
    """Sample Pearson correlation; ``(0.0, True)`` when either side has zero variance."""
    uc = u - u.mean()
    vc = v - v.mean()
    nu = np.sqrt(uc @ uc)
    nv = np.sqrt(vc @ vc)
    if nu == 0.0 or nv == 0.0:
        return 0.0, True
    r = float((uc @ vc) / (nu * nv))
    return min(1.0, max(-1.0, r)), False
