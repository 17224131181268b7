"""Deterministic train/holdout splits and validation-set selection of lambda1."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .ecca import CanonicalModel, fit_ecca, fit_ecca_with_lasso, project
from .exceptions import InputError, TuningError
from .lasso import LassoConfig, default_lambda_grid
from .matcore import Dataset

CRITERIA = ("first", "sum")


@dataclass(frozen=True)
class SplitSpec:
    """Train/holdout proportions as a ratio such as ``(5, 1)`` or ``(44, 5)``.

    The training part gets ``round(n * a / (a + b))`` samples.  With
    ``shuffle`` the sample order comes from ``rng.substream(seed, SPLIT)``;
    without it the first samples train and the last ones are held out.
    """

    ratio: tuple[float, float] = (5.0, 1.0)
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        a, b = self.ratio
        if not (a > 0 and b > 0):
            raise InputError(f"split ratio parts must be positive, got {self.ratio}")

    @classmethod
    def from_fraction(cls, train_fraction: float, seed: int = 0, shuffle: bool = True) -> "SplitSpec":
        if not 0 < train_fraction < 1:
            raise InputError(f"train_fraction must be in (0, 1), got {train_fraction}")
        return cls((train_fraction, 1.0 - train_fraction), seed, shuffle)

    @classmethod
    def parse(cls, text: str, seed: int = 0, shuffle: bool = True) -> "SplitSpec":
        """``"5:1"`` style ratio, or a bare training fraction like ``"0.8"``."""
        try:
            if ":" in text:
                a, b = text.split(":")
                return cls((float(a), float(b)), seed, shuffle)
            return cls.from_fraction(float(text), seed, shuffle)
        except ValueError as err:
            raise InputError(f"cannot parse split ratio {text!r}") from err

    def train_size(self, n: int) -> int:
        a, b = self.ratio
        return int(np.floor(n * a / (a + b) + 0.5))


def split_indices(n: int, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    if n < 2:
        raise InputError(f"cannot split {n} samples")
    n_train = spec.train_size(n)
    if n_train < 1 or n_train > n - 1:
        raise InputError(f"split ratio {spec.ratio} on n={n} leaves a part empty")
    order = rngmod.substream(spec.seed, rngmod.SPLIT).permutation(n) if spec.shuffle else np.arange(n)
    return order[:n_train], order[n_train:]


def split(data: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Partition samples into (train, holdout); both come back uncentered."""
    train_idx, hold_idx = split_indices(data.n, spec)
    return data.subset(train_idx), data.subset(hold_idx)


@dataclass(frozen=True)
class TuneResult:
    lambda_grid: np.ndarray
    val_correlations: np.ndarray
    degenerate: np.ndarray
    chosen_index: int
    chosen_lambda: float
    model: CanonicalModel


def _score(model: CanonicalModel, val: Dataset, criterion: str) -> tuple[float, bool]:
    proj = project(model, val)
    degenerate = 0 in model.degenerate_pairs
    if criterion == "first":
        return float(proj.correlations[0]), degenerate
    return float(proj.correlations.sum()), degenerate


def tune_lambda(
    train: Dataset,
    val: Dataset,
    grid=None,
    k_pairs: int = 1,
    base: LassoConfig | None = None,
    criterion: str = "first",
    warm_start: bool = False,
    threads: int = 1,
) -> TuneResult:
    """Pick lambda1 maximizing the signed validation correlation of the first pair.

    Every grid point is fit on ``train`` and projected on ``val`` (centered
    with the training means).  Grid points whose first pair is degenerate
    (``b`` collapsed to zero) are not eligible.  Ties go to the smallest
    lambda.  The returned model is refit on ``train`` at the chosen lambda.

    With ``warm_start`` the fits run sequentially from the largest lambda
    down, each starting at the previous ``B_hat``; otherwise grid points are
    independent and may run on ``threads`` workers with identical results.
    """
    if criterion not in CRITERIA:
        raise InputError(f"criterion must be one of {CRITERIA}, got {criterion!r}")
    base = base or LassoConfig()
    if grid is None:
        grid = default_lambda_grid(train.n, train.p)
    grid = np.asarray(grid, dtype=np.float64).reshape(-1)
    if grid.size == 0:
        raise InputError("lambda grid is empty")
    if np.any(grid < 0) or np.any(np.diff(grid) < 0):
        raise InputError("lambda grid must be non-negative and ascending")

    scores = np.zeros(grid.size)
    degenerate = np.zeros(grid.size, dtype=bool)
    models: list[CanonicalModel | None] = [None] * grid.size

    if warm_start:
        start = None
        for i in range(grid.size - 1, -1, -1):
            model, fit = fit_ecca_with_lasso(train, base.with_lambda(grid[i], start), k_pairs)
            start = fit.b_hat
            models[i] = model
            scores[i], degenerate[i] = _score(model, val, criterion)
    else:
        def evaluate(i):
            model = fit_ecca(train, base.with_lambda(grid[i]), k_pairs)
            return model, _score(model, val, criterion)

        if threads > 1 and grid.size > 1:
            with ThreadPoolExecutor(max_workers=min(threads, grid.size)) as pool:
                out = list(pool.map(evaluate, range(grid.size)))
        else:
            out = [evaluate(i) for i in range(grid.size)]
        for i, (model, (score, degen)) in enumerate(out):
            models[i] = model
            scores[i], degenerate[i] = score, degen

    eligible = np.flatnonzero(~degenerate)
    if eligible.size == 0:
        raise TuningError("grid fully shrinks coefficients: every candidate lambda gives a zero first pair")
    best = eligible[np.argmax(scores[eligible])]  # first maximizer = smallest lambda
    chosen = float(grid[best])
    model = models[best] if not warm_start else fit_ecca(train, base.with_lambda(chosen), k_pairs)
    return TuneResult(
        lambda_grid=grid,
        val_correlations=scores,
        degenerate=degenerate,
        chosen_index=int(best),
        chosen_lambda=chosen,
        model=model,
    )
