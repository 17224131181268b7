import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sparsecca import lasso
from sparsecca.exceptions import InputError
from sparsecca.lasso import LassoConfig
from sparsecca.matcore import Dataset, center


def _soft(z, t):
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def _orthogonal_design(rng, p, n):
    q, _ = np.linalg.qr(rng.normal(size=(n, p)))
    return np.sqrt(n) * q.T  # rows satisfy X X^T = n I


def test_config_validation():
    with pytest.raises(InputError):
        LassoConfig(lambda1=-1.0)
    with pytest.raises(InputError):
        LassoConfig(tol=0.0)
    with pytest.raises(InputError):
        LassoConfig(max_iters=0)


def test_full_shrinkage_above_threshold():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(5, 30))
    y = rng.normal(size=30)
    thr = lasso.full_shrink_threshold(x, y)
    beta, diag = lasso.fit_row(x, y, LassoConfig(thr * 1.0001))
    assert not beta.any() and diag.converged
    beta, _ = lasso.fit_row(x, y, LassoConfig(thr * 0.99))
    assert beta.any()


@pytest.mark.parametrize("n", [40, 25])
def test_orthogonal_design_closed_form(n):
    rng = np.random.default_rng(1)
    p = 6
    x = _orthogonal_design(rng, p, n)
    y = rng.normal(size=n) * 3
    lam = 4.0
    # oracle: soft-threshold of the marginal scores, written before the solver was run
    oracle = _soft(x @ y, lam / 2) / n
    beta, diag = lasso.fit_row(x, y, LassoConfig(lam))
    assert diag.converged
    np.testing.assert_allclose(beta, oracle, atol=1e-8, rtol=0)
    assert np.max(lasso.kkt_violations(x, y, oracle, lam)) <= 1e-8 * max(1.0, np.abs(x @ y).max())


def test_lambda_zero_matches_least_squares():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(3, 20))
    y = rng.normal(size=20)
    ls = np.linalg.solve(x @ x.T, x @ y)
    beta, _ = lasso.fit_row(x, y, LassoConfig(0.0))
    np.testing.assert_allclose(beta, ls, atol=1e-6)


def test_zero_feature_is_pinned():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(3, 15))
    x[1] = 0.0
    beta, diag = lasso.fit_row(x, rng.normal(size=15), LassoConfig(0.5, warm_start=np.ones(3)))
    assert beta[1] == 0.0 and diag.converged


def test_max_iters_flags_non_convergence():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(30, 20))
    _, diag = lasso.fit_row(x, rng.normal(size=20), LassoConfig(0.01, max_iters=2))
    assert diag.iters == 2 and not diag.converged


def test_objective_nonincreasing_per_sweep():
    rng = np.random.default_rng(5)
    for p, n in ((40, 20), (8, 60)):
        x = rng.normal(size=(p, n))
        _, diag = lasso.fit_row(x, rng.normal(size=n), LassoConfig(1.0), trace=True)
        hist = diag.history
        assert hist.size == diag.iters
        assert np.all(np.diff(hist) <= 1e-12 * hist[0])


def test_gram_and_residual_forms_agree():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(10, 50))
    y = rng.normal(size=50)
    cfg = LassoConfig(2.0, tol=1e-12)
    b1, _ = lasso.fit_row(x, y, cfg)  # n >= p: covariance form
    beta = np.zeros(10)
    lasso._kernels.lasso_cd(x, y, 2.0, beta, 10000, 1e-12, np.empty(1), False)
    np.testing.assert_allclose(b1, beta, atol=1e-10)


def test_fit_all_single_row_matches_fit_row():
    rng = np.random.default_rng(7)
    data = center(Dataset.from_arrays(rng.normal(size=(12, 30)), rng.normal(size=(1, 30))))
    fit = lasso.fit_all(data, LassoConfig(1.5))
    beta, diag = lasso.fit_row(data.x, data.y[0], LassoConfig(1.5))
    assert np.array_equal(fit.b_hat[0], beta)
    assert fit.iters[0] == diag.iters


def test_noiseless_sparse_recovery():
    rng = np.random.default_rng(8)
    p, n, d = 20, 80, 3
    b_star = np.zeros((d, p))
    b_star[0, [0, 3]] = [1.0, -2.0]
    b_star[1, [5]] = [0.7]
    b_star[2, [1, 2, 19]] = [1.5, 0.4, -1.0]
    x = rng.normal(size=(p, n))
    data = center(Dataset.from_arrays(x, b_star @ x))
    fit = lasso.fit_all(data, LassoConfig(1e-4, tol=1e-12))
    for k in range(d):
        assert set(np.flatnonzero(b_star[k])) <= set(fit.supports[k].tolist())
    assert np.linalg.norm(fit.b_hat - b_star) <= 1e-3


def test_fit_all_threads_bitwise_identical():
    rng = np.random.default_rng(9)
    data = center(Dataset.from_arrays(rng.normal(size=(40, 25)), rng.normal(size=(6, 25))))
    a = lasso.fit_all(data, LassoConfig(0.8), threads=1)
    b = lasso.fit_all(data, LassoConfig(0.8), threads=4)
    assert a.b_hat.tobytes() == b.b_hat.tobytes()


def test_fit_invariants_supports_and_objective():
    rng = np.random.default_rng(10)
    data = center(Dataset.from_arrays(rng.normal(size=(15, 40)), rng.normal(size=(3, 40))))
    fit = lasso.fit_all(data, LassoConfig(3.0))
    for k in range(3):
        assert np.array_equal(fit.supports[k], np.flatnonzero(np.abs(fit.b_hat[k]) > 0))
        obj = lasso.lasso_objective(data.x, data.y[k], fit.b_hat[k], 3.0)
        assert fit.objective[k] == pytest.approx(obj, rel=1e-8)


def test_kkt_zero_at_interior_of_subgradient():
    rng = np.random.default_rng(11)
    x = rng.normal(size=(4, 10))
    y = rng.normal(size=10)
    lam = 2.5 * lasso.full_shrink_threshold(x, y)
    assert lasso.kkt_violations(x, y, np.zeros(4), lam).max() == 0.0


def test_kkt_grows_when_solution_perturbed():
    rng = np.random.default_rng(12)
    data = center(Dataset.from_arrays(rng.normal(size=(6, 40)), rng.normal(size=(1, 40))))
    fit = lasso.fit_all(data, LassoConfig(2.0, tol=1e-12))
    base = lasso.kkt_check(fit, data)[0]
    j = fit.supports[0][0]
    bumped = fit.b_hat[0].copy()
    bumped[j] += 0.1
    assert lasso.kkt_violations(data.x, data.y[0], bumped, 2.0).max() > base


def test_warm_start_shapes():
    rng = np.random.default_rng(13)
    data = center(Dataset.from_arrays(rng.normal(size=(5, 20)), rng.normal(size=(2, 20))))
    cold = lasso.fit_all(data, LassoConfig(1.0, tol=1e-12))
    warm = lasso.fit_all(data, LassoConfig(1.0, tol=1e-12, warm_start=cold.b_hat))
    np.testing.assert_allclose(warm.b_hat, cold.b_hat, atol=1e-10)
    assert np.all(warm.iters <= 2)
    with pytest.raises(InputError):
        lasso.fit_all(data, LassoConfig(1.0, warm_start=np.zeros(4)))


def test_default_grid():
    grid = lasso.default_lambda_grid(100, 50)
    scale = np.sqrt(100 * np.log(50))
    np.testing.assert_allclose(grid, np.array([0.01, 0.03, 0.1, 0.3, 1.0, 3.0]) * scale)
    assert lasso.default_lambda_grid(10, 1)[0] == pytest.approx(0.01 * np.sqrt(10 * np.log(2)))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 30), st.integers(5, 40), st.floats(0.0, 5.0), st.integers(0, 2**32 - 1))
def test_converged_rows_satisfy_kkt(p, n, lam, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(p, n))
    y = rng.normal(size=n)
    beta, diag = lasso.fit_row(x, y, LassoConfig(lam))
    if diag.converged:
        bound = 1e-6 * max(1.0, np.abs(x @ y).max())
        assert lasso.kkt_violations(x, y, beta, lam).max() <= bound


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 10.0), st.integers(0, 2**32 - 1))
def test_scaling_covariance(c, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(6, 25))
    y = rng.normal(size=25)
    cfg = LassoConfig(3.0, tol=1e-13)
    b1, _ = lasso.fit_row(x, y, cfg)
    b2, _ = lasso.fit_row(x, c * y, cfg.with_lambda(3.0 * c))
    np.testing.assert_allclose(b2, c * b1, rtol=1e-8, atol=1e-10 * max(1.0, c))


def test_solution_optimality_across_lambdas():
    rng = np.random.default_rng(14)
    x = rng.normal(size=(10, 30))
    y = rng.normal(size=30)
    lo, hi = 1.0, 6.0
    b_lo, _ = lasso.fit_row(x, y, LassoConfig(lo, tol=1e-12))
    b_hi, _ = lasso.fit_row(x, y, LassoConfig(hi, tol=1e-12))
    assert lasso.lasso_objective(x, y, b_hi, hi) <= lasso.lasso_objective(x, y, b_lo, hi) + 1e-9
