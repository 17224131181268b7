import numpy as np
import pytest

from sparsecca.baselines import NuggetConfig, classical_cca, default_num_components, nugget_cca, pca_reduce
from sparsecca.ecca import DegenerateSpectrumWarning
from sparsecca.exceptions import InputError, NotPositiveDefiniteError
from sparsecca.matcore import Dataset, center, gram, sym_eigen


def _corr(u, v):
    u = u - u.mean()
    v = v - v.mean()
    return float(u @ v / np.sqrt((u @ u) * (v @ v)))


def _ascent_oracle(x, y, iters=2000):
    """First canonical correlation by alternating regressions from many starts."""
    x = x - x.mean(axis=1, keepdims=True)
    y = y - y.mean(axis=1, keepdims=True)
    sxx, syy, sxy = x @ x.T, y @ y.T, x @ y.T
    best = -1.0
    rng = np.random.default_rng(123)
    for _ in range(5):
        a = rng.normal(size=y.shape[0])
        for _ in range(iters):
            b = np.linalg.solve(sxx, sxy @ a)
            a = np.linalg.solve(syy, sxy.T @ b)
            a /= np.linalg.norm(a)
        best = max(best, abs(_corr(a @ y, b @ x)))
    return best


def test_identical_views_correlation_one():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(3, 40))
    with pytest.warns(DegenerateSpectrumWarning):
        model = classical_cca(Dataset.from_arrays(x, x.copy()), 3)
    np.testing.assert_allclose(model.correlations, 1.0, atol=1e-10)
    np.testing.assert_allclose(model.a[:, 0], model.b[:, 0], atol=1e-8)


def test_zero_cross_covariance_gives_zero_eigenvalues():
    # x uses even/odd-symmetric patterns orthogonal to y after centering
    n = 8
    x = np.array([[1, -1, 1, -1, 1, -1, 1, -1], [1, 1, -1, -1, 1, 1, -1, -1]], float)
    y = np.array([[1, 1, 1, 1, -1, -1, -1, -1]], float)
    assert np.allclose(x @ y.T, 0) and n == x.shape[1]
    model = classical_cca(Dataset.from_arrays(x, y), 1)
    assert model.eigenvalues[0] == pytest.approx(0.0, abs=1e-14)


def test_classical_matches_ascent_oracle():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(4, 50))
    y = np.vstack([x[0] - x[2], x[1], rng.normal(size=50)]) + rng.normal(size=(3, 50))
    oracle = _ascent_oracle(x, y)
    model = classical_cca(Dataset.from_arrays(x, y), 1)
    assert abs(model.correlations[0] - oracle) <= 1e-3
    assert abs(model.train_correlations[0] - oracle) <= 1e-3


def test_classical_eigenvalues_bounded_and_sorted():
    rng = np.random.default_rng(2)
    model = classical_cca(Dataset.from_arrays(rng.normal(size=(6, 30)), rng.normal(size=(4, 30))), 4)
    assert np.all(model.eigenvalues >= -1e-10) and np.all(model.eigenvalues <= 1 + 1e-10)
    assert np.all(np.diff(model.eigenvalues) <= 0)


def test_classical_dominates_single_pairs():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(5, 40))
    y = x[:2] + rng.normal(size=(2, 40))
    first = classical_cca(Dataset.from_arrays(x, y), 1).correlations[0]
    best_single = max(abs(_corr(y[i], x[j])) for i in range(2) for j in range(5))
    assert first >= best_single - 1e-9


def test_classical_singular_points_to_nugget():
    rng = np.random.default_rng(4)
    with pytest.raises(NotPositiveDefiniteError, match="nugget_cca"):
        classical_cca(Dataset.from_arrays(rng.normal(size=(20, 10)), rng.normal(size=(2, 10))), 1)


def test_nugget_config_validation():
    with pytest.raises(InputError):
        NuggetConfig(-1.0, 0.0)


def test_zero_nugget_reproduces_classical():
    rng = np.random.default_rng(5)
    data = Dataset.from_arrays(rng.normal(size=(5, 40)), rng.normal(size=(3, 40)))
    c = classical_cca(data, 3)
    n = nugget_cca(data, NuggetConfig(0.0, 0.0), 3)
    np.testing.assert_array_equal(c.a, n.a)
    np.testing.assert_array_equal(c.b, n.b)
    np.testing.assert_array_equal(c.eigenvalues, n.eigenvalues)


def test_huge_nugget_b_follows_cross_covariance():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(6, 40))
    data = Dataset.from_arrays(x, x[:2] + rng.normal(size=(2, 40)))
    model = nugget_cca(data, NuggetConfig(1e8, 0.0), 1)
    c = center(data)
    direction = (c.x @ c.y.T / c.n) @ model.a[:, 0]
    direction /= np.linalg.norm(direction)
    cos = abs(direction @ model.b[:, 0])
    assert np.arccos(min(cos, 1.0)) <= 1e-3


def test_nugget_handles_p_greater_than_n():
    rng = np.random.default_rng(7)
    data = Dataset.from_arrays(rng.normal(size=(1000, 50)), rng.normal(size=(3, 50)))
    model = nugget_cca(data, NuggetConfig(1.0, 0.0), 2)
    assert np.all(np.isfinite(model.a)) and np.all(np.isfinite(model.b))


def test_nugget_small_change_is_bounded():
    rng = np.random.default_rng(8)
    data = Dataset.from_arrays(rng.normal(size=(30, 40)), rng.normal(size=(2, 40)))
    r1 = nugget_cca(data, NuggetConfig(0.2, 0.0), 1).correlations[0]
    r2 = nugget_cca(data, NuggetConfig(0.1, 0.0), 1).correlations[0]
    assert abs(r1 - r2) < 0.1


def test_pca_rank_one():
    rng = np.random.default_rng(9)
    y = np.zeros((4, 30))
    y[2] = rng.normal(size=30)
    u, reduced = pca_reduce(y, 1)
    np.testing.assert_allclose(np.abs(u[0]), [0, 0, 1, 0], atol=1e-12)
    np.testing.assert_allclose(reduced[0], y[2] - y[2].mean(), atol=1e-12)


def test_pca_full_basis_reconstructs():
    rng = np.random.default_rng(10)
    y = rng.normal(size=(5, 40))
    u, reduced = pca_reduce(y, 5)
    yc = y - y.mean(axis=1, keepdims=True)
    np.testing.assert_allclose(u.T @ reduced, yc, atol=1e-10)
    np.testing.assert_allclose((reduced**2).sum(), (yc**2).sum(), rtol=1e-12)


def test_pca_component_variances_match_eigenvalues():
    rng = np.random.default_rng(11)
    y = rng.normal(size=(10, 200)) * np.arange(1, 11)[:, None]
    u, reduced = pca_reduce(y)
    assert u.shape == (5, 10)
    yc = y - y.mean(axis=1, keepdims=True)
    oracle = sym_eigen(gram(yc, 1 / 200)).values[:5]
    np.testing.assert_allclose((reduced**2).sum(axis=1) / 200, oracle, atol=1e-10)


def test_pca_default_half_rounds_up():
    assert default_num_components(7) == 4
    assert default_num_components(8) == 4
    with pytest.raises(InputError):
        pca_reduce(np.ones((3, 10)), 4)
