import numpy as np
import pytest

from sparsecca.ecca import fit_ecca, project
from sparsecca.exceptions import InputError, TuningError
from sparsecca.lasso import LassoConfig, default_lambda_grid
from sparsecca.matcore import Dataset
from sparsecca.tuning import SplitSpec, split, split_indices, tune_lambda


def _signal(rng, n, p=30, d=3):
    x = rng.normal(size=(p, n))
    b = np.zeros((d, p))
    b[0, :3] = [1.5, -1.0, 0.8]
    b[1, 3:5] = [1.0, 1.0]
    return Dataset.from_arrays(x, b @ x + rng.normal(size=(d, n)))


def test_unshuffled_split():
    train, hold = split_indices(6, SplitSpec((5, 1), shuffle=False))
    np.testing.assert_array_equal(train, np.arange(5))
    np.testing.assert_array_equal(hold, [5])


def test_split_is_deterministic_and_exact():
    spec = SplitSpec((5, 1), seed=42)
    a = split_indices(30, spec)
    b = split_indices(30, spec)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(np.sort(np.concatenate(a)), np.arange(30))
    assert not np.array_equal(a[0], split_indices(30, SplitSpec((5, 1), seed=43))[0])


def test_ratio_44_5_on_49():
    train, hold = split_indices(49, SplitSpec((44, 5), seed=1))
    assert (train.size, hold.size) == (44, 5)


def test_split_rejects_empty_part():
    with pytest.raises(InputError):
        split_indices(3, SplitSpec((100, 1)))
    with pytest.raises(InputError):
        SplitSpec((0, 1))


def test_split_spec_parse():
    assert SplitSpec.parse("44:5").ratio == (44.0, 5.0)
    assert SplitSpec.parse("0.8").train_size(10) == 8
    with pytest.raises(InputError):
        SplitSpec.parse("a:b")


def test_split_returns_raw_subsets():
    rng = np.random.default_rng(0)
    data = Dataset.from_arrays(rng.normal(size=(2, 12)) + 3, rng.normal(size=(1, 12)))
    train, hold = split(data, SplitSpec((2, 1), shuffle=False))
    np.testing.assert_array_equal(train.raw_x(), data.x[:, :8])
    np.testing.assert_array_equal(hold.raw_x(), data.x[:, 8:])


def test_singleton_grid():
    rng = np.random.default_rng(1)
    res = tune_lambda(_signal(rng, 60), _signal(rng, 30), [2.5])
    assert res.chosen_lambda == 2.5 and res.chosen_index == 0


def test_default_grid_has_six_candidates():
    rng = np.random.default_rng(2)
    train = _signal(rng, 60)
    res = tune_lambda(train, _signal(rng, 30))
    np.testing.assert_allclose(res.lambda_grid, default_lambda_grid(60, 30))
    assert res.lambda_grid.size == 6


def test_choice_is_exhaustive_argmax():
    rng = np.random.default_rng(3)
    train, val = _signal(rng, 80), _signal(rng, 40)
    grid = default_lambda_grid(80, 30)
    res = tune_lambda(train, val, grid)
    # oracle: evaluate every grid point independently
    scores = [project(fit_ecca(train, LassoConfig(g), 1), val).correlations[0] for g in grid]
    np.testing.assert_allclose(res.val_correlations, scores, atol=1e-12)
    assert res.val_correlations[res.chosen_index] >= max(scores[0], scores[-1])
    assert res.chosen_index == int(np.argmax(scores))


def test_ties_go_to_smallest_lambda():
    rng = np.random.default_rng(4)
    train, val = _signal(rng, 60), _signal(rng, 30)
    tiny = [1e-9, 2e-9, 3e-9]
    res = tune_lambda(train, val, tiny)
    assert res.chosen_index == 0 or res.val_correlations[0] < res.val_correlations[res.chosen_index]


def test_order_and_threads_do_not_matter():
    rng = np.random.default_rng(5)
    train, val = _signal(rng, 60), _signal(rng, 30)
    a = tune_lambda(train, val, threads=1)
    b = tune_lambda(train, val, threads=3)
    assert a.val_correlations.tobytes() == b.val_correlations.tobytes()
    assert a.chosen_lambda == b.chosen_lambda
    assert a.model.a.tobytes() == b.model.a.tobytes()


def test_warm_start_mode_agrees():
    rng = np.random.default_rng(6)
    train, val = _signal(rng, 60), _signal(rng, 30)
    base = LassoConfig(tol=1e-12)
    cold = tune_lambda(train, val, base=base)
    warm = tune_lambda(train, val, base=base, warm_start=True)
    np.testing.assert_allclose(warm.val_correlations, cold.val_correlations, atol=1e-6)
    assert warm.chosen_index == cold.chosen_index


def test_degenerate_points_are_skipped():
    rng = np.random.default_rng(7)
    train, val = _signal(rng, 60), _signal(rng, 30)
    res = tune_lambda(train, val, [1.0, 1e7])
    assert res.degenerate.tolist() == [False, True]
    assert res.chosen_index == 0


def test_fully_shrunk_grid_errors():
    rng = np.random.default_rng(8)
    with pytest.raises(TuningError, match="fully shrinks"):
        tune_lambda(_signal(rng, 40), _signal(rng, 20), [1e7, 1e8])


def test_grid_validation():
    rng = np.random.default_rng(9)
    train, val = _signal(rng, 40), _signal(rng, 20)
    for bad in ([], [2.0, 1.0], [-1.0]):
        with pytest.raises(InputError):
            tune_lambda(train, val, bad)
    with pytest.raises(InputError):
        tune_lambda(train, val, [1.0], criterion="max")


def test_sum_criterion():
    rng = np.random.default_rng(10)
    train, val = _signal(rng, 60), _signal(rng, 30)
    res = tune_lambda(train, val, [0.5, 5.0], k_pairs=2, criterion="sum")
    expected = [project(fit_ecca(train, g, 2), val).correlations.sum() for g in (0.5, 5.0)]
    np.testing.assert_allclose(res.val_correlations, expected, atol=1e-12)
