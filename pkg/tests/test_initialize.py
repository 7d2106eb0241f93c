"""Consensus initialization and robust cross-validation."""

import numpy as np
import pytest

from gammaglm import (
    Dataset,
    Family,
    RansacConfig,
    Theta,
    ml_fit,
    mm_coordinate_descent,
    ransac_init,
    rocv_select,
)
from gammaglm.initialize import deviance_residuals


def leverage_outlier_data(seed=0, n=200, eps=0.4):
    """1-d line y = 2x with a far off-line cluster pulling least squares."""
    rng = np.random.default_rng(seed)
    n_out = int(eps * n)
    x = rng.normal(size=n)
    y = 2.0 * x + 0.1 * rng.normal(size=n)
    x[:n_out] = rng.normal(4.0, 0.2, size=n_out)
    y[:n_out] = rng.normal(-8.0, 0.2, size=n_out)
    perm = rng.permutation(n)
    return Dataset(x[perm][:, None], y[perm], Family.LINEAR)


class TestMlFit:
    def test_linear_exact(self):
        X = np.array([[0.0], [1.0], [2.0]])
        y = np.array([1.0, 3.0, 5.0])
        theta = ml_fit(Family.LINEAR, Dataset(X, y, Family.LINEAR))
        assert theta.beta0 == pytest.approx(1.0, abs=1e-10)
        assert theta.beta[0] == pytest.approx(2.0, abs=1e-10)

    def test_logistic_recovers_sign(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(400, 2))
        p = 1.0 / (1.0 + np.exp(-(0.5 + X @ np.array([1.5, -1.0]))))
        y = (rng.uniform(size=400) < p).astype(float)
        theta = ml_fit(Family.LOGISTIC, Dataset(X, y, Family.LOGISTIC))
        assert theta.beta[0] > 0.8
        assert theta.beta[1] < -0.5
        assert theta.sigma2 is None

    def test_poisson_with_offset(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(500, 1))
        offset = rng.uniform(0.0, 1.0, size=500)
        mu = np.exp(0.2 + 0.7 * X[:, 0] + offset)
        y = rng.poisson(mu).astype(float)
        theta = ml_fit(Family.POISSON, Dataset(X, y, Family.POISSON, offset))
        assert theta.beta0 == pytest.approx(0.2, abs=0.15)
        assert theta.beta[0] == pytest.approx(0.7, abs=0.1)


class TestRansacInit:
    def test_noiseless_exact_line(self):
        x = np.linspace(-2, 2, 40)
        data = Dataset(x[:, None], 2.0 * x, Family.LINEAR)
        theta = ransac_init(Family.LINEAR, data, RansacConfig(seed=1))
        assert theta.beta[0] == pytest.approx(2.0, abs=1e-8)
        assert theta.beta0 == pytest.approx(0.0, abs=1e-8)

    def test_beats_least_squares_under_gross_outliers(self):
        data = leverage_outlier_data()
        X1 = np.column_stack([np.ones(len(data)), data.X])
        ols, *_ = np.linalg.lstsq(X1, data.y, rcond=None)
        assert abs(ols[1] - 2.0) > 0.5  # least squares is pulled away

        theta = ransac_init(Family.LINEAR, data, RansacConfig(seed=7))
        assert abs(theta.beta[0] - 2.0) < 0.1

    def test_deterministic_given_seed(self):
        data = leverage_outlier_data(seed=4)
        config = RansacConfig(seed=11, noise_scale=0.3)
        a = ransac_init(Family.LINEAR, data, config)
        b = ransac_init(Family.LINEAR, data, config)
        assert a.beta0 == b.beta0
        assert np.array_equal(a.beta, b.beta)
        assert a.sigma2 == b.sigma2

    def test_inlier_count_nondecreasing_in_threshold(self):
        data = leverage_outlier_data(seed=5)
        theta = ransac_init(Family.LINEAR, data, RansacConfig(seed=3))
        dev = np.abs(deviance_residuals(Family.LINEAR, data, theta))
        counts = [(dev <= thr).sum() for thr in (0.05, 0.2, 1.0, 5.0, 50.0)]
        assert all(a <= b for a, b in zip(counts, counts[1:]))

    def test_low_consensus_warns(self):
        rng = np.random.default_rng(6)
        data = Dataset(rng.normal(size=(30, 1)), rng.normal(size=30) * 10,
                       Family.LINEAR)
        with pytest.warns(UserWarning, match="low consensus"):
            ransac_init(Family.LINEAR, data,
                        RansacConfig(seed=0, inlier_threshold=1e-9))

    def test_subset_size_validated(self):
        data = leverage_outlier_data(seed=1, n=20)
        with pytest.raises(ValueError):
            ransac_init(Family.LINEAR, data, RansacConfig(subset_size=50))


def _mm_fit_hook(family, train, lam, seed):
    # Deterministic, order-insensitive fit for cross-validation tests.
    return mm_coordinate_descent(train, 0.5, lam,
                                 Theta(0.0, np.zeros(train.p), 1.0),
                                 max_iter=50, tol=1e-10)


class TestRocvSelect:
    def _data(self, seed=0, n=60):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(n, 2))
        y = 1.0 + X @ np.array([1.0, -0.5]) + 0.3 * rng.normal(size=n)
        return Dataset(X, y, Family.LINEAR)

    def test_single_element_grid(self):
        data = self._data()
        lam, scores = rocv_select(Family.LINEAR, data, [0.05], 0.5,
                                  folds=3, fit=_mm_fit_hook)
        assert lam == 0.05
        assert len(scores) == 1

    def test_duplicate_entries_keep_first(self):
        data = self._data(1)
        lam, scores = rocv_select(Family.LINEAR, data, [0.02, 0.02], 0.5,
                                  folds=3, fit=_mm_fit_hook)
        assert lam == 0.02
        assert scores[0] == scores[1]

    def test_fold_failure_scored_infinite(self):
        data = self._data(2)

        def flaky(family, train, lam, seed):
            if lam > 0.5:
                raise RuntimeError("synthetic fold failure")
            return _mm_fit_hook(family, train, lam, seed)

        with pytest.warns(UserWarning, match="fold .* failed"):
            lam, scores = rocv_select(Family.LINEAR, data, [1.0, 0.01], 0.5,
                                      folds=3, fit=flaky)
        assert lam == 0.01
        assert scores[0] == np.inf

    def test_leave_one_out_permutation_invariant(self):
        data = self._data(3, n=25)
        perm = np.random.default_rng(9).permutation(len(data))
        shuffled = data.subset(perm)
        _, scores_a = rocv_select(Family.LINEAR, data, [0.05], 0.5,
                                  folds=len(data), fit=_mm_fit_hook)
        _, scores_b = rocv_select(Family.LINEAR, shuffled, [0.05], 0.5,
                                  folds=len(shuffled), fit=_mm_fit_hook)
        assert scores_a[0] == pytest.approx(scores_b[0], abs=1e-10)

    def test_requires_grid_and_folds(self):
        data = self._data(4)
        with pytest.raises(ValueError):
            rocv_select(Family.LINEAR, data, [], 0.5)
        with pytest.raises(ValueError):
            rocv_select(Family.LINEAR, data, [0.1], 0.5, folds=1)
