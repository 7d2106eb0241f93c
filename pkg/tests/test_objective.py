"""Cross-entropy estimator and regularized risks."""

import math

import numpy as np
import pytest

from gammaglm import (
    Dataset,
    Family,
    Theta,
    emp_risk,
    empirical_gamma_cross_entropy,
    exp_risk,
    simulate_linear,
    SimSpec,
)

SYMMETRY_CROSS_ENTROPY = 0.34657359027997265471  # -log(0.5^(1/2))


def logistic_point():
    data = Dataset(np.zeros((1, 2)), np.array([1.0]), Family.LOGISTIC)
    return data, Theta(0.0, np.zeros(2))


class TestCrossEntropy:
    def test_logistic_symmetry_point(self):
        data, theta = logistic_point()
        value = empirical_gamma_cross_entropy(data, theta, 1.0)
        assert value == pytest.approx(SYMMETRY_CROSS_ENTROPY, abs=1e-14)

    def test_duplication_invariance(self, rng):
        X = rng.normal(size=(6, 3))
        y = rng.normal(size=6)
        data = Dataset(X, y, Family.LINEAR)
        doubled = Dataset(np.vstack([X, X]), np.concatenate([y, y]), Family.LINEAR)
        theta = Theta(0.1, rng.normal(size=3), 0.8)
        a = empirical_gamma_cross_entropy(data, theta, 0.2)
        b = empirical_gamma_cross_entropy(doubled, theta, 0.2)
        assert a == pytest.approx(b, abs=1e-14)

    def test_against_single_pass_reference(self):
        """Independent reference: pure-python loop over the closed forms."""
        data, truth = simulate_linear(SimSpec(N=100, p=12, epsilon=0.0, seed=7))
        gamma = 0.1
        theta = truth.theta_star
        s2 = theta.sigma2
        scale = ((1 + gamma) / (2 * math.pi * s2)) ** (gamma / (2 * (1 + gamma)))
        total = 0.0
        for i in range(len(data)):
            r = data.y[i] - theta.beta0 - float(data.X[i] @ theta.beta)
            total += scale * math.exp(-gamma * r * r / (2 * s2))
        expected = -math.log(total / len(data)) / gamma
        value = empirical_gamma_cross_entropy(data, theta, gamma)
        assert value == pytest.approx(expected, rel=1e-12)

    def test_empty_dataset_rejected(self):
        data = Dataset(np.zeros((0, 2)), np.zeros(0), Family.LINEAR)
        with pytest.raises(ValueError):
            empirical_gamma_cross_entropy(data, Theta(0.0, np.zeros(2), 1.0), 0.1)


class TestEmpRisk:
    def test_negated_kernel_at_symmetry_point(self):
        data, theta = logistic_point()
        risk = emp_risk(data, theta, 1.0, 0.0)
        assert risk.value == pytest.approx(-(0.5**0.5), abs=1e-14)
        assert risk.n_samples == 1
        assert risk.lam == 0.0

    def test_zero_coefficients_zero_penalty(self, rng):
        X = rng.normal(size=(5, 3))
        y = rng.normal(size=5)
        data = Dataset(X, y, Family.LINEAR)
        theta = Theta(0.3, np.zeros(3), 1.0)
        for lam in (0.0, 0.5, 10.0):
            assert emp_risk(data, theta, 0.1, lam).value == \
                emp_risk(data, theta, 0.1, 0.0).value

    def test_linear_in_lambda_with_slope_l1(self, rng):
        X = rng.normal(size=(5, 3))
        y = rng.normal(size=5)
        data = Dataset(X, y, Family.LINEAR)
        theta = Theta(0.0, np.array([1.0, -2.0, 0.5]), 1.0)
        l1 = 3.5
        base = emp_risk(data, theta, 0.1, 0.0).value
        for lam in (0.1, 0.7, 2.0):
            value = emp_risk(data, theta, 0.1, lam).value
            assert value == pytest.approx(base + lam * l1, rel=1e-12)
            assert value >= base

    def test_same_ordering_as_cross_entropy_at_lambda_zero(self, rng):
        X = rng.normal(size=(40, 4))
        y = rng.normal(size=40)
        data = Dataset(X, y, Family.LINEAR)
        candidates = [Theta(float(rng.normal()), rng.normal(size=4),
                            float(rng.uniform(0.5, 2.0))) for _ in range(8)]
        risks = [emp_risk(data, t, 0.3, 0.0).value for t in candidates]
        entropies = [empirical_gamma_cross_entropy(data, t, 0.3) for t in candidates]
        assert np.argmin(risks) == np.argmin(entropies)
        assert np.array_equal(np.argsort(risks), np.argsort(entropies))


class TestExpRisk:
    def test_equals_emp_risk_on_same_data(self, rng):
        X = rng.normal(size=(10, 2))
        y = rng.normal(size=10)
        data = Dataset(X, y, Family.LINEAR)
        theta = Theta(0.0, rng.normal(size=2), 1.0)
        assert exp_risk(data, theta, 0.2, 0.05).value == \
            emp_risk(data, theta, 0.2, 0.05).value

    def test_lambda_zero_is_mean_negated_kernel(self, rng):
        X = rng.normal(size=(10, 2))
        y = rng.normal(size=10)
        data = Dataset(X, y, Family.LINEAR)
        theta = Theta(0.0, rng.normal(size=2), 1.0)
        from gammaglm import gamma_kernel_batch
        expected = -float(np.mean(gamma_kernel_batch(Family.LINEAR, data, theta, 0.2)))
        assert exp_risk(data, theta, 0.2, 0.0).value == pytest.approx(expected, rel=1e-14)
