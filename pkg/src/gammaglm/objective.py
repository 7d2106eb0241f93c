"""Training objectives and evaluation risks built on the kernel.

Two closely related quantities appear:

* the empirical cross entropy -(1/g) log(mean kernel), whose minimizer is
  the penalized estimator targeted by the offline reference solver, and
* the transformed risk mean(-kernel) + lambda * ||beta||_1, the objective
  the stochastic optimizer descends and the quantity reported as
  EmpRisk / ExpRisk.

Both are strictly decreasing functions of the mean kernel, so at
lambda = 0 they order parameter candidates identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalOverflowError
from .families import Theta, gamma_kernel_batch


@dataclass(frozen=True)
class RiskValue:
    """A risk evaluation together with the settings that produced it."""

    value: float
    n_samples: int
    lam: float
    gamma: float


def _mean_kernel(data, theta: Theta, gamma: float) -> float:
    kernels = gamma_kernel_batch(data.family, data, theta, gamma)
    # Compensated sum: kernels can span many orders of magnitude on
    # contaminated data.
    return math.fsum(kernels) / len(data)


def empirical_gamma_cross_entropy(data, theta: Theta, gamma: float) -> float:
    """-(1/gamma) log of the mean kernel over the dataset."""
    if len(data) == 0:
        raise ValueError("dataset must be nonempty")
    value = -math.log(_mean_kernel(data, theta, gamma)) / gamma
    if not math.isfinite(value):
        raise NumericalOverflowError("cross entropy overflowed")
    return value


def l1_penalty(theta: Theta, lam: float) -> float:
    return lam * float(np.sum(np.abs(theta.beta)))


def emp_risk(data, theta: Theta, gamma: float, lam: float) -> RiskValue:
    """Mean negated kernel plus the L1 penalty, on training data."""
    if len(data) == 0:
        raise ValueError("dataset must be nonempty")
    value = -_mean_kernel(data, theta, gamma) + l1_penalty(theta, lam)
    if not math.isfinite(value):
        raise NumericalOverflowError("empirical risk overflowed")
    return RiskValue(value, len(data), lam, gamma)


def exp_risk(test_data, theta: Theta, gamma: float, lam: float) -> RiskValue:
    """Same formula as :func:`emp_risk`, evaluated on held-out samples."""
    return emp_risk(test_data, theta, gamma, lam)
