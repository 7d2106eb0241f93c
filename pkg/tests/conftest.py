"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from gammaglm import Dataset, Family, Theta, gamma_kernel_batch


def make_batch(family: Family, m: int, p: int, rng: np.random.Generator,
               with_offset: bool = False) -> Dataset:
    """Random O(1)-scaled mini-batch valid for the family."""
    X = rng.normal(0.0, 1.0, size=(m, p))
    offset = None
    if family is Family.LINEAR:
        y = rng.normal(0.0, 1.0, size=m)
    elif family is Family.LOGISTIC:
        y = rng.integers(0, 2, size=m).astype(float)
    else:
        y = rng.poisson(1.5, size=m).astype(float)
        if with_offset:
            offset = rng.normal(0.0, 0.3, size=m)
    return Dataset(X, y, family, offset)


def random_theta(family: Family, p: int, rng: np.random.Generator) -> Theta:
    beta0 = float(rng.normal(0.0, 0.5))
    beta = rng.normal(0.0, 0.5, size=p)
    sigma2 = float(rng.uniform(0.5, 2.0)) if family is Family.LINEAR else None
    return Theta(beta0, beta, sigma2)


def fd_gradient(family: Family, batch: Dataset, theta: Theta, gamma: float,
                step: float = 1e-6) -> np.ndarray:
    """Central finite differences of the mini-batch-averaged negated kernel.

    This is the independent oracle for the analytic gradient terms: it
    only touches the kernel, never the gradient formulas.
    """
    vec = theta.to_vector()
    has_s2 = theta.sigma2 is not None
    out = np.empty_like(vec)
    for i in range(len(vec)):
        hi, lo = vec.copy(), vec.copy()
        hi[i] += step
        lo[i] -= step
        loss_hi = -float(np.mean(gamma_kernel_batch(
            family, batch, Theta.from_vector(hi, has_s2), gamma)))
        loss_lo = -float(np.mean(gamma_kernel_batch(
            family, batch, Theta.from_vector(lo, has_s2), gamma)))
        out[i] = (loss_hi - loss_lo) / (2.0 * step)
    return out


def relative_errors(analytic: np.ndarray, oracle: np.ndarray,
                    floor: float = 1e-8) -> np.ndarray:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(oracle)), floor)
    return np.abs(analytic - oracle) / denom


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
