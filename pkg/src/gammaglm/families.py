"""GLM families, the gamma-divergence kernel, and its gradient terms.

The kernel of an observation (x, y) under parameters theta is

    k(y | x; theta) = f(y | x; theta)^g / ( int f(y | x; theta)^(1+g) dy )^(g/(1+g)),

where g > 0 is the divergence exponent.  The stochastic training loss is
the negated kernel, so every outlying observation (tiny conditional
density) contributes a vanishing weight f^g to both the loss and its
gradient.  Closed forms per family:

    linear    k = ((1+g) / (2 pi s2))^(g/(2(1+g))) * exp(-g r^2 / (2 s2)),
              r the residual, s2 the error variance;
    logistic  k = exp(g y u) / (1 + exp((1+g) u))^(g/(1+g)),  u = b0 + x.b,
              evaluated in the log domain;
    poisson   k = f(y | mu)^g / S(mu)^(g/(1+g)),  mu = exp(b0 + x.b + offset),
              with S the powered-pmf series from :mod:`poisson_series`.

The per-family gradient helpers return the exact mini-batch-averaged
gradient of the negated kernel, component by component, matching the
closed-form update terms used by the stochastic optimizer.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, log_expit

from .errors import NumericalOverflowError
from .poisson_series import (
    DEFAULT_TOLERANCE,
    SeriesTolerance,
    power_normalizer,
    weighted_sum,
)

# Error-variance floor for the linear family; the prox step projects onto
# [SIGMA2_MIN, inf).
SIGMA2_MIN = 1e-6

# Poisson linear predictors are clamped to this band before exponentiation
# so that mu and the pmf-power series stay finite.
POISSON_LINPRED_BOUND = 30.0

# Kernels are strictly positive by definition; this floor keeps extreme
# outliers from underflowing to an exact zero, which would poison the
# log-domain objective.
KERNEL_FLOOR = 1e-300


class Family(str, enum.Enum):
    """The three supported conditional models."""

    LINEAR = "linear"
    LOGISTIC = "logistic"
    POISSON = "poisson"


@dataclass
class Theta:
    """Parameter bundle: intercept, coefficients, and (linear only) variance."""

    beta0: float
    beta: np.ndarray
    sigma2: float | None = None

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        if self.beta.ndim != 1:
            raise ValueError("beta must be a 1-d coefficient vector")

    def validate(self, family: Family, p: int | None = None) -> None:
        if p is not None and self.beta.shape[0] != p:
            raise ValueError(
                f"beta has length {self.beta.shape[0]}, expected {p}")
        if family is Family.LINEAR:
            if self.sigma2 is None:
                raise ValueError("linear family requires sigma2")
            if self.sigma2 < SIGMA2_MIN:
                raise ValueError(f"sigma2 must be >= {SIGMA2_MIN}")
        elif self.sigma2 is not None:
            raise ValueError(f"{family.value} family does not carry sigma2")

    def copy(self) -> "Theta":
        return Theta(self.beta0, self.beta.copy(), self.sigma2)

    def to_vector(self) -> np.ndarray:
        """Flat [beta0, beta, (sigma2)] layout used by norms and probes."""
        parts = [np.array([self.beta0]), self.beta]
        if self.sigma2 is not None:
            parts.append(np.array([self.sigma2]))
        return np.concatenate(parts)

    @staticmethod
    def from_vector(vec: np.ndarray, has_sigma2: bool) -> "Theta":
        vec = np.asarray(vec, dtype=float)
        if has_sigma2:
            return Theta(float(vec[0]), vec[1:-1].copy(), float(vec[-1]))
        return Theta(float(vec[0]), vec[1:].copy(), None)


@dataclass
class Observation:
    """A single row: covariates, response, and optional log-exposure."""

    x: np.ndarray
    y: float
    offset: float = 0.0


@dataclass
class GradientBundle:
    """Gradient of the mini-batch-averaged negated kernel."""

    g0: float
    g_beta: np.ndarray
    g_sigma2: float | None = None

    def to_vector(self) -> np.ndarray:
        parts = [np.array([self.g0]), self.g_beta]
        if self.g_sigma2 is not None:
            parts.append(np.array([self.g_sigma2]))
        return np.concatenate(parts)

    def norm(self) -> float:
        return float(np.linalg.norm(self.to_vector()))


def _check_finite(values: np.ndarray, what: str) -> np.ndarray:
    bad = ~np.isfinite(values)
    if bad.any():
        i = int(np.argmax(bad))
        raise NumericalOverflowError(
            f"{what} overflowed at sample index {i}", sample_index=i)
    return values


def _linear_predictor(data, theta: Theta) -> np.ndarray:
    return theta.beta0 + data.X @ theta.beta


def _poisson_log_mu(data, theta: Theta) -> np.ndarray:
    lin = _linear_predictor(data, theta)
    if data.offset is not None:
        lin = lin + data.offset
    return np.clip(lin, -POISSON_LINPRED_BOUND, POISSON_LINPRED_BOUND)


def _poisson_log_pmf(y: np.ndarray, log_mu: np.ndarray) -> np.ndarray:
    mu = np.exp(log_mu)
    return -mu + y * log_mu - gammaln(y + 1.0)


def gamma_kernel_batch(family: Family, data, theta: Theta, gamma: float,
                       tol: SeriesTolerance = DEFAULT_TOLERANCE) -> np.ndarray:
    """Kernel value of every row of ``data``; strictly positive."""
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if family is Family.LINEAR:
        s2 = theta.sigma2
        r = data.y - _linear_predictor(data, theta)
        scale = ((1.0 + gamma) / (2.0 * math.pi * s2)) ** (gamma / (2.0 * (1.0 + gamma)))
        k = scale * np.exp(-gamma * r * r / (2.0 * s2))
    elif family is Family.LOGISTIC:
        u = _linear_predictor(data, theta)
        # log k = g*y*u - (g/(1+g)) * log(1 + exp((1+g) u)), via softplus.
        z = (1.0 + gamma) * u
        softplus = np.logaddexp(0.0, z)
        k = np.exp(gamma * data.y * u - (gamma / (1.0 + gamma)) * softplus)
    elif family is Family.POISSON:
        log_mu = _poisson_log_mu(data, theta)
        log_f = _poisson_log_pmf(data.y, log_mu)
        mu = np.exp(log_mu)
        log_s = np.array([math.log(power_normalizer(m, gamma, tol)) for m in mu])
        k = np.exp(gamma * log_f - (gamma / (1.0 + gamma)) * log_s)
    else:  # pragma: no cover
        raise ValueError(f"unknown family {family!r}")
    return np.maximum(_check_finite(k, "gamma kernel"), KERNEL_FLOOR)


def gamma_kernel(family: Family, obs: Observation, theta: Theta, gamma: float,
                 tol: SeriesTolerance = DEFAULT_TOLERANCE) -> float:
    """Kernel value of a single observation."""
    from .data import Dataset  # local import, avoids a module cycle

    data = Dataset(X=obs.x[None, :], y=np.array([float(obs.y)]), family=family,
                   offset=np.array([obs.offset]))
    return float(gamma_kernel_batch(family, data, theta, gamma, tol)[0])


def linear_gradient(batch, theta: Theta,
                    gamma: float) -> tuple[float, np.ndarray, float]:
    """Mini-batch gradient terms for the linear family.

    Returns the averaged gradient of the negated kernel with respect to
    (beta0, beta, sigma2).  Every term carries a leading factor gamma and
    the density-power weight exp(-g r^2 / (2 s2)), which is what silences
    large-residual samples.
    """
    s2 = theta.sigma2
    r = batch.y - _linear_predictor(batch, theta)
    scale = ((1.0 + gamma) / (2.0 * math.pi * s2)) ** (gamma / (2.0 * (1.0 + gamma)))
    w = np.exp(-gamma * r * r / (2.0 * s2))
    m = len(batch)
    core = gamma * r / s2 * scale * w
    g0 = -float(np.sum(core)) / m
    g_beta = -(batch.X.T @ core) / m
    g_s2 = float(np.sum(
        0.5 * gamma * scale * (1.0 / ((1.0 + gamma) * s2) - r * r / (s2 * s2)) * w
    )) / m
    _check_finite(np.concatenate([[g0, g_s2], g_beta]), "linear gradient")
    return g0, g_beta, g_s2


def logistic_gradient(batch, theta: Theta,
                      gamma: float) -> tuple[float, np.ndarray]:
    """Mini-batch gradient terms for the logistic family.

    The bracket y - F_(1+g)(u) is computed through expit of the signed
    predictor so that saturated correct predictions underflow cleanly to
    zero instead of cancelling in float arithmetic.
    """
    u = _linear_predictor(batch, theta)
    z = (1.0 + gamma) * u
    y = batch.y
    # |y - expit(z)| is expit(-z) when y = 1 and expit(z) when y = 0; the
    # complement form keeps saturated samples exact where 1 - expit(z)
    # would cancel.
    sign = np.where(y == 1.0, 1.0, -1.0)
    log_mag = (gamma * y * u
               + log_expit(-sign * z)
               - (gamma / (1.0 + gamma)) * np.logaddexp(0.0, z))
    core = gamma * sign * np.exp(log_mag)
    m = len(batch)
    g0 = -float(np.sum(core)) / m
    g_beta = -(batch.X.T @ core) / m
    _check_finite(np.concatenate([[g0], g_beta]), "logistic gradient")
    return g0, g_beta


def poisson_gradient(batch, theta: Theta, gamma: float,
                     tol: SeriesTolerance = DEFAULT_TOLERANCE
                     ) -> tuple[float, np.ndarray]:
    """Mini-batch gradient terms for the Poisson family.

    Uses the two pmf-power series per sample; the offset enters mu and is
    held fixed by the gradient.
    """
    log_mu = _poisson_log_mu(batch, theta)
    mu = np.exp(log_mu)
    log_f = _poisson_log_pmf(batch.y, log_mu)
    m = len(batch)
    core = np.empty(m)
    for i in range(m):
        s = power_normalizer(mu[i], gamma, tol)
        w = weighted_sum(mu[i], batch.y[i], gamma, tol)
        log_ratio = gamma * log_f[i] - (1.0 + 2.0 * gamma) / (1.0 + gamma) * math.log(s)
        core[i] = gamma * w * math.exp(log_ratio)
    g0 = float(np.sum(core)) / m
    g_beta = (batch.X.T @ core) / m
    _check_finite(np.concatenate([[g0], g_beta]), "poisson gradient")
    return g0, g_beta


def gradient(family: Family, batch, theta: Theta, gamma: float,
             tol: SeriesTolerance = DEFAULT_TOLERANCE) -> GradientBundle:
    """Family-dispatched gradient of the averaged negated kernel."""
    if family is Family.LINEAR:
        g0, g_beta, g_s2 = linear_gradient(batch, theta, gamma)
        return GradientBundle(g0, g_beta, g_s2)
    if family is Family.LOGISTIC:
        g0, g_beta = logistic_gradient(batch, theta, gamma)
        return GradientBundle(g0, g_beta)
    if family is Family.POISSON:
        g0, g_beta = poisson_gradient(batch, theta, gamma, tol)
        return GradientBundle(g0, g_beta)
    raise ValueError(f"unknown family {family!r}")  # pragma: no cover
