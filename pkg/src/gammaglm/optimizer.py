"""Stochastic proximal-gradient optimizers over the transformed objective.

Three drivers share one update: a mini-batch gradient of the negated
kernel followed by a closed-form prox step (soft threshold on the
coefficients, box projection on the variance).

* ``rspg_run``     draws a stopping index R from the weighted
  distribution over {1..T} up front, runs R-1 updates with a constant
  step, and returns the R-th iterate.
* ``two_phase_rspg_run`` draws several candidate stop indices, snapshots
  each candidate during a single forward pass, and keeps the candidate
  with the smallest prox displacement measured on fresh post-samples.
* ``sgd_run``      is the decaying-step baseline that returns the final
  iterate.

The constant step 1/(2L) and the mini-batch size
ceil(min(max(1, tau sqrt(6N) / (4 L D)), N)) come from the optimizer's
published complexity analysis; ``minibatch_policy`` computes them from
smoothness and gradient-variance estimates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidScheduleError
from .families import (
    SIGMA2_MIN,
    Family,
    GradientBundle,
    Theta,
    gradient,
)
from .objective import emp_risk


@dataclass
class RspgConfig:
    """Run settings: divergence and penalty weights, sample budget, and
    the smoothness / variance estimates that drive the step policy.

    ``psi_star`` optionally supplies a known lower bound of the objective;
    when present the radius estimate D = sqrt((Psi(init) - psi_star) / L)
    replaces ``d_tilde`` in the mini-batch policy.
    """

    gamma: float
    lam: float
    n_total: int
    L: float
    tau2: float
    d_tilde: float = 1.0
    n_cand: int = 5
    n_post: int | None = None
    seed: int = 0
    alpha_strong: float = 1.0  # squared-Euclidean prox term
    psi_star: float | None = None

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.n_total < 1:
            raise ValueError("n_total must be positive")
        if self.L <= 0 or self.tau2 < 0 or self.d_tilde <= 0:
            raise ValueError("require L > 0, tau2 >= 0, d_tilde > 0")
        if self.n_cand < 1:
            raise ValueError("n_cand must be positive")

    def resolved_n_post(self) -> int:
        return self.n_post if self.n_post is not None else math.ceil(self.n_total / 10)


@dataclass
class FitReport:
    """Fit outcome: parameters, stop index, stationarity proxy, risk."""

    theta_hat: Theta
    stop_index: int
    pg_norm: float
    emp_risk: float
    trace: list | None = None


def soft_threshold(t: np.ndarray, a: float) -> np.ndarray:
    return np.sign(t) * np.maximum(np.abs(t) - a, 0.0)


def prox_step(theta: Theta, grad: GradientBundle, eta: float, lam: float) -> Theta:
    """One proximal update: gradient step, soft threshold, variance floor."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    beta0 = theta.beta0 - eta * grad.g0
    beta = soft_threshold(theta.beta - eta * grad.g_beta, eta * lam)
    sigma2 = theta.sigma2
    if sigma2 is not None:
        if grad.g_sigma2 is None:
            raise ValueError("gradient bundle lacks the sigma2 component")
        sigma2 = max(sigma2 - eta * grad.g_sigma2, SIGMA2_MIN)
    return Theta(beta0, beta, sigma2)


def stopping_distribution(T: int, etas, L: float,
                          alpha_strong: float = 1.0) -> np.ndarray:
    """Probability over stop indices 1..T, weight(t) = a*eta_t - L*eta_t^2.

    Requires 0 < eta_t <= a/L with strict inequality somewhere; constant
    steps a/(2L) give the exact uniform distribution.
    """
    etas = np.asarray(etas, dtype=float)
    if etas.shape != (T,):
        raise InvalidScheduleError(f"expected {T} step sizes, got {etas.shape}")
    if (etas <= 0).any():
        raise InvalidScheduleError("step sizes must be positive")
    weights = alpha_strong * etas - L * etas * etas
    if (weights < 0).any():
        raise InvalidScheduleError(
            "step sizes must not exceed alpha/L (negative stop weight)")
    total = float(weights.sum())
    if total <= 0.0:
        raise InvalidScheduleError(
            "every step size equals alpha/L; stopping weights vanish")
    if np.all(etas == etas[0]):
        return np.full(T, 1.0 / T)
    return weights / total


def minibatch_policy(N: int, L: float, tau: float, D_tilde: float,
                     alpha_strong: float = 1.0) -> tuple[int, int, float]:
    """Constant step/mini-batch policy for a total budget of N samples.

    Returns (m, T, eta) with m = ceil(min(max(1, tau sqrt(6N)/(4 L D)), N)),
    T = floor(N/m), eta = alpha/(2L).
    """
    if N < 1:
        raise ValueError("N must be positive")
    m_raw = min(max(1.0, tau * math.sqrt(6.0 * N) / (4.0 * L * D_tilde)), float(N))
    m = int(math.ceil(m_raw))
    T = N // m
    eta = alpha_strong / (2.0 * L)
    return m, T, eta


def _policy_from_config(config: RspgConfig, stream, init: Theta) -> tuple[int, int, float]:
    d = config.d_tilde
    if config.psi_star is not None:
        risk0 = emp_risk(stream.data, init, config.gamma, config.lam).value
        gap = max(risk0 - config.psi_star, 0.0)
        d = max(math.sqrt(gap / config.L), 1e-12)
    return minibatch_policy(config.n_total, config.L, math.sqrt(config.tau2),
                            d, config.alpha_strong)


def displacement_score(family: Family, theta: Theta, batch, eta: float,
                       gamma: float, lam: float) -> float:
    """(1/eta) || theta - prox(theta, grad(batch), eta, lam) ||.

    The post-optimization phase ranks candidates by this proxy of the
    projected gradient norm, computed on fresh samples.
    """
    bundle = gradient(family, batch, theta, gamma)
    moved = prox_step(theta, bundle, eta, lam)
    return float(np.linalg.norm(theta.to_vector() - moved.to_vector()) / eta)


def rspg_run(family: Family, stream, init: Theta, config: RspgConfig,
             trace: bool = False) -> FitReport:
    """Single-phase run: draw R, iterate R-1 prox steps, return iterate R."""
    init.validate(family, stream.data.p)
    m, T, eta = _policy_from_config(config, stream, init)
    probs = stopping_distribution(T, np.full(T, eta), config.L, config.alpha_strong)
    rng = np.random.default_rng(config.seed)
    R = int(rng.choice(T, p=probs)) + 1

    theta = init.copy()
    history = [] if trace else None
    for t in range(1, R):
        batch = stream.draw(m)
        bundle = gradient(family, batch, theta, config.gamma)
        theta = prox_step(theta, bundle, eta, config.lam)
        if trace:
            history.append({"t": t, "grad_norm": bundle.norm()})

    post = stream.draw(config.resolved_n_post())
    pg = displacement_score(family, theta, post, eta, config.gamma, config.lam)
    risk = emp_risk(stream.data, theta, config.gamma, config.lam).value
    return FitReport(theta, R, pg, risk, history)


def two_phase_rspg_run(family: Family, stream, init: Theta, config: RspgConfig,
                       trace: bool = False) -> FitReport:
    """Candidate draws plus post-optimization selection.

    Runs a single forward pass to the largest candidate index, snapshots
    the iterate at every candidate index, then scores each snapshot by
    its prox displacement on one shared batch of fresh post-samples.
    Ties keep the earliest candidate.
    """
    init.validate(family, stream.data.p)
    m, T, eta = _policy_from_config(config, stream, init)
    probs = stopping_distribution(T, np.full(T, eta), config.L, config.alpha_strong)
    rng = np.random.default_rng(config.seed)
    stops = [int(rng.choice(T, p=probs)) + 1 for _ in range(config.n_cand)]

    snapshots: dict[int, Theta] = {}
    theta = init.copy()
    if 1 in stops:
        snapshots[1] = theta.copy()
    history = [] if trace else None
    for t in range(1, max(stops)):
        batch = stream.draw(m)
        bundle = gradient(family, batch, theta, config.gamma)
        theta = prox_step(theta, bundle, eta, config.lam)
        if trace:
            history.append({"t": t, "grad_norm": bundle.norm()})
        if (t + 1) in stops:
            snapshots[t + 1] = theta.copy()

    post = stream.draw(config.resolved_n_post())
    scores = [displacement_score(family, snapshots[R], post, eta,
                                 config.gamma, config.lam)
              for R in stops]
    best = int(np.argmin(scores))  # argmin keeps the first minimum
    chosen = snapshots[stops[best]]
    risk = emp_risk(stream.data, chosen, config.gamma, config.lam).value
    return FitReport(chosen, stops[best], scores[best], risk, history)


def sgd_run(family: Family, stream, init: Theta, config: RspgConfig,
            step_schedule=None, batch_size: int = 10,
            trace: bool = False) -> FitReport:
    """Decaying-step baseline; returns the final iterate.

    ``step_schedule`` maps the 1-based iteration index to a step size and
    defaults to 1/(2L sqrt(t)).
    """
    init.validate(family, stream.data.p)
    if batch_size < 1:
        raise ValueError("batch_size must be positive")
    if step_schedule is None:
        base = 1.0 / (2.0 * config.L)
        step_schedule = lambda t: base / math.sqrt(t)
    T = max(config.n_total // batch_size, 1)

    theta = init.copy()
    history = [] if trace else None
    eta = step_schedule(1)
    for t in range(1, T + 1):
        eta = step_schedule(t)
        batch = stream.draw(batch_size)
        bundle = gradient(family, batch, theta, config.gamma)
        theta = prox_step(theta, bundle, eta, config.lam)
        if trace:
            history.append({"t": t, "grad_norm": bundle.norm(), "eta": eta})

    post = stream.draw(config.resolved_n_post())
    pg = displacement_score(family, theta, post, eta, config.gamma, config.lam)
    risk = emp_risk(stream.data, theta, config.gamma, config.lam).value
    return FitReport(theta, T, pg, risk, history)


def estimate_smoothness_variance(family: Family, pilot_data, theta0: Theta,
                                 gamma: float, n_probe: int = 20,
                                 probe_scale: float = 0.1,
                                 seed: int = 0) -> tuple[float, float]:
    """Estimate the gradient Lipschitz constant and per-sample variance.

    L is the largest secant slope ||grad(a) - grad(b)|| / ||a - b|| over
    seeded random parameter pairs near ``theta0`` of the pilot-data mean
    loss; tau2 is the empirical variance of single-sample gradients
    around the pilot full gradient at ``theta0``.

    Probes are uniform random directions of total length ``probe_scale``
    (dimension independent), so the secants measure the curvature of the
    ``probe_scale``-neighbourhood in any dimension.
    """
    if len(pilot_data) < 2:
        raise ValueError("pilot data must hold at least 2 samples")
    rng = np.random.default_rng(seed)
    has_sigma2 = theta0.sigma2 is not None
    base = theta0.to_vector()

    def perturbed() -> Theta:
        direction = rng.standard_normal(base.shape)
        direction /= max(float(np.linalg.norm(direction)), 1e-300)
        vec = base + probe_scale * direction
        if has_sigma2:
            # Probe the smoothness of the region the optimizer actually
            # traverses: the variance curvature blows up near the floor,
            # so its probes stay within a factor-2 band of the start.
            vec[-1] = float(np.clip(vec[-1], max(base[-1] / 2.0, SIGMA2_MIN),
                                    base[-1] * 2.0))
        return Theta.from_vector(vec, has_sigma2)

    lipschitz = 0.0
    for _ in range(n_probe):
        ta, tb = perturbed(), perturbed()
        gap = np.linalg.norm(ta.to_vector() - tb.to_vector())
        if gap == 0.0:
            continue
        ga = gradient(family, pilot_data, ta, gamma).to_vector()
        gb = gradient(family, pilot_data, tb, gamma).to_vector()
        lipschitz = max(lipschitz, float(np.linalg.norm(ga - gb)) / gap)
    if lipschitz == 0.0:
        lipschitz = 1e-12

    full = gradient(family, pilot_data, theta0, gamma).to_vector()
    deviations = []
    for i in range(len(pilot_data)):
        gi = gradient(family, pilot_data.subset(np.array([i])), theta0, gamma).to_vector()
        deviations.append(float(np.sum((gi - full) ** 2)))
    tau2 = float(np.mean(deviations))
    if tau2 <= 1e-28 * (1.0 + float(np.sum(full * full))):
        # All single-sample gradients coincide up to roundoff.
        tau2 = 0.0
        warnings.warn("degenerate pilot: single-sample gradients are identical, tau2 = 0")
    return lipschitz, tau2


def projected_gradient_norm(family: Family, full_data, theta: Theta,
                            eta: float, gamma: float, lam: float) -> float:
    """|| theta - prox(theta, full gradient, eta, lam) || / eta.

    Vanishes exactly at stationary points of the penalized objective; at
    lam = 0 in the interior it equals the full gradient norm.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    return displacement_score(family, theta, full_data, eta, gamma, lam)
