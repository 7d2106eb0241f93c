"""End-to-end fitting: pilot estimation, consensus init, optimizer run.

The steps mirror the experimental protocol: hold out a pilot subsample,
build an initial point by random-sample consensus (optionally noised),
estimate the smoothness constant and gradient variance on the pilot,
derive the step/mini-batch policy, then run the requested optimizer on a
seeded with-replacement stream over the full training data.
"""

from __future__ import annotations

import numpy as np

from .data import Dataset, MiniBatchStream
from .families import Family, Theta
from .initialize import RansacConfig, ransac_init
from .mm import mm_coordinate_descent
from .objective import emp_risk
from .optimizer import (
    FitReport,
    RspgConfig,
    estimate_smoothness_variance,
    projected_gradient_norm,
    rspg_run,
    sgd_run,
    two_phase_rspg_run,
)

OPTIMIZERS = ("rspg", "2rspg", "sgd", "mm")
DEFAULT_PILOT_SIZE = 200


def fit(family: Family, data: Dataset, gamma: float, lam: float,
        optimizer: str = "2rspg", seed: int = 0, *,
        n_total: int | None = None, pilot_size: int = DEFAULT_PILOT_SIZE,
        n_cand: int = 5, n_post: int | None = None, d_tilde: float = 1.0,
        sgd_batch: int = 10, noise_scale: float = 0.1,
        ransac_trials: int = 100, mm_max_iter: int = 500, mm_tol: float = 1e-8,
        init: Theta | None = None, trace: bool = False) -> FitReport:
    """Fit one model and return its report.

    All randomness (pilot subsample, consensus trials, batch stream, stop
    draws) derives from ``seed``, so a repeated call reproduces the report
    bit for bit.
    """
    if optimizer not in OPTIMIZERS:
        raise ValueError(f"unknown optimizer {optimizer!r}, expected one of {OPTIMIZERS}")
    seeds = np.random.SeedSequence(seed).generate_state(4)

    if init is None:
        pilot_rng = np.random.default_rng(seeds[0])
        pilot_idx = pilot_rng.choice(len(data), size=min(pilot_size, len(data)),
                                     replace=False)
        pilot = data.subset(pilot_idx)
        # Subsets larger than the p + 2 minimum leave the trial fits spare
        # degrees of freedom, which high-dimensional consensus needs to
        # separate the clean majority from contamination.
        subset = min(len(pilot), data.p + 2 + max(len(pilot) // 4, 10))
        init = ransac_init(family, pilot, RansacConfig(
            n_trials=ransac_trials, subset_size=subset,
            noise_scale=noise_scale, seed=int(seeds[1])))
    else:
        pilot_idx = np.arange(min(pilot_size, len(data)))
        pilot = data.subset(pilot_idx)

    if optimizer == "mm":
        if family is not Family.LINEAR:
            raise ValueError("the mm optimizer supports the linear family only")
        iterations = []
        theta = mm_coordinate_descent(data, gamma, lam, init,
                                      max_iter=mm_max_iter, tol=mm_tol,
                                      on_iteration=iterations.append)
        L, _ = estimate_smoothness_variance(family, pilot, theta, gamma,
                                            seed=int(seeds[2]))
        pg = projected_gradient_norm(family, data, theta, 1.0 / (2.0 * L),
                                     gamma, lam)
        risk = emp_risk(data, theta, gamma, lam).value
        history = [{"t": i + 1, "objective": s.objective}
                   for i, s in enumerate(iterations)] if trace else None
        return FitReport(theta, len(iterations), pg, risk, history)

    L, tau2 = estimate_smoothness_variance(family, pilot, init, gamma,
                                           seed=int(seeds[2]))
    config = RspgConfig(
        gamma=gamma, lam=lam, n_total=n_total or len(data), L=L, tau2=tau2,
        d_tilde=d_tilde, n_cand=n_cand, n_post=n_post, seed=int(seeds[3]))
    stream = MiniBatchStream(data, seed=int(seeds[3]) + 1)
    if optimizer == "rspg":
        return rspg_run(family, stream, init, config, trace=trace)
    if optimizer == "2rspg":
        return two_phase_rspg_run(family, stream, init, config, trace=trace)
    return sgd_run(family, stream, init, config, batch_size=sgd_batch,
                   trace=trace)


def fit_theta(family: Family, data: Dataset, gamma: float, lam: float,
              seed: int = 0, **kwargs) -> Theta:
    """Parameters only, via the two-phase pipeline (cross-validation hook)."""
    return fit(family, data, gamma, lam, optimizer="2rspg", seed=seed,
               **kwargs).theta_hat
