"""Initial points via random-sample consensus and penalty selection via
robust cross-validation."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, xlogy

from .families import SIGMA2_MIN, Family, Theta, gamma_kernel_batch

_NEWTON_ITER = 60
_NEWTON_RIDGE = 1e-8
_COEF_BOUND = 30.0


@dataclass(frozen=True)
class RansacConfig:
    """Trial count, subset size, inlier rule, and init perturbation.

    ``subset_size=None`` resolves to p + 2 clamped to the pilot size;
    ``inlier_threshold=None`` uses 2.5 x the median absolute deviance
    residual of each trial fit (scale free).  ``n_refine`` re-fits the
    winning consensus set and re-selects inliers that many times, which
    sharpens the consensus when single-trial fits are noisy (small
    subsets in high dimension).
    """

    n_trials: int = 100
    subset_size: int | None = None
    inlier_threshold: float | None = None
    noise_scale: float = 0.0
    seed: int = 0
    n_refine: int = 10


def ml_fit(family: Family, data) -> Theta:
    """Unpenalized maximum likelihood on a (small) dataset.

    Linear uses least squares with the ML variance; logistic and Poisson
    run a lightly ridged Newton iteration with bounded coefficients so
    separated or degenerate subsets cannot blow up.
    """
    X = np.column_stack([np.ones(len(data)), data.X])
    y = data.y
    if family is Family.LINEAR:
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        resid = y - X @ coef
        sigma2 = max(float(np.mean(resid**2)), SIGMA2_MIN)
        return Theta(float(coef[0]), coef[1:], sigma2)

    offset = data.offset if data.offset is not None else np.zeros(len(data))
    coef = np.zeros(X.shape[1])
    for _ in range(_NEWTON_ITER):
        lin = X @ coef
        if family is Family.LOGISTIC:
            mu = expit(lin)
            w = np.maximum(mu * (1.0 - mu), 1e-10)
        else:
            mu = np.exp(np.clip(lin + offset, -_COEF_BOUND, _COEF_BOUND))
            w = np.maximum(mu, 1e-10)
        grad = X.T @ (y - mu)
        hess = (X * w[:, None]).T @ X + _NEWTON_RIDGE * np.eye(X.shape[1])
        step = np.linalg.solve(hess, grad)
        coef = np.clip(coef + step, -_COEF_BOUND, _COEF_BOUND)
        if float(np.max(np.abs(step))) < 1e-10:
            break
    return Theta(float(coef[0]), coef[1:], None)


def deviance_residuals(family: Family, data, theta: Theta) -> np.ndarray:
    """Signed per-row lack-of-fit on the deviance scale."""
    lin = theta.beta0 + data.X @ theta.beta
    y = data.y
    if family is Family.LINEAR:
        return y - lin
    if family is Family.LOGISTIC:
        p = np.clip(expit(lin), 1e-12, 1.0 - 1e-12)
        dev = -2.0 * (xlogy(y, p) + xlogy(1.0 - y, 1.0 - p))
        return np.sign(y - p) * np.sqrt(np.maximum(dev, 0.0))
    offset = data.offset if data.offset is not None else 0.0
    mu = np.exp(np.clip(lin + offset, -_COEF_BOUND, _COEF_BOUND))
    dev = 2.0 * (xlogy(y, y / mu) - (y - mu))
    return np.sign(y - mu) * np.sqrt(np.maximum(dev, 0.0))


def ransac_init(family: Family, pilot_data, config: RansacConfig) -> Theta:
    """Consensus initial point from repeated small maximum-likelihood fits.

    Each trial fits a seeded random subset and counts inliers under the
    deviance-residual threshold; the winning trial is refit on its
    consensus set when that set is large enough, then optionally
    perturbed by seeded Gaussian noise.
    """
    n = len(pilot_data)
    subset_size = config.subset_size
    if subset_size is None:
        subset_size = min(pilot_data.p + 2, n)
    if subset_size > n:
        raise ValueError(f"subset_size {subset_size} exceeds pilot size {n}")

    rng = np.random.default_rng(config.seed)
    trials: list[tuple[Theta, np.ndarray]] = []
    for _ in range(config.n_trials):
        idx = rng.choice(n, size=subset_size, replace=False)
        try:
            theta = ml_fit(family, pilot_data.subset(idx))
        except np.linalg.LinAlgError:
            continue
        dev = np.abs(deviance_residuals(family, pilot_data, theta))
        trials.append((theta, dev))
    if not trials:
        raise ValueError("every consensus trial failed to fit")

    # One fixed inlier band for all trials: counts are only comparable
    # under a common threshold, and the sharpest trial fit sets the
    # cleanest residual scale.
    threshold = config.inlier_threshold
    if threshold is None:
        threshold = 2.5 * min(float(np.median(dev)) for _, dev in trials)
    threshold = max(threshold, 1e-12)

    counts = [int((dev <= threshold).sum()) for _, dev in trials]
    best = int(np.argmax(counts))
    best_theta, best_dev = trials[best]
    best_count = counts[best]
    best_mask = best_dev <= threshold

    min_fit_rows = pilot_data.p + 1
    if best_count >= subset_size:
        # Iterated consensus: refit on the inliers, re-derive the band from
        # the refit's own residual scale (never letting it grow), repeat.
        # Each round drops the worst-fitting tail, so noisy first-round
        # consensus sets walk toward the clean majority.  A stable mask
        # that still covers almost the whole pilot is the signature of a
        # fit-everything plateau; shrinking the band breaks it.
        for _ in range(max(config.n_refine, 1)):
            if int(best_mask.sum()) < min_fit_rows:
                break
            refit = ml_fit(family, pilot_data.subset(np.flatnonzero(best_mask)))
            dev = np.abs(deviance_residuals(family, pilot_data, refit))
            if config.inlier_threshold is None:
                threshold = min(max(2.5 * float(np.median(dev)), 1e-12), threshold)
            mask = dev <= threshold
            best_theta = refit
            if np.array_equal(mask, best_mask):
                if config.inlier_threshold is not None or mask.sum() <= 0.75 * n:
                    break
                threshold *= 0.7
                mask = dev <= threshold
                if np.array_equal(mask, best_mask):
                    break
            best_mask = mask
    else:
        warnings.warn(
            f"low consensus: best trial fits only {best_count} inliers; "
            f"returning the best trial fit")

    if best_theta.sigma2 is not None:
        # The consensus-set variance is biased low (the consensus trims the
        # clean tail); the MAD of the residuals over the whole pilot is a
        # contamination-proof scale for the same fit.
        dev = np.abs(deviance_residuals(family, pilot_data, best_theta))
        mad_scale = 1.4826 * float(np.median(dev))
        best_theta = Theta(best_theta.beta0, best_theta.beta,
                           max(mad_scale * mad_scale, SIGMA2_MIN))

    if config.noise_scale > 0.0:
        # Perturb the location parameters only; additive noise on a
        # variance could push it into a degenerate corner.
        best_theta = Theta(
            best_theta.beta0 + config.noise_scale * float(rng.standard_normal()),
            best_theta.beta + config.noise_scale * rng.standard_normal(pilot_data.p),
            best_theta.sigma2)
    return best_theta


def rocv_select(family: Family, data, lambda_grid, gamma: float,
                gamma0: float = 1.0, folds: int = 5, *,
                seed: int = 0, fit=None) -> tuple[float, list[float]]:
    """Pick the penalty weight by robust K-fold cross-validation.

    Each held-out observation is scored by the negated kernel at exponent
    ``gamma0`` under the fold fit; the grid entry with the smallest mean
    score wins (ties keep the smaller lambda, then the earlier index).
    ``folds = n`` gives leave-one-out.

    ``fit(family, train_data, lam, seed) -> Theta`` defaults to the
    two-phase stochastic pipeline.
    """
    lambda_grid = list(lambda_grid)
    if not lambda_grid:
        raise ValueError("lambda_grid must be nonempty")
    if folds < 2:
        raise ValueError("folds must be >= 2")
    n = len(data)
    folds = min(folds, n)
    if fit is None:
        from .pipeline import fit_theta

        def fit(fam, train, lam, fold_seed):
            return fit_theta(fam, train, gamma, lam, seed=fold_seed)

    rng = np.random.default_rng(seed)
    order = np.arange(n) if folds == n else rng.permutation(n)
    fold_slices = np.array_split(order, folds)

    scores: list[float] = []
    for j, lam in enumerate(lambda_grid):
        total = 0.0
        failed = False
        for k, held in enumerate(fold_slices):
            train_idx = np.setdiff1d(order, held, assume_unique=True)
            try:
                theta = fit(family, data.subset(train_idx), lam,
                            seed + 1000 * j + k)
                kern = gamma_kernel_batch(family, data.subset(held), theta, gamma0)
                total += -float(np.sum(kern))
            except Exception as exc:  # noqa: BLE001 - fold failure is scored, not fatal
                warnings.warn(f"fold {k} failed for lambda={lam!r}: {exc}")
                failed = True
                break
        scores.append(math.inf if failed else total / n)

    best = 0
    for j in range(1, len(lambda_grid)):
        if scores[j] < scores[best] or (
                scores[j] == scores[best] and lambda_grid[j] < lambda_grid[best]):
            best = j
    return lambda_grid[best], scores
