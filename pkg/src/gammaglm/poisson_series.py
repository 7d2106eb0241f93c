"""Powered-pmf series for the Poisson kernel and its gradient terms.

Both series run over the full Poisson support,

    S  = sum_y f(y | mu)^(1+g)
    W  = sum_y (y - y_obs) f(y | mu)^(1+g),

and converge for any finite ``mu`` because the term ratio behaves like
(mu / (y+1))^(1+g), which drops below one past the mode.  Terms are
evaluated in the log domain (``y!`` overflows float64 at y = 171) and
summation stops once the index is past the mode and the current term is
negligible relative to the accumulated absolute mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import SeriesTruncationError


@dataclass(frozen=True)
class SeriesTolerance:
    """Truncation control: relative tail tolerance and term cap."""

    rel_tol: float = 1e-12
    max_terms: int = 10_000

    def __post_init__(self):
        if not (0.0 < self.rel_tol < 1.0):
            raise ValueError(f"rel_tol must be in (0, 1), got {self.rel_tol}")
        if self.max_terms < 10:
            raise ValueError(f"max_terms must be >= 10, got {self.max_terms}")


DEFAULT_TOLERANCE = SeriesTolerance()


def _sum_series(mu: float, gamma: float, tol: SeriesTolerance,
                y_obs: float | None) -> tuple[float, int]:
    """Shared accumulator.

    ``y_obs is None`` sums the plain powered pmf; otherwise each term is
    weighted by (y - y_obs).  Returns (value, index of last summed term).
    """
    if mu < 0 or not math.isfinite(mu):
        raise ValueError(f"mu must be finite and nonnegative, got {mu}")
    if mu == 0.0:
        # Point mass at zero: f(0) = 1 and every other term vanishes.
        return (1.0 if y_obs is None else -float(y_obs), 0)

    one_pg = 1.0 + gamma
    log_mu = math.log(mu)
    # log f(y)^(1+g), advanced by one term per loop turn.
    log_term = -one_pg * mu
    # The weighted series changes sign at y_obs; the tail test only applies
    # once past both the mode and the sign flip, where terms decay by the
    # ratio test.
    past = mu if y_obs is None else max(mu, y_obs)
    total = 0.0
    abs_total = 0.0
    comp = 0.0  # Kahan carry
    y = 0
    while y < tol.max_terms:
        term = math.exp(log_term)
        if y_obs is not None:
            term *= (y - y_obs)
        t = term - comp
        s = total + t
        comp = (s - total) - t
        total = s
        abs_total += abs(term)
        if y > past and abs(term) < tol.rel_tol * abs_total:
            return total, y
        log_term += one_pg * (log_mu - math.log(y + 1.0))
        y += 1
    raise SeriesTruncationError(
        f"series did not converge within {tol.max_terms} terms "
        f"(mu={mu!r}, gamma={gamma!r})", mu=mu, gamma=gamma)


def power_normalizer(mu: float, gamma: float,
                     tol: SeriesTolerance = DEFAULT_TOLERANCE) -> float:
    """sum_y f(y | mu)^(1+gamma) over the Poisson support.

    Equals 1 exactly at gamma = 0 (a pmf sums to one) and lies in (0, 1]
    for gamma > 0.
    """
    value, _ = _sum_series(float(mu), float(gamma), tol, None)
    return value


def weighted_sum(mu: float, y_obs: float, gamma: float,
                 tol: SeriesTolerance = DEFAULT_TOLERANCE) -> float:
    """sum_y (y - y_obs) f(y | mu)^(1+gamma); signed.

    At gamma = 0 this is the pmf mean identity mu - y_obs.
    """
    if y_obs < 0:
        raise ValueError(f"y_obs must be nonnegative, got {y_obs}")
    value, _ = _sum_series(float(mu), float(gamma), tol, float(y_obs))
    return value
