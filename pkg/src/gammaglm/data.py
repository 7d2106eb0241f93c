"""Datasets, simulation generators, contamination, metrics, and CSV I/O."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import CsvParseError, InvalidTrimError
from .families import Family, Observation, Theta

# True nonzero coefficients of the linear simulation model, 1-based index
# -> value.
TRUE_COEFFICIENTS = {1: 1.0, 2: 2.0, 4: 4.0, 7: 7.0, 11: 11.0}
NOISE_SD = 0.5
OUTLIER_SHIFT = 20.0
OUTLIER_X_SD = 0.5
AR_CORRELATION = 0.2


@dataclass
class Dataset:
    """Observations stored column-wise: covariates, responses, offsets.

    ``offset`` holds per-row log-exposure for the Poisson family and is
    ``None`` otherwise.  Mini-batches are just row subsets.
    """

    X: np.ndarray
    y: np.ndarray
    family: Family
    offset: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.X.ndim != 2:
            raise ValueError("X must be a 2-d array")
        if self.y.shape != (self.X.shape[0],):
            raise ValueError("y length must match the number of rows of X")
        if self.offset is not None:
            self.offset = np.asarray(self.offset, dtype=float)
            if self.offset.shape != self.y.shape:
                raise ValueError("offset length must match y")
            if not np.isfinite(self.offset).all():
                raise ValueError("offsets must be finite")
        if self.family is Family.LOGISTIC and not np.isin(self.y, (0.0, 1.0)).all():
            raise ValueError("logistic responses must be 0 or 1")
        if self.family is Family.POISSON:
            if (self.y < 0).any() or (self.y != np.floor(self.y)).any():
                raise ValueError("poisson responses must be nonnegative integers")

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def subset(self, indices: np.ndarray) -> "Dataset":
        off = None if self.offset is None else self.offset[indices]
        return Dataset(self.X[indices], self.y[indices], self.family, off)

    def row(self, i: int) -> Observation:
        off = 0.0 if self.offset is None else float(self.offset[i])
        return Observation(self.X[i], float(self.y[i]), off)

    def rows(self) -> Iterator[Observation]:
        for i in range(len(self)):
            yield self.row(i)


class MiniBatchStream:
    """With-replacement mini-batch sampler over a fixed dataset.

    Sampling uniformly with replacement makes consecutive batches behave
    as i.i.d. draws from the empirical distribution, which is what the
    stochastic optimizer's expectation arguments assume.
    """

    def __init__(self, data: Dataset, seed):
        self.data = data
        self._rng = np.random.default_rng(seed)

    def draw(self, m: int) -> Dataset:
        idx = self._rng.integers(0, len(self.data), size=m)
        return self.data.subset(idx)


@dataclass(frozen=True)
class SimSpec:
    """Linear simulation layout: size, dimension, contamination, seed."""

    N: int
    p: int
    epsilon: float
    seed: int
    family: Family = Family.LINEAR

    def __post_init__(self):
        if self.N < 1 or self.p < 1:
            raise ValueError("N and p must be positive")
        if not (0.0 <= self.epsilon < 1.0):
            raise ValueError("epsilon must lie in [0, 1)")
        if self.p < max(TRUE_COEFFICIENTS):
            raise ValueError(
                f"p must be >= {max(TRUE_COEFFICIENTS)} to place the "
                f"nonzero coefficients")


@dataclass
class SimTruth:
    """Ground truth emitted next to a simulated dataset."""

    theta_star: Theta
    outlier_indices: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))

    def to_json(self) -> str:
        payload = {
            "beta0": self.theta_star.beta0,
            "beta": self.theta_star.beta.tolist(),
            "sigma2": self.theta_star.sigma2,
            "outlier_indices": sorted(int(i) for i in self.outlier_indices),
        }
        return json.dumps(payload, indent=2)


def true_theta(p: int) -> Theta:
    beta = np.zeros(p)
    for j, value in TRUE_COEFFICIENTS.items():
        beta[j - 1] = value
    return Theta(0.0, beta, NOISE_SD**2)


def simulate_linear(spec: SimSpec) -> tuple[Dataset, SimTruth]:
    """Contaminated sparse linear model.

    Clean rows draw covariates from an AR(1)-correlated normal
    (corr(x_i, x_j) = 0.2^|i-j|) and noise from N(0, 0.5^2); a seeded
    random floor(eps * N) of rows instead draw covariates from
    N(0, 0.5^2) i.i.d. and shift the noise mean to +20.
    """
    rng = np.random.default_rng(spec.seed)
    theta_star = true_theta(spec.p)

    n_out = int(spec.epsilon * spec.N)
    outlier_idx = rng.choice(spec.N, size=n_out, replace=False) if n_out else np.array([], dtype=int)

    # AR(1) recursion gives the 0.2^|i-j| correlation exactly.
    z = rng.standard_normal((spec.N, spec.p))
    X = np.empty_like(z)
    X[:, 0] = z[:, 0]
    rho = AR_CORRELATION
    scale = math.sqrt(1.0 - rho * rho)
    for j in range(1, spec.p):
        X[:, j] = rho * X[:, j - 1] + scale * z[:, j]

    noise = NOISE_SD * rng.standard_normal(spec.N)
    if n_out:
        X[outlier_idx] = OUTLIER_X_SD * rng.standard_normal((n_out, spec.p))
        noise[outlier_idx] = OUTLIER_SHIFT + NOISE_SD * rng.standard_normal(n_out)

    y = theta_star.beta0 + X @ theta_star.beta + noise
    data = Dataset(X, y, Family.LINEAR)
    return data, SimTruth(theta_star, np.sort(outlier_idx))


def contaminate_poisson(data: Dataset, rate: float, scale: float = 100.0,
                        seed: int = 0) -> Dataset:
    """Shift floor(rate * N) responses by floor(scale * exposure).

    The exposure of a row is exp(offset); contamination is additive so
    responses stay nonnegative counts.
    """
    if data.family is not Family.POISSON:
        raise ValueError("contaminate_poisson requires a poisson dataset")
    if data.offset is None:
        raise ValueError("contaminate_poisson requires offsets")
    if not (0.0 <= rate < 1.0):
        raise ValueError("rate must lie in [0, 1)")
    n_out = int(rate * len(data))
    y = data.y.copy()
    if n_out and scale != 0.0:
        rng = np.random.default_rng(seed)
        idx = rng.choice(len(data), size=n_out, replace=False)
        y[idx] = y[idx] + np.floor(scale * np.exp(data.offset[idx]))
    return Dataset(data.X.copy(), y, data.family, data.offset.copy())


def rtmspe(predictions, truths, alpha_trim: float) -> float:
    """Root trimmed mean squared prediction error.

    Averages the h smallest squared errors, h = floor((n+1)(1-alpha))
    clamped to n, then takes the square root.
    """
    predictions = np.asarray(predictions, dtype=float)
    truths = np.asarray(truths, dtype=float)
    if predictions.shape != truths.shape or predictions.ndim != 1 or len(predictions) < 1:
        raise ValueError("predictions and truths must be equal-length 1-d sequences")
    if not (0.0 <= alpha_trim < 1.0):
        raise ValueError("alpha_trim must lie in [0, 1)")
    n = len(predictions)
    h = min(int((n + 1) * (1.0 - alpha_trim)), n)
    if h < 1:
        raise InvalidTrimError(
            f"trim fraction {alpha_trim} leaves no observations (n={n})")
    sq = np.sort((predictions - truths) ** 2)
    return float(math.sqrt(np.mean(sq[:h])))


def predict_poisson_counts(data: Dataset, theta: Theta) -> np.ndarray:
    """floor(exp(offset + beta0 + x.beta)) per row; integer-valued."""
    lin = theta.beta0 + data.X @ theta.beta
    if data.offset is not None:
        lin = lin + data.offset
    return np.floor(np.exp(lin))


@dataclass(frozen=True)
class CsvSchema:
    """Column roles for CSV ingestion.

    ``covariates=None`` takes every non-response, non-offset column in
    header order.  ``log_offset`` log-transforms the raw exposure column
    on load (for files that store exposure, not log-exposure).
    """

    response: str
    family: Family
    covariates: tuple[str, ...] | None = None
    offset: str | None = None
    log_offset: bool = False


def load_csv(path, schema: CsvSchema) -> Dataset:
    """Read a header-first CSV into a dataset, mapping columns by name."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError(f"{path}: empty file, header row required", line=1)
        header = [h.strip() for h in header]
        positions = {name: i for i, name in enumerate(header)}

        def column(name: str) -> int:
            if name not in positions:
                raise CsvParseError(f"{path}: missing column {name!r}")
            return positions[name]

        y_col = column(schema.response)
        off_col = column(schema.offset) if schema.offset is not None else None
        if schema.covariates is None:
            x_cols = [i for i, name in enumerate(header)
                      if i != y_col and i != off_col]
        else:
            x_cols = [column(name) for name in schema.covariates]

        # Only mapped columns are parsed; unmapped columns (ids, urls) may
        # hold anything.
        needed = list(x_cols) + [y_col] + ([off_col] if off_col is not None else [])
        rows_x, rows_y, rows_off = [], [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CsvParseError(
                    f"{path}: line {line_no}: expected {len(header)} fields, "
                    f"got {len(row)}", line=line_no)
            try:
                values = {i: float(row[i]) for i in needed}
            except ValueError:
                bad = next(row[i] for i in needed if not _is_number(row[i]))
                raise CsvParseError(
                    f"{path}: line {line_no}: non-numeric cell {bad!r}",
                    line=line_no)
            rows_x.append([values[i] for i in x_cols])
            rows_y.append(values[y_col])
            if off_col is not None:
                rows_off.append(values[off_col])

    if not rows_y:
        raise CsvParseError(f"{path}: no data rows")
    X = np.asarray(rows_x, dtype=float)
    y = np.asarray(rows_y, dtype=float)
    offset = None
    if off_col is not None:
        offset = np.asarray(rows_off, dtype=float)
        if schema.log_offset:
            if (offset <= 0).any():
                bad = int(np.argmax(offset <= 0))
                raise CsvParseError(
                    f"{path}: line {bad + 2}: exposure must be positive to "
                    f"log-transform", line=bad + 2)
            offset = np.log(offset)
    return Dataset(X, y, schema.family, offset)


def _is_number(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def save_csv(data: Dataset, path) -> None:
    """Write a dataset as x1..xp, y[, offset] with full float precision."""
    path = Path(path)
    header = [f"x{j + 1}" for j in range(data.p)] + ["y"]
    if data.offset is not None:
        header.append("offset")
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for i in range(len(data)):
            row = [_fmt(v) for v in data.X[i]] + [_fmt(data.y[i])]
            if data.offset is not None:
                row.append(_fmt(data.offset[i]))
            writer.writerow(row)


def _fmt(value: float) -> str:
    return repr(float(value))


def default_schema_for(data_or_family, offset_present: bool = False) -> CsvSchema:
    """Schema matching :func:`save_csv` output layout."""
    family = data_or_family.family if isinstance(data_or_family, Dataset) else data_or_family
    offset = "offset" if offset_present or (
        isinstance(data_or_family, Dataset) and data_or_family.offset is not None) else None
    return CsvSchema(response="y", family=family, offset=offset, log_offset=False)
