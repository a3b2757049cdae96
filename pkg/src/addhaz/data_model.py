"""Core value types: datasets, time grids, priors, and fit results.

The hazard model is lambda(t) = lambda0(t) + beta'z with nonnegative
regression coefficients and nonnegative covariates, observed under right
censoring as (time, event, covariates) triplets.  The baseline hazard is
treated as piecewise constant on a grid 0 = s_0 < s_1 < ... < s_m = t_final
whose intervals are the left-open, right-closed cells (s_{j-1}, s_j].
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateGrid,
    DimensionMismatch,
    NoEvents,
    NonNegativityViolation,
    OutOfRange,
    SingularCovariance,
)

__all__ = [
    "Observation",
    "SurvivalDataset",
    "TimeGrid",
    "BetaPrior",
    "GammaProcessPrior",
    "BaselineIncrementPosterior",
    "FitResult",
    "validate_dataset",
    "grid_from_quantiles",
    "interval_index",
]


@dataclass(frozen=True)
class Observation:
    """One right-censored subject: follow-up time, event flag, covariates."""

    time: float
    event: bool
    covariates: tuple[float, ...]


class SurvivalDataset:
    """Immutable collection of observations, stored as numpy arrays.

    Attributes
    ----------
    times : (n,) float array of follow-up times, all finite and >= 0.
    events : (n,) bool array, True where the time is an observed event.
    covariates : (n, k) float array, entries >= 0 unless the dataset was
        built with ``allow_signed=True`` (used for pre-transformed data
        whose analysis stays on the flat-prior path).
    """

    __slots__ = ("times", "events", "covariates")

    def __init__(self, times, events, covariates, *, allow_signed=False):
        times = np.asarray(times, dtype=float)
        events = np.asarray(events, dtype=bool)
        covariates = np.asarray(covariates, dtype=float)
        if covariates.ndim != 2:
            raise DimensionMismatch("covariates must form a 2-d array")
        n = times.shape[0]
        if times.ndim != 1 or events.shape != (n,) or covariates.shape[0] != n:
            raise DimensionMismatch(
                "times, events and covariates must agree on the number of rows"
            )
        if n == 0:
            raise NoEvents("empty dataset")
        if covariates.shape[1] < 1:
            raise DimensionMismatch("at least one covariate column is required")
        if not np.all(np.isfinite(times)):
            raise OutOfRange("non-finite follow-up time")
        if np.any(times < 0):
            raise NonNegativityViolation("follow-up times must be >= 0")
        if not np.all(np.isfinite(covariates)):
            raise OutOfRange("non-finite covariate value")
        if not allow_signed and np.any(covariates < 0):
            raise NonNegativityViolation(
                "covariates must be >= 0 (pass allow_signed=True to bypass "
                "for flat-prior analyses of pre-transformed data)"
            )
        if not np.any(events):
            raise NoEvents("dataset contains no uncensored observations")
        times.setflags(write=False)
        events.setflags(write=False)
        covariates.setflags(write=False)
        self.times = times
        self.events = events
        self.covariates = covariates

    @property
    def n(self) -> int:
        return self.times.shape[0]

    @property
    def k(self) -> int:
        return self.covariates.shape[1]

    @property
    def n_events(self) -> int:
        return int(np.count_nonzero(self.events))

    @property
    def observations(self) -> tuple[Observation, ...]:
        return tuple(
            Observation(float(t), bool(e), tuple(float(v) for v in z))
            for t, e, z in zip(self.times, self.events, self.covariates)
        )

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:  # pragma: no cover
        return f"SurvivalDataset(n={self.n}, k={self.k}, events={self.n_events})"


def validate_dataset(
    records: Iterable[tuple], *, allow_signed: bool = False
) -> SurvivalDataset:
    """Build a SurvivalDataset from (time, event, covariates) records.

    Checks finiteness, nonnegativity of times and covariates, consistent
    covariate dimension, and that at least one event is present.
    """
    times, events, rows = [], [], []
    for rec in records:
        try:
            t, e, z = rec
        except (TypeError, ValueError):
            raise DimensionMismatch(
                "each record must be a (time, event, covariates) triple"
            ) from None
        times.append(float(t))
        events.append(bool(e))
        rows.append(tuple(float(v) for v in z))
    if not rows:
        raise NoEvents("empty dataset")
    k = len(rows[0])
    if any(len(r) != k for r in rows):
        raise DimensionMismatch("covariate rows disagree on dimension")
    return SurvivalDataset(times, events, rows, allow_signed=allow_signed)


@dataclass(frozen=True)
class TimeGrid:
    """Baseline-hazard grid 0 < s_1 < ... < s_{m-1} < t_final.

    ``cuts`` holds the interior boundaries; interval j (1-indexed) is
    (s_{j-1}, s_j] with s_0 = 0 and s_m = t_final.
    """

    cuts: tuple[float, ...]
    t_final: float

    def __post_init__(self):
        tf = float(self.t_final)
        if not math.isfinite(tf) or tf <= 0:
            raise DegenerateGrid("t_final must be finite and > 0")
        prev = 0.0
        for s in self.cuts:
            if not math.isfinite(s) or s <= prev:
                raise DegenerateGrid("cuts must be finite and strictly increasing")
            prev = s
        if self.cuts and self.cuts[-1] >= tf:
            raise DegenerateGrid("cuts must lie strictly below t_final")
        object.__setattr__(self, "cuts", tuple(float(s) for s in self.cuts))
        object.__setattr__(self, "t_final", tf)

    @property
    def m(self) -> int:
        """Number of intervals."""
        return len(self.cuts) + 1

    @property
    def boundaries(self) -> tuple[float, ...]:
        """Right endpoints s_1, ..., s_m."""
        return self.cuts + (self.t_final,)

    def widths(self) -> np.ndarray:
        b = np.asarray((0.0,) + self.boundaries)
        return np.diff(b)


def _nearest_rank_quantile(sorted_values: np.ndarray, prob: float) -> float:
    # rank ceil(p * n), clamped to at least 1
    n = sorted_values.shape[0]
    rank = max(1, math.ceil(prob * n))
    return float(sorted_values[rank - 1])


def grid_from_quantiles(
    ds: SurvivalDataset, probs: Sequence[float], t_final: float
) -> TimeGrid:
    """Grid whose cuts are nearest-rank quantiles of the uncensored times.

    Duplicate quantiles are collapsed, and quantiles falling on 0 or at or
    beyond ``t_final`` are discarded; at least one usable cut must remain.
    """
    probs = [float(p) for p in probs]
    if not probs:
        raise DegenerateGrid("at least one quantile probability is required")
    for a, b in zip(probs, probs[1:]):
        if not a < b:
            raise DegenerateGrid("quantile probabilities must be strictly increasing")
    if probs[0] <= 0.0 or probs[-1] >= 1.0:
        raise DegenerateGrid("quantile probabilities must lie in (0, 1)")
    t_final = float(t_final)
    if t_final < float(np.max(ds.times)):
        raise OutOfRange("t_final must cover every observed time")
    event_times = np.sort(ds.times[ds.events])
    if event_times.size == 0:
        raise NoEvents("no uncensored times to take quantiles of")
    cuts = []
    for p in probs:
        q = _nearest_rank_quantile(event_times, p)
        if 0.0 < q < t_final and (not cuts or q > cuts[-1]):
            cuts.append(q)
    if not cuts:
        raise DegenerateGrid("quantiles collapsed; no usable cut below t_final")
    return TimeGrid(tuple(cuts), t_final)


def interval_index(grid: TimeGrid, t: float) -> int:
    """1-based index j of the interval (s_{j-1}, s_j] containing t.

    t = 0 is assigned to interval 1; a t equal to a boundary belongs to the
    interval ending there.  Times outside [0, t_final] raise OutOfRange.
    """
    t = float(t)
    if not math.isfinite(t) or t < 0 or t > grid.t_final:
        raise OutOfRange(f"time {t!r} outside [0, {grid.t_final}]")
    return bisect_left(grid.boundaries, t) + 1 if t > 0 else 1


def _check_spd(matrix: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(matrix)):
        raise SingularCovariance(f"{what} has non-finite entries")
    if not np.allclose(matrix, matrix.T, rtol=0.0, atol=1e-10 * max(1.0, float(np.max(np.abs(matrix))))):
        raise SingularCovariance(f"{what} must be symmetric")
    try:
        np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        raise SingularCovariance(f"{what} must be positive definite") from None


@dataclass(frozen=True)
class BetaPrior:
    """Gaussian prior for the regression coefficients: N(mu, cov)."""

    mu: tuple[float, ...]
    cov: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mu.ndim != 1 or cov.shape != (mu.size, mu.size):
            raise DimensionMismatch("prior mean and covariance dimensions disagree")
        _check_spd(cov, "prior covariance")
        object.__setattr__(self, "mu", tuple(float(v) for v in mu))
        object.__setattr__(self, "cov", tuple(tuple(float(v) for v in row) for row in cov))

    @property
    def k(self) -> int:
        return len(self.mu)

    def mu_array(self) -> np.ndarray:
        return np.asarray(self.mu, dtype=float)

    def cov_array(self) -> np.ndarray:
        return np.asarray(self.cov, dtype=float)

    @classmethod
    def isotropic(cls, mu, omega: float, k: int | None = None) -> "BetaPrior":
        """Prior N(mu, omega * I); scalar mu is broadcast to dimension k."""
        if np.ndim(mu) == 0:
            if k is None:
                raise DimensionMismatch("k is required when mu is scalar")
            mu_vec = np.full(k, float(mu))
        else:
            mu_vec = np.asarray(mu, dtype=float)
            if k is not None and mu_vec.size != k:
                raise DimensionMismatch("mu length disagrees with k")
        omega = float(omega)
        if omega <= 0:
            raise SingularCovariance("omega must be > 0")
        return cls(tuple(mu_vec), tuple(map(tuple, omega * np.eye(mu_vec.size))))


@dataclass(frozen=True)
class GammaProcessPrior:
    """Independent-increments gamma prior for the cumulative baseline hazard.

    The increment over interval j has shape c * alpha_j and rate adjusted by
    the interval's exposure, where alpha_j = alpha(s_j) - alpha(s_{j-1}) is
    the increment of the nondecreasing shape function evaluated at the grid
    boundaries (``alpha_at_cuts``, aligned with TimeGrid.boundaries).
    """

    alpha_at_cuts: tuple[float, ...]
    c: float

    def __post_init__(self):
        alpha = [float(a) for a in self.alpha_at_cuts]
        if not alpha:
            raise DimensionMismatch("alpha_at_cuts must not be empty")
        if alpha[0] < 0:
            raise NonNegativityViolation("alpha must be >= 0")
        for a, b in zip(alpha, alpha[1:]):
            if b < a:
                raise NonNegativityViolation("alpha must be nondecreasing")
        c = float(self.c)
        if not (c > 0) or not math.isfinite(c):
            raise NonNegativityViolation("confidence parameter c must be > 0")
        object.__setattr__(self, "alpha_at_cuts", tuple(alpha))
        object.__setattr__(self, "c", c)

    @property
    def m(self) -> int:
        return len(self.alpha_at_cuts)

    def increments(self) -> np.ndarray:
        """alpha_j for j = 1..m (difference from the previous boundary, s_0 = 0
        carrying alpha(0) = 0)."""
        a = np.asarray(self.alpha_at_cuts, dtype=float)
        return np.diff(np.concatenate(([0.0], a)))

    @classmethod
    def from_increments(cls, increments, c: float) -> "GammaProcessPrior":
        inc = np.asarray(increments, dtype=float)
        return cls(tuple(np.cumsum(inc)), c)


@dataclass(frozen=True)
class BaselineIncrementPosterior:
    """Gamma-mixture posterior of one cumulative-hazard increment.

    The posterior of the increment over interval j is a finite mixture whose
    component k is Gamma(shape_offsets[k], rate) with normalized mixing
    weights exp(log_weights).
    """

    interval: int
    log_weights: tuple[float, ...]
    shape_offsets: tuple[float, ...]
    rate: float
    mean: float
    variance: float


@dataclass(frozen=True)
class FitResult:
    """Output of the full fit: coefficients, intervals, baseline posteriors."""

    beta_hat: tuple[float, ...]
    ly_beta: tuple[float, ...]
    sigma_hat: tuple[float, ...]
    hpd: tuple[tuple[float, float], ...]
    coverage: float
    baseline: tuple[BaselineIncrementPosterior, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "beta_hat": list(self.beta_hat),
            "ly_beta": list(self.ly_beta),
            "sigma_hat": list(self.sigma_hat),
            "hpd": [list(pair) for pair in self.hpd],
            "coverage": self.coverage,
            "baseline": [
                {
                    "interval": p.interval,
                    "log_weights": list(p.log_weights),
                    "shape_offsets": list(p.shape_offsets),
                    "rate": p.rate,
                    "mean": p.mean,
                    "variance": p.variance,
                }
                for p in self.baseline
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FitResult":
        return cls(
            beta_hat=tuple(data["beta_hat"]),
            ly_beta=tuple(data["ly_beta"]),
            sigma_hat=tuple(data["sigma_hat"]),
            hpd=tuple((pair[0], pair[1]) for pair in data["hpd"]),
            coverage=data["coverage"],
            baseline=tuple(
                BaselineIncrementPosterior(
                    interval=p["interval"],
                    log_weights=tuple(p["log_weights"]),
                    shape_offsets=tuple(p["shape_offsets"]),
                    rate=p["rate"],
                    mean=p["mean"],
                    variance=p["variance"],
                )
                for p in data["baseline"]
            ),
        )
