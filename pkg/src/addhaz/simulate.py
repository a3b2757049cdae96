"""Monte Carlo harness: data generation and the two replication studies.

Event times follow the additive hazard lambda(t) = lambda0(t) + beta'z with
a piecewise-constant lambda0, sampled by exact inverse transform of the
cumulative hazard segment by segment.  Censoring is exponential.  Replicate
r of a study uses the dedicated substream seeded by (seed, r), so runs are
reproducible and independent of execution order.

Two studies are provided: a coefficient study that sweeps a grid of prior
means and variances over shared replicate datasets, and a baseline study
that estimates cumulative-hazard increments on a quantile-based grid for
several confidence weights c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .data_model import (
    BetaPrior,
    GammaProcessPrior,
    Observation,
    SurvivalDataset,
    TimeGrid,
    grid_from_quantiles,
)
from .baseline_posterior import (
    event_offsets_by_interval,
    increment_posterior,
    interval_summaries,
)
from .errors import (
    DegenerateGrid,
    DimensionMismatch,
    ExcessiveReplicateDrops,
    NonNegativityViolation,
    SingularDesign,
)
from .hybrid_beta import _hpd_bulk, beta_mode, pseudo_posterior
from .lin_ying import compute_statistics, ly_solve
from .poly_coeffs import poly_from_factors

__all__ = [
    "PiecewiseConstantHazard",
    "SimConfig",
    "SimReport",
    "draw_event_time",
    "draw_observation",
    "run_beta_experiment",
    "run_baseline_experiment",
]

_COVARIATE_LAWS = ("chi-squared-1",)


@dataclass(frozen=True)
class PiecewiseConstantHazard:
    """Baseline hazard: levels[s] on [breaks[s-1], breaks[s]), last level
    extending to infinity.  Levels are >= 0 with a positive last level so
    the cumulative hazard diverges and event times stay finite."""

    levels: tuple[float, ...]
    breaks: tuple[float, ...] = ()

    def __post_init__(self):
        levels = tuple(float(v) for v in self.levels)
        breaks = tuple(float(v) for v in self.breaks)
        if len(levels) != len(breaks) + 1:
            raise DimensionMismatch("need exactly one more level than breaks")
        if any(not math.isfinite(v) or v < 0 for v in levels):
            raise NonNegativityViolation("hazard levels must be finite and >= 0")
        if levels[-1] <= 0:
            raise NonNegativityViolation("the last hazard level must be > 0")
        prev = 0.0
        for b in breaks:
            if not math.isfinite(b) or b <= prev:
                raise DegenerateGrid("breaks must be finite, positive, increasing")
            prev = b
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "breaks", breaks)


@dataclass(frozen=True)
class SimConfig:
    """Generator settings for one study."""

    n: int
    replicates: int
    beta_true: tuple[float, ...]
    baseline: PiecewiseConstantHazard = PiecewiseConstantHazard((1.0,))
    censor_rate: float = 0.5
    covariate_law: str = "chi-squared-1"
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 or self.replicates < 1:
            raise DimensionMismatch("need n >= 2 and at least one replicate")
        beta = tuple(float(b) for b in self.beta_true)
        if not beta or any(not math.isfinite(b) or b < 0 for b in beta):
            raise NonNegativityViolation("true coefficients must be finite, >= 0")
        if not (float(self.censor_rate) >= 0):
            raise NonNegativityViolation("censor_rate must be >= 0")
        if self.covariate_law not in _COVARIATE_LAWS:
            raise ValueError(f"unknown covariate law {self.covariate_law!r}")
        if int(self.seed) < 0:
            raise ValueError("seed must be a nonnegative integer")
        object.__setattr__(self, "beta_true", beta)
        object.__setattr__(self, "censor_rate", float(self.censor_rate))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def k(self) -> int:
        return len(self.beta_true)


def _draw_event_times(
    offsets: np.ndarray, baseline: PiecewiseConstantHazard, rng: np.random.Generator
) -> np.ndarray:
    """Inverse-transform draws of T with hazard baseline(t) + offsets[i]."""
    exp_draws = rng.exponential(size=offsets.shape[0])
    lows = (0.0,) + baseline.breaks
    t = np.empty_like(exp_draws)
    remaining = exp_draws.copy()
    done = np.zeros(exp_draws.shape[0], dtype=bool)
    last = len(baseline.levels) - 1
    for s, level in enumerate(baseline.levels):
        h = level + offsets
        if s == last:
            idx = ~done
            t[idx] = lows[s] + remaining[idx] / h[idx]
            break
        cap = h * (lows[s + 1] - lows[s])
        land = ~done & (h > 0) & (remaining <= cap)
        t[land] = lows[s] + remaining[land] / h[land]
        done |= land
        remaining = np.where(done, remaining, remaining - cap)
    return t


def draw_event_time(
    z, beta, baseline: PiecewiseConstantHazard, rng: np.random.Generator
) -> float:
    """One event time for covariates z under coefficients beta."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    if z.shape != beta.shape:
        raise DimensionMismatch("z and beta dimensions disagree")
    if np.any(z < 0) or np.any(beta < 0):
        raise NonNegativityViolation("z and beta must be >= 0")
    offset = float(z @ beta)
    return float(_draw_event_times(np.array([offset]), baseline, rng)[0])


def _draw_covariates(cfg: SimConfig, rng: np.random.Generator, size: int) -> np.ndarray:
    # chi-squared(1) as the square of a standard normal draw
    return rng.standard_normal((size, cfg.k)) ** 2


def _draw_dataset(cfg: SimConfig, rng: np.random.Generator) -> SurvivalDataset:
    z = _draw_covariates(cfg, rng, cfg.n)
    offsets = z @ np.asarray(cfg.beta_true)
    event_times = _draw_event_times(offsets, cfg.baseline, rng)
    if cfg.censor_rate > 0:
        censor_times = rng.exponential(scale=1.0 / cfg.censor_rate, size=cfg.n)
    else:
        censor_times = np.full(cfg.n, np.inf)
    times = np.minimum(event_times, censor_times)
    events = event_times <= censor_times
    return SurvivalDataset(times, events, z)


def draw_observation(cfg: SimConfig, rng: np.random.Generator) -> Observation:
    """One (time, event, covariates) triplet under the configured laws."""
    z = _draw_covariates(cfg, rng, 1)[0]
    event_time = _draw_event_times(
        np.array([float(z @ np.asarray(cfg.beta_true))]), cfg.baseline, rng
    )[0]
    censor_time = (
        rng.exponential(scale=1.0 / cfg.censor_rate) if cfg.censor_rate > 0 else np.inf
    )
    time = min(event_time, censor_time)
    return Observation(float(time), bool(event_time <= censor_time), tuple(z))


def _replicate_rng(cfg: SimConfig, replicate: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, replicate])


@dataclass(frozen=True)
class SimReport:
    """Aggregated study output.

    Coefficient studies fill the cell_* blocks (axes: prior mean grid, prior
    variance grid, covariate index): cell_means holds the Monte Carlo mean
    of the truncated point estimate, cell_sds the Monte Carlo mean of the
    width-based sd proxy, cell_mc_sds the empirical sd of the estimate.
    The ly_* triples describe the flat-path reference estimate.  Baseline
    studies fill baseline_means / baseline_sds / baseline_post_sds with axes
    (confidence weight grid, interval index).
    """

    kind: str
    n: int
    replicates: int
    dropped: int
    seed: int
    mu_grid: tuple[float, ...] = ()
    omega_grid: tuple[float, ...] = ()
    cell_means: np.ndarray | None = None
    cell_sds: np.ndarray | None = None
    cell_mc_sds: np.ndarray | None = None
    ly_mean: np.ndarray | None = None
    ly_sd: np.ndarray | None = None
    ly_mc_sd: np.ndarray | None = None
    c_grid: tuple[float, ...] = ()
    baseline_means: np.ndarray | None = None
    baseline_sds: np.ndarray | None = None
    baseline_post_sds: np.ndarray | None = None

    def to_csv_text(self) -> str:
        """Full-precision CSV, one row per report cell."""
        lines = []
        if self.kind == "beta":
            lines.append(
                "mu,omega,component,mean_estimate,mean_sigma_hat,mc_sd_estimate"
            )
            for i, mu in enumerate(self.mu_grid):
                for j, om in enumerate(self.omega_grid):
                    for comp in range(self.cell_means.shape[2]):
                        lines.append(
                            f"{mu!r},{om!r},{comp + 1},"
                            f"{float(self.cell_means[i, j, comp])!r},"
                            f"{float(self.cell_sds[i, j, comp])!r},"
                            f"{float(self.cell_mc_sds[i, j, comp])!r}"
                        )
            for comp in range(self.ly_mean.size):
                lines.append(
                    f"reference,flat,{comp + 1},{float(self.ly_mean[comp])!r},"
                    f"{float(self.ly_sd[comp])!r},{float(self.ly_mc_sd[comp])!r}"
                )
        else:
            lines.append("c,interval,mean_increment,mc_sd_increment,mean_posterior_sd")
            for i, c in enumerate(self.c_grid):
                for j in range(self.baseline_means.shape[1]):
                    lines.append(
                        f"{c!r},{j + 1},{float(self.baseline_means[i, j])!r},"
                        f"{float(self.baseline_sds[i, j])!r},"
                        f"{float(self.baseline_post_sds[i, j])!r}"
                    )
        return "\n".join(lines) + "\n"

    def to_table_text(self) -> str:
        """Aligned text table, 6 significant digits."""
        if self.kind == "beta":
            comp = 0
            header = ["mu \\ omega"] + [f"{om:.6g}" for om in self.omega_grid]
            rows = [header]
            for i, mu in enumerate(self.mu_grid):
                row = [f"{mu:.6g}"]
                for j in range(len(self.omega_grid)):
                    row.append(
                        f"{self.cell_means[i, j, comp]:.6g}"
                        f" ({self.cell_sds[i, j, comp]:.6g})"
                    )
                rows.append(row)
            rows.append(
                ["flat ref"]
                + [f"{self.ly_mean[comp]:.6g} ({self.ly_sd[comp]:.6g})"]
                + [""] * (len(self.omega_grid) - 1)
            )
        else:
            header = ["c \\ interval"] + [
                str(j + 1) for j in range(self.baseline_means.shape[1])
            ]
            rows = [header]
            for i, c in enumerate(self.c_grid):
                row = [f"{c:.6g}"]
                for j in range(self.baseline_means.shape[1]):
                    row.append(
                        f"{self.baseline_means[i, j]:.6g}"
                        f" ({self.baseline_sds[i, j]:.6g})"
                    )
                rows.append(row)
        widths = [
            max(len(r[col]) for r in rows if col < len(r))
            for col in range(max(len(r) for r in rows))
        ]
        out = []
        for r in rows:
            out.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
        return "\n".join(out) + "\n"


def _collect_ly_replicates(cfg: SimConfig):
    """Per-replicate estimating-equation solutions and sandwich matrices."""
    kept_m, kept_d, dropped = [], [], 0
    for r in range(cfg.replicates):
        rng = _replicate_rng(cfg, r)
        ds = _draw_dataset(cfg, rng)
        try:
            est = ly_solve(compute_statistics(ds))
        except SingularDesign:
            dropped += 1
            continue
        kept_m.append(est.m)
        kept_d.append(est.d)
    if dropped > 0.01 * cfg.replicates:
        raise ExcessiveReplicateDrops(
            f"{dropped} of {cfg.replicates} replicates dropped"
        )
    return np.asarray(kept_m), np.asarray(kept_d), dropped


def run_beta_experiment(
    cfg: SimConfig,
    mu_grid,
    omega_grid,
    *,
    coverage: float = 0.95,
) -> SimReport:
    """Sweep isotropic priors N(mu * 1, omega * I) over shared replicates.

    Every grid cell reuses the same replicate datasets, so columns differ
    only through the prior.  Replicates with a singular design are dropped;
    more than 1% of drops aborts the study.
    """
    mu_grid = tuple(float(v) for v in mu_grid)
    omega_grid = tuple(float(v) for v in omega_grid)
    if not mu_grid or not omega_grid:
        raise DimensionMismatch("prior grids must not be empty")
    if any(om <= 0 for om in omega_grid):
        raise NonNegativityViolation("prior variances must be > 0")
    m_all, d_all, dropped = _collect_ly_replicates(cfg)
    kept = m_all.shape[0]
    k = cfg.k
    d_inv = np.linalg.inv(d_all)  # (kept, k, k); SPD by construction
    d_inv_m = np.einsum("rij,rj->ri", d_inv, m_all)
    ses = np.sqrt(np.diagonal(d_all, axis1=1, axis2=2))

    cell_means = np.empty((len(mu_grid), len(omega_grid), k))
    cell_sds = np.empty_like(cell_means)
    cell_mc_sds = np.empty_like(cell_means)
    eye = np.eye(k)
    z_cov = float(norm.ppf(0.5 + coverage / 2.0))
    for j, om in enumerate(omega_grid):
        c_inv = eye / om
        precision = d_inv + c_inv
        post_cov = np.linalg.inv(precision)
        post_sd = np.sqrt(np.diagonal(post_cov, axis1=1, axis2=2))
        for i, mu in enumerate(mu_grid):
            rhs = d_inv_m + c_inv @ np.full(k, mu)
            post_mean = np.einsum("rij,rj->ri", post_cov, rhs)
            estimates = np.maximum(post_mean, 0.0)
            cell_means[i, j] = estimates.mean(axis=0)
            cell_mc_sds[i, j] = estimates.std(axis=0, ddof=1)
            for comp in range(k):
                lo, up = _hpd_bulk(post_mean[:, comp], post_sd[:, comp], coverage)
                cell_sds[i, j, comp] = float(np.mean((up - lo) / (2.0 * z_cov)))
    return SimReport(
        kind="beta",
        n=cfg.n,
        replicates=cfg.replicates,
        dropped=dropped,
        seed=cfg.seed,
        mu_grid=mu_grid,
        omega_grid=omega_grid,
        cell_means=cell_means,
        cell_sds=cell_sds,
        cell_mc_sds=cell_mc_sds,
        ly_mean=m_all.mean(axis=0),
        ly_sd=ses.mean(axis=0),
        ly_mc_sd=m_all.std(axis=0, ddof=1),
    )


def run_baseline_experiment(
    cfg: SimConfig,
    c_grid,
    alpha_increments,
    *,
    grid: TimeGrid | None = None,
    quantile_probs=(0.2, 0.4, 0.6, 0.8),
    beta_prior: BetaPrior | None = None,
    fixed_beta=None,
) -> SimReport:
    """Estimate cumulative-hazard increments over replicated datasets.

    With ``grid`` given, every replicate shares that fixed grid, so each
    interval has one true increment across the whole study and estimation
    is truncated at the grid's t_F (observations beyond it only add
    exposure).  Otherwise each replicate builds its own grid from the
    stated quantiles of its uncensored times, with the final boundary at
    its largest observed time.  Coefficients are fitted per replicate on
    the flat-prior path unless ``fixed_beta`` pins them.  The report holds
    the posterior mean of each of the first len(alpha_increments)
    increments for every confidence weight in c_grid.
    """
    c_grid = tuple(float(v) for v in c_grid)
    alpha_increments = tuple(float(a) for a in alpha_increments)
    if not c_grid or any(c <= 0 for c in c_grid):
        raise NonNegativityViolation("confidence weights must be > 0")
    if any(a < 0 for a in alpha_increments):
        raise NonNegativityViolation("prior shape increments must be >= 0")
    n_intervals = len(alpha_increments)
    if grid is not None:
        if grid.m < n_intervals:
            raise DimensionMismatch(
                "fixed grid has fewer intervals than reported increments"
            )
    elif len(quantile_probs) < n_intervals:
        raise DimensionMismatch(
            "need at least as many quantile cuts as reported intervals"
        )
    if beta_prior is None and fixed_beta is None:
        beta_prior = BetaPrior.isotropic(0.5, 1e8, cfg.k)
    if fixed_beta is not None:
        fixed_beta = np.asarray(fixed_beta, dtype=float)

    means = np.empty((cfg.replicates, len(c_grid), n_intervals))
    post_vars = np.empty_like(means)
    keep = np.zeros(cfg.replicates, dtype=bool)
    dropped = 0
    for r in range(cfg.replicates):
        rng = _replicate_rng(cfg, r)
        ds = _draw_dataset(cfg, rng)
        try:
            if fixed_beta is None:
                est = ly_solve(compute_statistics(ds))
                bhat = beta_mode(pseudo_posterior(est, beta_prior))
            else:
                bhat = fixed_beta
            if grid is None:
                rep_grid = grid_from_quantiles(
                    ds, quantile_probs, t_final=float(np.max(ds.times))
                )
                if len(rep_grid.cuts) < n_intervals:
                    raise DegenerateGrid("quantile cuts collapsed")
            else:
                rep_grid = grid
        except (SingularDesign, DegenerateGrid):
            dropped += 1
            continue
        summaries = interval_summaries(ds, rep_grid)
        offsets = event_offsets_by_interval(ds, rep_grid, bhat)
        polys = [poly_from_factors(offsets[j]) for j in range(n_intervals)]
        trailing = [0.0] * (rep_grid.m - n_intervals)
        for ic, c in enumerate(c_grid):
            prior = GammaProcessPrior.from_increments(
                list(alpha_increments) + trailing, c
            )
            for j in range(n_intervals):
                post = increment_posterior(summaries[j], polys[j], prior)
                means[r, ic, j] = post.mean
                post_vars[r, ic, j] = post.variance
        keep[r] = True
    if dropped > 0.01 * cfg.replicates:
        raise ExcessiveReplicateDrops(
            f"{dropped} of {cfg.replicates} replicates dropped"
        )
    means = means[keep]
    post_vars = post_vars[keep]
    return SimReport(
        kind="baseline",
        n=cfg.n,
        replicates=cfg.replicates,
        dropped=dropped,
        seed=cfg.seed,
        c_grid=c_grid,
        baseline_means=means.mean(axis=0),
        baseline_sds=means.std(axis=0, ddof=1),
        baseline_post_sds=np.sqrt(post_vars).mean(axis=0),
    )
