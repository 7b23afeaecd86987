"""Reference experiments returned as plain data.

* :func:`run_frontier_surface` - time-average growth over the (sigma, mu)
  plane with the efficient frontier and its markers.
* :func:`run_universes` - one wealth path next to equal-time averages over
  growing numbers of independent universes.
* :func:`run_error_envelope` - relative errors of single-path growth
  estimates against the ``sigma / sqrt(T)`` envelope.
* :func:`leverage_report` - every leverage-related closed form for one market.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .analytics import (
    GbmParams,
    MarketModel,
    NoCriticalLeverage,
    critical_leverages,
    levered_horizon,
    levered_params,
    levered_time_growth,
    min_horizon,
    optimal_leverage,
    sharpe_ratio,
    time_average_growth_rate,
)
from .simulate import TimeGrid, exact_ensemble, exact_paths, ladder_averages

__all__ = [
    "SurfaceGrid",
    "UniversesRun",
    "ErrorEnvelopeRun",
    "LeverageReport",
    "run_frontier_surface",
    "run_universes",
    "run_error_envelope",
    "leverage_report",
    "log_slope",
    "averaging_horizon",
]


@dataclass
class SurfaceGrid:
    sigma: np.ndarray
    mu: np.ndarray
    growth: np.ndarray  # shape (len(mu), len(sigma))
    frontier: np.ndarray  # (k, 2) points (sigma, mu) on the frontier line
    frontier_growth: np.ndarray
    zero_growth: np.ndarray  # (k, 2) points with mu = sigma**2 / 2
    markers: dict[str, tuple[float, float]]
    market: MarketModel


@dataclass
class UniversesRun:
    params: GbmParams
    grid: TimeGrid
    seed: int
    exemplar: np.ndarray
    averages: dict[int, np.ndarray]
    t_c: float

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def ladder(self) -> list[int]:
        return list(self.averages)


@dataclass
class ErrorEnvelopeRun:
    params: GbmParams
    T_list: list[float]
    seed: int
    g_bar: float
    estimates: dict[float, np.ndarray]
    errors: dict[float, np.ndarray]
    envelope: dict[float, float]
    coverage_1sd: dict[float, float]
    coverage_2sd: dict[float, float]
    inset_times: np.ndarray
    inset_estimates: np.ndarray
    absolute: bool = False


@dataclass
class LeverageReport:
    market: MarketModel
    l_opt: float
    g_opt: float
    l_c: Optional[tuple[float, float]]
    sharpe: float
    t_c_l1: float
    t_c_lopt: float
    leverages: np.ndarray = field(repr=False)
    horizons: np.ndarray = field(repr=False)

    def summary(self) -> dict[str, Optional[float]]:
        l_minus, l_plus = self.l_c if self.l_c is not None else (None, None)
        return {
            "l_opt": self.l_opt,
            "g_opt": self.g_opt,
            "l_c_minus": l_minus,
            "l_c_plus": l_plus,
            "sharpe": self.sharpe,
            "t_c_l1": self.t_c_l1,
            "t_c_lopt": self.t_c_lopt,
        }


def log_slope(times, values, t_min: float = -math.inf, t_max: float = math.inf) -> float:
    """Least-squares slope of ``ln(values)`` against ``times`` on ``[t_min, t_max]``."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = (times >= t_min) & (times <= t_max) & (values > 0)
    if keep.sum() < 2:
        raise ValueError("need at least two positive points to fit a rate")
    slope, _ = np.polyfit(times[keep], np.log(values[keep]), 1)
    return float(slope)


def averaging_horizon(params: GbmParams, n_paths: int) -> float:
    """Time up to which an ``n_paths`` sample mean of ``p(t)`` tracks ``exp(mu t)``.

    Up to ``ln(N) / (2 sigma**2)`` the relative standard error of the sample
    mean stays below ``N**-0.25``; later the mean is carried by a few rare
    paths and its log-slope sinks towards the time-average rate.
    """
    if params.sigma == 0:
        return math.inf
    return math.log(n_paths) / (2 * params.sigma**2)


def _axis(bounds: Sequence[float], n: int, name: str) -> np.ndarray:
    lo, hi = (float(b) for b in bounds)
    if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
        raise ValueError(f"{name} range must be a finite, non-empty interval")
    if n < 2:
        raise ValueError(f"{name} resolution must be >= 2")
    return np.linspace(lo, hi, int(n))


def run_frontier_surface(
    market: MarketModel,
    sigma_range: Sequence[float] = (0.0, 0.5),
    mu_range: Sequence[float] = (0.0, 0.2),
    resolution: int | tuple[int, int] = 201,
) -> SurfaceGrid:
    n_sigma, n_mu = (resolution, resolution) if np.isscalar(resolution) else resolution
    sigma = _axis(sigma_range, n_sigma, "sigma")
    mu = _axis(mu_range, n_mu, "mu")
    growth = mu[:, None] - sigma[None, :] ** 2 / 2

    slope = market.mu_excess / market.sigma_m
    frontier = np.column_stack([sigma, market.mu_riskless + sigma * slope])
    frontier_growth = frontier[:, 1] - frontier[:, 0] ** 2 / 2
    zero_mu = sigma**2 / 2
    inside = (zero_mu >= mu[0]) & (zero_mu <= mu[-1])
    zero_growth = np.column_stack([sigma[inside], zero_mu[inside]])

    opt = levered_params(market, optimal_leverage(market))
    markers = {
        "R": (0.0, market.mu_riskless),
        "M": (market.sigma_m, market.mu_riskless + market.mu_excess),
        "l_opt": (opt.sigma, opt.mu),
    }
    return SurfaceGrid(sigma, mu, growth, frontier, frontier_growth, zero_growth, markers, market)


def run_universes(
    params: GbmParams,
    T: float,
    steps: int,
    ladder: Sequence[int] = (1, 10, 100, 1000, 10000),
    seed: int = 0,
    threads: Optional[int] = None,
) -> UniversesRun:
    """Exemplar path 0 plus nested equal-time averages over paths ``0..N-1``."""
    grid = TimeGrid(T, steps)
    averages = ladder_averages(params, grid, seed, ladder, threads)
    exemplar = exact_paths(params, grid, seed, 1, 0, 1)[0]
    return UniversesRun(params, grid, int(seed), exemplar, averages, min_horizon(params))


def run_error_envelope(
    params: GbmParams,
    T_list: Sequence[float] = (10.0, 100.0, 1000.0),
    samples: int = 1000,
    seed: int = 0,
    inset_T: Optional[float] = None,
    inset_steps: int = 1000,
    absolute: bool = False,
    threads: Optional[int] = None,
) -> ErrorEnvelopeRun:
    """Single-path growth estimates at each horizon and their envelope coverage.

    Sample ``i`` at the ``j``-th horizon is path ``j * samples + i``; the
    long inset path is the next index after all samples.  With ``absolute``
    the errors are ``g_est - g_bar`` instead of relative, which is the only
    option when ``g_bar == 0``.
    """
    T_list = [float(t) for t in T_list]
    if not T_list or any(not (t > 0 and math.isfinite(t)) for t in T_list):
        raise ValueError("horizons must be positive and finite")
    if samples < 100:
        raise ValueError("need at least 100 samples per horizon")
    g_bar = time_average_growth_rate(params)
    if g_bar == 0 and not absolute:
        raise ValueError("relative error undefined for zero growth rate; use absolute errors")
    scale = 1.0 if absolute else abs(g_bar)
    denom = 1.0 if absolute else g_bar

    estimates, errors, envelope, cov1, cov2 = {}, {}, {}, {}, {}
    for j, T in enumerate(T_list):
        ens = exact_ensemble(params, TimeGrid(T, 1), samples, seed, j * samples, threads)
        g = np.log(ens.terminal_ratios) / T
        err = (g - g_bar) / denom
        env = params.sigma / math.sqrt(T) / scale
        estimates[T], errors[T], envelope[T] = g, err, env
        cov1[T] = float(np.mean(np.abs(err) <= env))
        cov2[T] = float(np.mean(np.abs(err) <= 2 * env))

    inset_T = 10 * max(T_list) if inset_T is None else float(inset_T)
    grid = TimeGrid(inset_T, inset_steps)
    path = exact_paths(params, grid, seed, 1, len(T_list) * samples, 1)[0]
    times = grid.times[1:]
    inset = np.log(path[1:]) / times
    return ErrorEnvelopeRun(params, T_list, int(seed), g_bar, estimates, errors, envelope,
                            cov1, cov2, times, inset, absolute)


def leverage_report(
    market: MarketModel,
    l_range: Optional[Sequence[float]] = None,
    points: int = 401,
) -> LeverageReport:
    """Optimal and critical leverages, Sharpe ratio and the horizon curve ``t_c(l)``.

    The curve's leverage grid includes both critical leverages, where the
    horizon is ``+inf``.
    """
    l_opt = optimal_leverage(market)
    try:
        l_c = critical_leverages(market)
    except NoCriticalLeverage:
        l_c = None
    if l_range is None:
        lo = min(0.0, l_c[0] if l_c else l_opt) - 1.0
        hi = max(1.0, l_c[1] if l_c else l_opt) + 1.0
    else:
        lo, hi = (float(v) for v in l_range)
        if not hi > lo:
            raise ValueError("leverage range must be non-empty")
    grid = np.linspace(lo, hi, int(points))
    if l_c is not None:
        grid = np.union1d(grid, [r for r in l_c if lo <= r <= hi])
    horizons = np.array([levered_horizon(market, l) for l in grid])
    return LeverageReport(
        market=market,
        l_opt=l_opt,
        g_opt=levered_time_growth(market, l_opt),
        l_c=l_c,
        sharpe=sharpe_ratio(market, 1.0),
        t_c_l1=levered_horizon(market, 1.0),
        t_c_lopt=levered_horizon(market, l_opt),
        leverages=grid,
        horizons=horizons,
    )
