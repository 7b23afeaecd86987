"""Monte Carlo engine for GBM paths and constant-leverage portfolios.

Unlevered paths are sampled exactly on the grid,
``p(t_k) = exp((mu - sigma**2/2) t_k + sigma W(t_k))``, so there is no
discretisation bias.  Constant-leverage wealth is rebalanced at grid points,
with each sleeve (riskless and market) compounded exactly over a step:

    w[k+1] = w[k] * ((1 - l) exp(r dt) + l exp((mu_M - sigma_M**2/2) dt + sigma_M sqrt(dt) Z_k))

Path ``i`` always draws its normals from stream ``(seed, i)`` starting at
position 0, one normal per step.  Paths are generated in parallel chunks and
reduced afterwards in path-index order, so results do not depend on the
number of threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numba as nb
import numpy as np

from .analytics import GbmParams, MarketModel, levered_time_growth, time_average_growth_rate
from .reduction import RowAccumulator, compensated_mean, compensated_sum
from .streams import PathStream, fill_normals, key_words

__all__ = [
    "TimeGrid",
    "PathSample",
    "EnsembleResult",
    "GrowthEstimate",
    "BiasEstimate",
    "sample_path_exact",
    "simulate_rebalanced",
    "exact_paths",
    "exact_ensemble",
    "rebalanced_ensemble",
    "growth_estimator",
    "average_universes",
    "ladder_averages",
    "rebalancing_bias",
    "default_threads",
]


def default_threads() -> int:
    return os.cpu_count() or 1


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on ``[0, T]`` with ``steps`` intervals."""

    T: float
    steps: int

    def __post_init__(self) -> None:
        T = float(self.T)
        if not (math.isfinite(T) and T > 0):
            raise ValueError(f"horizon T must be positive and finite, got {self.T}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps}")
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "steps", int(self.steps))

    @property
    def dt(self) -> float:
        return self.T / self.steps

    @property
    def times(self) -> np.ndarray:
        # T * (k/steps) makes the last point exactly T
        return self.T * (np.arange(self.steps + 1) / self.steps)


@dataclass
class PathSample:
    grid: TimeGrid
    values: np.ndarray
    path_index: int
    bankrupt: bool = False
    seed: Optional[int] = None

    @property
    def terminal_ratio(self) -> float:
        return float(self.values[-1] / self.values[0])


@dataclass
class EnsembleResult:
    """Terminal price ratios of ``N`` independent paths, in path-index order."""

    terminal_ratios: np.ndarray
    T: float
    seed: Optional[int] = None
    first_index: int = 0
    trajectory: Optional[np.ndarray] = None
    bankrupt: Optional[np.ndarray] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.terminal_ratios = np.asarray(self.terminal_ratios, dtype=float)
        if self.terminal_ratios.ndim != 1:
            raise ValueError("terminal_ratios must be one-dimensional")

    @property
    def N(self) -> int:
        return int(self.terminal_ratios.shape[0])


@dataclass(frozen=True)
class GrowthEstimate:
    value: float
    T: float
    N: int
    stderr: Optional[float] = None


@dataclass(frozen=True)
class BiasEstimate:
    """Discretisation bias of the mean log-growth rate at one step size."""

    dt: float
    bias: float
    stderr: float
    raw_mean: float


# ---------------------------------------------------------------- kernels


@nb.njit(cache=True, nogil=True)
def _exact_rows(k0, k1, first, start, drift, sigma, T, steps, out):
    sq = math.sqrt(T / steps)
    z = np.empty(steps)
    for i in range(out.shape[0]):
        fill_normals(k0, k1, first + i, start, z)
        w = 0.0
        out[i, 0] = 1.0
        for k in range(steps):
            w += sq * z[k]
            out[i, k + 1] = math.exp(drift * (T * ((k + 1) / steps)) + sigma * w)


@nb.njit(cache=True, nogil=True)
def _exact_terminal(k0, k1, first, start, drift, sigma, T, steps, out):
    sq = math.sqrt(T / steps)
    z = np.empty(steps)
    for i in range(out.shape[0]):
        fill_normals(k0, k1, first + i, start, z)
        w = 0.0
        for k in range(steps):
            w += sq * z[k]
        out[i] = math.exp(drift * (T * (steps / steps)) + sigma * w)


@nb.njit(cache=True, nogil=True)
def _rebalanced_rows(k0, k1, first, start, r, a, sigma_m, l, T, steps, out, bankrupt):
    dt = T / steps
    sq = math.sqrt(dt)
    safe = (1.0 - l) * math.exp(r * dt)
    adt = a * dt
    z = np.empty(steps)
    for i in range(out.shape[0]):
        fill_normals(k0, k1, first + i, start, z)
        logw = 0.0
        out[i, 0] = 1.0
        bankrupt[i] = False
        for k in range(steps):
            f = safe + l * math.exp(adt + sigma_m * sq * z[k])
            if f <= 0.0:
                bankrupt[i] = True
                for j in range(k + 1, steps + 1):
                    out[i, j] = 0.0
                break
            logw += math.log(f)
            out[i, k + 1] = math.exp(logw)


@nb.njit(cache=True, nogil=True)
def _rebalanced_terminal(k0, k1, first, start, r, a, sigma_m, l, T, steps, out, bankrupt):
    dt = T / steps
    sq = math.sqrt(dt)
    safe = (1.0 - l) * math.exp(r * dt)
    adt = a * dt
    z = np.empty(steps)
    for i in range(out.shape[0]):
        fill_normals(k0, k1, first + i, start, z)
        logw = 0.0
        bankrupt[i] = False
        for k in range(steps):
            f = safe + l * math.exp(adt + sigma_m * sq * z[k])
            if f <= 0.0:
                bankrupt[i] = True
                break
            logw += math.log(f)
        out[i] = 0.0 if bankrupt[i] else math.exp(logw)


@nb.njit(cache=True, nogil=True)
def _rebalanced_levels(k0, k1, first, r, a, sigma_m, l, T, fine_steps, factors, out):
    # out[i, level, :] = sums of (log factor, He1..He4 of the level's normal)
    n_levels = factors.shape[0]
    block = factors.max()
    z = np.empty(fine_steps)
    safe = np.empty(n_levels)
    adt = np.empty(n_levels)
    vol = np.empty(n_levels)
    norm = np.empty(n_levels)
    for m in range(n_levels):
        dt = T * factors[m] / fine_steps
        safe[m] = (1.0 - l) * math.exp(r * dt)
        adt[m] = a * dt
        vol[m] = sigma_m * math.sqrt(dt)
        norm[m] = 1.0 / math.sqrt(factors[m])
    for i in range(out.shape[0]):
        fill_normals(k0, k1, first + i, 0, z)
        for m in range(n_levels):
            for q in range(5):
                out[i, m, q] = 0.0
        for b0 in range(0, fine_steps, block):
            for m in range(n_levels):
                fm = factors[m]
                for g0 in range(b0, b0 + block, fm):
                    zs = 0.0
                    for j in range(g0, g0 + fm):
                        zs += z[j]
                    zc = zs * norm[m]
                    f = safe[m] + l * math.exp(adt[m] + vol[m] * zc)
                    lf = math.log(f) if f > 0.0 else -np.inf
                    z2 = zc * zc
                    out[i, m, 0] += lf
                    out[i, m, 1] += zc
                    out[i, m, 2] += z2 - 1.0
                    out[i, m, 3] += zc * (z2 - 3.0)
                    out[i, m, 4] += z2 * (z2 - 6.0) + 3.0


# ---------------------------------------------------------------- dispatch


def _chunked(n: int, threads: Optional[int], work: Callable[[int, int], None]) -> None:
    """Run ``work(lo, hi)`` over ``[0, n)``; each call writes a disjoint slice."""
    threads = default_threads() if threads is None else int(threads)
    if threads < 1:
        raise ValueError("threads must be >= 1")
    if threads == 1 or n < 2:
        work(0, n)
        return
    size = max(1, -(-n // (4 * threads)))
    bounds = [(lo, min(n, lo + size)) for lo in range(0, n, size)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for fut in [pool.submit(work, lo, hi) for lo, hi in bounds]:
            fut.result()


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    return seed


# ---------------------------------------------------------------- single paths


def sample_path_exact(params: GbmParams, grid: TimeGrid, stream: PathStream) -> PathSample:
    """One exact lognormal path; consumes ``grid.steps`` normals from ``stream``."""
    out = np.empty((1, grid.steps + 1))
    k0, k1 = stream.key
    drift = time_average_growth_rate(params)
    _exact_rows(k0, k1, stream.path_index, stream.position, drift, params.sigma,
                grid.T, grid.steps, out)
    stream.position += grid.steps
    return PathSample(grid, out[0], stream.path_index, False, stream.seed)


def simulate_rebalanced(
    market: MarketModel, l: float, grid: TimeGrid, stream: PathStream
) -> PathSample:
    """Wealth of a portfolio rebalanced to leverage ``l`` at every grid point.

    ``l = 0`` compounds the riskless rate exactly and consumes no normals;
    ``l = 1`` is the exact market path drawn from the same stream.  Wealth
    that would turn non-positive is absorbed at 0 and flagged bankrupt.
    """
    l = float(l)
    if l == 0.0:
        values = np.exp(market.mu_riskless * grid.times)
        return PathSample(grid, values, stream.path_index, False, stream.seed)
    if l == 1.0:
        return sample_path_exact(market.market, grid, stream)
    out = np.empty((1, grid.steps + 1))
    flag = np.zeros(1, dtype=np.bool_)
    k0, k1 = stream.key
    a = time_average_growth_rate(market.market)
    _rebalanced_rows(k0, k1, stream.path_index, stream.position, market.mu_riskless, a,
                     market.sigma_m, l, grid.T, grid.steps, out, flag)
    stream.position += grid.steps
    return PathSample(grid, out[0], stream.path_index, bool(flag[0]), stream.seed)


# ---------------------------------------------------------------- ensembles


def exact_paths(
    params: GbmParams,
    grid: TimeGrid,
    seed: int,
    n_paths: int,
    first_index: int = 0,
    threads: Optional[int] = None,
) -> np.ndarray:
    """Paths ``first_index .. first_index+n_paths-1`` as an ``(n_paths, steps+1)`` array."""
    seed = _check_seed(seed)
    k0, k1 = key_words(seed)
    drift = time_average_growth_rate(params)
    out = np.empty((int(n_paths), grid.steps + 1))

    def work(lo: int, hi: int) -> None:
        _exact_rows(k0, k1, first_index + lo, 0, drift, params.sigma, grid.T, grid.steps,
                    out[lo:hi])

    _chunked(out.shape[0], threads, work)
    return out


def exact_ensemble(
    params: GbmParams,
    grid: TimeGrid,
    n_paths: int,
    seed: int,
    first_index: int = 0,
    threads: Optional[int] = None,
) -> EnsembleResult:
    """Terminal ratios of exact GBM paths (intermediate values are not stored)."""
    if n_paths < 1:
        raise ValueError("need at least one path")
    seed = _check_seed(seed)
    k0, k1 = key_words(seed)
    drift = time_average_growth_rate(params)
    out = np.empty(int(n_paths))

    def work(lo: int, hi: int) -> None:
        _exact_terminal(k0, k1, first_index + lo, 0, drift, params.sigma, grid.T,
                        grid.steps, out[lo:hi])

    _chunked(out.shape[0], threads, work)
    return EnsembleResult(out, grid.T, seed, first_index,
                          metadata={"mu": params.mu, "sigma": params.sigma, "steps": grid.steps})


def rebalanced_ensemble(
    market: MarketModel,
    l: float,
    grid: TimeGrid,
    n_paths: int,
    seed: int,
    first_index: int = 0,
    threads: Optional[int] = None,
) -> EnsembleResult:
    if n_paths < 1:
        raise ValueError("need at least one path")
    l = float(l)
    if l in (0.0, 1.0):
        # route through the exact special cases so values match simulate_rebalanced
        ratios = np.empty(int(n_paths))
        for i in range(ratios.shape[0]):
            p = simulate_rebalanced(market, l, grid, PathStream(int(seed), first_index + i))
            ratios[i] = p.values[-1]
        return EnsembleResult(ratios, grid.T, int(seed), first_index,
                              bankrupt=np.zeros(ratios.shape[0], dtype=bool))
    seed = _check_seed(seed)
    k0, k1 = key_words(seed)
    a = time_average_growth_rate(market.market)
    out = np.empty(int(n_paths))
    flags = np.zeros(int(n_paths), dtype=np.bool_)

    def work(lo: int, hi: int) -> None:
        _rebalanced_terminal(k0, k1, first_index + lo, 0, market.mu_riskless, a,
                             market.sigma_m, l, grid.T, grid.steps, out[lo:hi], flags[lo:hi])

    _chunked(out.shape[0], threads, work)
    return EnsembleResult(out, grid.T, seed, first_index, bankrupt=flags,
                          metadata={"leverage": l, "steps": grid.steps})


def growth_estimator(
    ensemble: EnsembleResult, T: Optional[float] = None, sigma: Optional[float] = None
) -> GrowthEstimate:
    """``(1/T) ln`` of the sample mean of terminal ratios; the mean stays inside the log.

    ``stderr`` is ``sigma / sqrt(T)`` for a single path when ``sigma`` is
    given, and the delta-method error of the log of the sample mean otherwise.
    """
    T = ensemble.T if T is None else float(T)
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    ratios = ensemble.terminal_ratios
    N = ratios.shape[0]
    if N < 1:
        raise ValueError("empty ensemble")
    if np.any(ratios < 0) or np.any(np.isnan(ratios)):
        raise ValueError("terminal ratios must be non-negative")
    total = compensated_sum(ratios)
    if total == 0:
        return GrowthEstimate(-math.inf, T, N, None)
    mean = total / N
    value = math.log(mean) / T
    if N == 1:
        stderr = None if sigma is None else sigma / math.sqrt(T)
    else:
        dev = compensated_sum((ratios - mean) ** 2) / (N - 1)
        stderr = math.sqrt(dev / N) / mean / T
    return GrowthEstimate(value, T, N, stderr)


def average_universes(paths: Sequence[PathSample]) -> np.ndarray:
    """Arithmetic mean of the paths at equal times, summed in the given order."""
    if not paths:
        raise ValueError("no paths to average")
    grid = paths[0].grid
    for p in paths:
        if p.grid != grid or p.values.shape != (grid.steps + 1,):
            raise ValueError("all paths must share the same time grid")
    acc = RowAccumulator(grid.steps + 1)
    acc.add(np.stack([p.values for p in paths]))
    return acc.mean()


def ladder_averages(
    params: GbmParams,
    grid: TimeGrid,
    seed: int,
    ladder: Sequence[int],
    threads: Optional[int] = None,
    chunk: int = 1024,
) -> dict[int, np.ndarray]:
    """Equal-time averages over the first ``N`` pool paths for every ``N`` in ``ladder``.

    One pool of paths ``0 .. max(ladder)-1`` serves every rung, so larger
    averages contain the smaller ones.  The pool is never held in memory at once.
    """
    ladder = [int(n) for n in ladder]
    if not ladder or ladder[0] < 1 or any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("ladder must be a strictly increasing list of positive counts")
    acc = RowAccumulator(grid.steps + 1)
    result: dict[int, np.ndarray] = {}
    rungs = iter(ladder)
    target = next(rungs)
    while True:
        n = min(chunk, target - acc.count)
        acc.add(exact_paths(params, grid, seed, n, acc.count, threads))
        if acc.count == target:
            result[target] = acc.mean()
            target = next(rungs, None)
            if target is None:
                return result


def rebalancing_bias(
    market: MarketModel,
    l: float,
    T: float,
    dts: Sequence[float] = (1 / 64, 1 / 128, 1 / 256),
    n_paths: int = 10_000,
    seed: int = 0,
    threads: Optional[int] = None,
) -> list[BiasEstimate]:
    """Bias of the mean log-growth rate versus the continuous-time value, per step size.

    All step sizes share one set of fine normals (coarse increments are sums
    of fine ones).  The bias is a few 1e-6 where plain sample noise is a few
    1e-4, so each level's estimate uses the Hermite polynomials He1..He4 of
    its own per-step normals as control variates: they have mean exactly
    zero and soak up almost all of the pathwise noise.
    """
    dts = [float(d) for d in dts]
    finest = min(dts)
    fine_steps = T / finest
    if abs(fine_steps - round(fine_steps)) > 1e-9 * fine_steps:
        raise ValueError("T must be a whole number of the finest step")
    fine_steps = int(round(fine_steps))
    factors = []
    for d in dts:
        m = d / finest
        if abs(m - round(m)) > 1e-9 * m:
            raise ValueError("each step must be a whole multiple of the finest step")
        factors.append(int(round(m)))
    factors = np.array(factors, dtype=np.int64)
    if fine_steps % factors.max():
        raise ValueError("coarsest step must divide T")

    seed = _check_seed(seed)
    k0, k1 = key_words(seed)
    a = time_average_growth_rate(market.market)
    sums = np.empty((int(n_paths), len(dts), 5))

    def work(lo: int, hi: int) -> None:
        _rebalanced_levels(k0, k1, lo, market.mu_riskless, a, market.sigma_m, float(l), T,
                           fine_steps, factors, sums[lo:hi])

    _chunked(sums.shape[0], threads, work)
    target = levered_time_growth(market, l)
    result = []
    for m, d in enumerate(dts):
        y = sums[:, m, 0] / T
        X = np.column_stack([np.ones(y.shape[0]), sums[:, m, 1:] / T])
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        resid = y - X @ coef
        stderr = float(np.sqrt(resid @ resid / max(1, y.shape[0] - X.shape[1])) / np.sqrt(y.shape[0]))
        result.append(BiasEstimate(d, float(coef[0]) - target, stderr,
                                   compensated_mean(y) - target))
    return result
