"""Closed-form growth analytics for geometric Brownian motion.

A price following ``dp = p (mu dt + sigma dW)`` has ensemble-average growth
rate ``mu`` but almost every single realisation grows at the time-average
rate ``mu - sigma**2 / 2``.  Holding a constant fraction ``l`` of wealth in a
market portfolio (the rest in a riskless asset) turns the time-average rate
into a concave quadratic in ``l``, which fixes an optimal leverage, two
critical leverages where growth vanishes, and a minimum investment horizon.

All functions are pure.  ``+inf`` horizons and ``-inf`` growth rates are
legal return values, not errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "GbmParams",
    "MarketModel",
    "DiscreteReturnDistribution",
    "PriceRatioStats",
    "NoCriticalLeverage",
    "ROOT_RTOL",
    "ensemble_growth_rate",
    "time_average_growth_rate",
    "levered_params",
    "levered_time_growth",
    "optimal_leverage",
    "critical_leverages",
    "min_horizon",
    "levered_horizon",
    "sharpe_ratio",
    "rescale_time_unit",
    "price_ratio_stats",
    "geometric_mean_growth",
    "two_point_bet",
    "golden_section_max",
    "kelly_fraction",
]

# |growth| below this fraction of its largest term counts as zero
ROOT_RTOL = 1e-12


class NoCriticalLeverage(ValueError):
    """Raised when the time-average growth rate is negative for every leverage."""


def _finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class GbmParams:
    """Drift ``mu`` (1/time) and volatility ``sigma`` (1/sqrt(time)) of one GBM."""

    mu: float
    sigma: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu", _finite("mu", self.mu))
        object.__setattr__(self, "sigma", _finite("sigma", self.sigma))
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class MarketModel:
    """Riskless rate, excess drift of the market portfolio and its volatility.

    The efficient frontier is the line ``mu = mu_riskless + sigma * mu_excess / sigma_m``.
    A riskless-only position is leverage 0, never ``sigma_m = 0``.
    """

    mu_riskless: float
    mu_excess: float
    sigma_m: float

    def __post_init__(self) -> None:
        for name in ("mu_riskless", "mu_excess", "sigma_m"):
            object.__setattr__(self, name, _finite(name, getattr(self, name)))
        if self.sigma_m <= 0:
            raise ValueError(f"sigma_m must be > 0, got {self.sigma_m}")

    @property
    def market(self) -> GbmParams:
        """The unlevered market portfolio (leverage 1)."""
        return GbmParams(self.mu_riskless + self.mu_excess, self.sigma_m)


@dataclass(frozen=True)
class DiscreteReturnDistribution:
    """Per-period outcomes as ``(probability, return_factor, period)`` triples.

    A return factor of 1.2 means wealth is multiplied by 1.2 over ``period``.
    All outcomes must share one period.
    """

    outcomes: tuple[tuple[float, float, float], ...]

    def __post_init__(self) -> None:
        outcomes = tuple((float(p), float(r), float(t)) for p, r, t in self.outcomes)
        if not outcomes:
            raise ValueError("distribution needs at least one outcome")
        for p, r, t in outcomes:
            if not (math.isfinite(p) and math.isfinite(r) and math.isfinite(t)):
                raise ValueError("outcomes must be finite")
            if p < 0:
                raise ValueError(f"negative probability {p}")
            if r < 0:
                raise ValueError(f"negative return factor {r}")
            if t <= 0:
                raise ValueError(f"period must be positive, got {t}")
        if abs(math.fsum(p for p, _, _ in outcomes) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")
        if len({t for _, _, t in outcomes}) != 1:
            raise ValueError("all outcomes must share one period")
        object.__setattr__(self, "outcomes", outcomes)

    @classmethod
    def from_pairs(
        cls, pairs: Sequence[tuple[float, float]], period: float = 1.0
    ) -> "DiscreteReturnDistribution":
        return cls(tuple((p, r, period) for p, r in pairs))

    @property
    def period(self) -> float:
        return self.outcomes[0][2]


@dataclass(frozen=True)
class PriceRatioStats:
    """Law of ``p(T)/p(0)``.  ``density`` is None when the law is a point mass."""

    mean: float
    median: float
    density: Optional[Callable[[np.ndarray], np.ndarray]]
    point_mass: bool
    log_mean: float
    log_sd: float

    @property
    def sd(self) -> float:
        """Standard deviation of the ratio (lognormal closed form)."""
        return self.mean * math.sqrt(math.expm1(self.log_sd**2))


def ensemble_growth_rate(params: GbmParams) -> float:
    return params.mu


def time_average_growth_rate(params: GbmParams) -> float:
    return params.mu - params.sigma**2 / 2


def levered_params(market: MarketModel, l: float) -> GbmParams:
    """GBM parameters of a constant-leverage position.

    Shorts (``l < 0``) get volatility ``|l| * sigma_m``; the sign only enters
    the drift.
    """
    l = _finite("leverage", l)
    return GbmParams(market.mu_riskless + l * market.mu_excess, abs(l) * market.sigma_m)


def levered_time_growth(market: MarketModel, l: float) -> float:
    l = _finite("leverage", l)
    return market.mu_riskless + l * market.mu_excess - (l * market.sigma_m) ** 2 / 2


def optimal_leverage(market: MarketModel) -> float:
    if market.sigma_m == 0:
        raise ValueError("no finite optimal leverage when sigma_m = 0")
    return market.mu_excess / market.sigma_m**2


def critical_leverages(market: MarketModel) -> tuple[float, float]:
    """Both roots ``(l_minus, l_plus)`` of the levered time-average growth rate.

    Raises
    ------
    NoCriticalLeverage
        If growth is negative at every leverage (negative discriminant).
    """
    l_opt = optimal_leverage(market)
    disc = l_opt**2 + 2 * market.mu_riskless / market.sigma_m**2
    if disc < 0:
        raise NoCriticalLeverage(
            f"time-average growth is negative for all leverages (discriminant {disc:.6g})"
        )
    half_width = math.sqrt(disc)
    if l_opt == 0:
        return -half_width, half_width
    # larger-magnitude root first, the other from the product of roots -2 R / sigma_m**2
    far = l_opt + math.copysign(half_width, l_opt)
    near = (-2 * market.mu_riskless / market.sigma_m**2) / far
    return (near, far) if far > 0 else (far, near)


def _horizon(drift: float, vol: float, scale: float) -> float:
    growth = drift - vol**2 / 2
    if abs(growth) <= ROOT_RTOL * scale:
        return math.inf
    return (vol / growth) ** 2


def min_horizon(params: GbmParams) -> float:
    """Time after which the trend ``(mu - sigma**2/2) t`` outgrows the noise ``sigma sqrt(t)``.

    Returns ``inf`` when the time-average growth rate is zero (to relative
    precision ``ROOT_RTOL``), including the riskless zero-rate case.
    """
    scale = abs(params.mu) + params.sigma**2 / 2
    return _horizon(params.mu, params.sigma, scale)


def levered_horizon(market: MarketModel, l: float) -> float:
    l = _finite("leverage", l)
    p = levered_params(market, l)
    scale = abs(market.mu_riskless) + abs(l * market.mu_excess) + p.sigma**2 / 2
    return _horizon(p.mu, p.sigma, scale)


def sharpe_ratio(market: MarketModel, l: float = 1.0) -> float:
    """Excess return per unit volatility; identical for every nonzero leverage."""
    l = _finite("leverage", l)
    if l == 0:
        raise ValueError("Sharpe ratio is undefined (0/0) at zero leverage")
    return market.mu_excess / market.sigma_m


def rescale_time_unit(market: MarketModel, factor: float) -> MarketModel:
    """Express ``market`` in a new time unit, ``factor = new_unit / old_unit``.

    Rates scale with ``factor`` and volatilities with ``sqrt(factor)``, so the
    optimal leverage is unchanged and the Sharpe ratio scales by ``sqrt(factor)``.
    """
    factor = _finite("factor", factor)
    if factor <= 0:
        raise ValueError(f"time-unit factor must be > 0, got {factor}")
    if factor == 1:
        return market
    root = math.sqrt(factor)
    return MarketModel(
        market.mu_riskless * factor, market.mu_excess * factor, market.sigma_m * root
    )


def price_ratio_stats(params: GbmParams, T: float) -> PriceRatioStats:
    """Lognormal law of ``p(T)/p(0)``: mean ``exp(mu T)``, median ``exp((mu - sigma**2/2) T)``."""
    T = _finite("T", T)
    if T < 0:
        raise ValueError(f"T must be >= 0, got {T}")
    log_mean = time_average_growth_rate(params) * T
    log_sd = params.sigma * math.sqrt(T)
    mean = math.exp(params.mu * T)
    median = math.exp(log_mean)
    if log_sd == 0:
        return PriceRatioStats(mean, median, None, True, log_mean, 0.0)

    var2 = 2 * log_sd**2
    norm = math.sqrt(math.pi * var2)

    def density(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pos = x > 0
        xp = x[pos]
        out[pos] = np.exp(-((np.log(xp) - log_mean) ** 2) / var2) / (xp * norm)
        return out if out.ndim else float(out)

    return PriceRatioStats(mean, median, density, False, log_mean, log_sd)


def geometric_mean_growth(dist: DiscreteReturnDistribution) -> float:
    """Expected log return factor per unit time; ``-inf`` if ruin has positive probability."""
    total = []
    for p, r, _ in dist.outcomes:
        if p == 0:
            continue
        if r == 0:
            return -math.inf
        total.append(p * math.log(r))
    return math.fsum(total) / dist.period


def two_point_bet(p: float, fraction: float, period: float = 1.0) -> DiscreteReturnDistribution:
    """Even-money bet of ``fraction`` of wealth, won with probability ``p``."""
    if not 0 <= p <= 1:
        raise ValueError(f"win probability must lie in [0, 1], got {p}")
    if not -1 <= fraction <= 1:
        raise ValueError(f"fraction must lie in [-1, 1], got {fraction}")
    return DiscreteReturnDistribution.from_pairs([(p, 1 + fraction), (1 - p, 1 - fraction)], period)


_INV_PHI = (math.sqrt(5) - 1) / 2


def golden_section_max(
    f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-8
) -> float:
    """Maximiser of a unimodal ``f`` on ``[lo, hi]`` to within ``tol``."""
    a, b = float(lo), float(hi)
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return (a + b) / 2


def kelly_fraction(p: float, tol: float = 1e-8) -> float:
    """Growth-optimal stake on an even-money bet, found by golden-section search.

    Negative fractions bet on the losing side; the search runs over [-1, 1].
    """
    if not 0 <= p <= 1:
        raise ValueError(f"win probability must lie in [0, 1], got {p}")
    return golden_section_max(lambda f: geometric_mean_growth(two_point_bet(p, f)), -1.0, 1.0, tol)
