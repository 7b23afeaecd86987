"""Ensemble- versus time-average growth of geometric Brownian motion and optimal leverage."""

from .analytics import (
    DiscreteReturnDistribution,
    GbmParams,
    MarketModel,
    NoCriticalLeverage,
    critical_leverages,
    ensemble_growth_rate,
    geometric_mean_growth,
    kelly_fraction,
    levered_horizon,
    levered_params,
    levered_time_growth,
    min_horizon,
    optimal_leverage,
    price_ratio_stats,
    rescale_time_unit,
    sharpe_ratio,
    time_average_growth_rate,
)
from .streams import PathStream, next_normal, substream

__version__ = "0.1.0"

__all__ = [
    "DiscreteReturnDistribution",
    "GbmParams",
    "MarketModel",
    "NoCriticalLeverage",
    "PathStream",
    "critical_leverages",
    "ensemble_growth_rate",
    "geometric_mean_growth",
    "kelly_fraction",
    "levered_horizon",
    "levered_params",
    "levered_time_growth",
    "min_horizon",
    "next_normal",
    "optimal_leverage",
    "price_ratio_stats",
    "rescale_time_unit",
    "sharpe_ratio",
    "substream",
    "time_average_growth_rate",
]
