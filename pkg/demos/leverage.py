"""
Optimal and critical leverage
=============================

A riskless rate of 5%, a market portfolio with 5% excess drift and 18%
volatility.  How much of it should one hold?
"""

import numpy as np

from ergodic_leverage import MarketModel, rescale_time_unit, sharpe_ratio
from ergodic_leverage.experiments import leverage_report
from ergodic_leverage.simulate import rebalancing_bias

market = MarketModel(mu_riskless=0.05, mu_excess=0.05, sigma_m=0.18)
rep = leverage_report(market)
for key, value in rep.summary().items():
    print(f"{key:>10} = {value:.4f}")

# horizon curve: finite between the roots, infinite at them
finite = np.isfinite(rep.horizons)
print("leverages with infinite horizon:", rep.leverages[~finite])

# the Sharpe ratio depends on the time unit, the optimal leverage does not
daily = rescale_time_unit(market, 1 / 365)
print("Sharpe yearly", round(sharpe_ratio(market), 4), " daily", round(sharpe_ratio(daily), 4))

# a discretely rebalanced portfolio misses the continuous rate by O(dt)
for b in rebalancing_bias(market, rep.l_opt, T=20.0, n_paths=500, seed=0):
    print(f"dt=1/{1 / b.dt:.0f}  bias={b.bias:.3e}")
