"""
Ensemble versus time-average growth
===================================

Two numbers describe a geometric Brownian motion: the growth of its
expectation and the growth almost every single path actually sees.
"""

from ergodic_leverage import GbmParams, ensemble_growth_rate, min_horizon, price_ratio_stats
from ergodic_leverage import time_average_growth_rate

# a volatile asset whose expected value grows at 5% per unit time
asset = GbmParams(mu=0.05, sigma=0.45)
print("ensemble rate    ", ensemble_growth_rate(asset))
print("time-average rate", time_average_growth_rate(asset))

# the gap shows up as mean and median drifting apart
for T in (1, 10, 75):
    s = price_ratio_stats(asset, T)
    print(f"T={T:>3}  mean={s.mean:10.4f}  median={s.median:8.4f}")

# noise dominates the trend until t_c
print("t_c =", round(min_horizon(asset), 2))
