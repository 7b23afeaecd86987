"""
Kelly betting
=============

An even-money bet won 60% of the time.  Staking everything maximises the
expected wealth and guarantees ruin; the growth-optimal stake is 2p - 1.
"""

import numpy as np

from ergodic_leverage import geometric_mean_growth, kelly_fraction
from ergodic_leverage.analytics import two_point_bet

p = 0.6
for f in (0.0, 0.1, 0.2, 0.3, 0.5, 1.0):
    print(f"stake {f:.1f}: growth per bet {geometric_mean_growth(two_point_bet(p, f)):+.5f}")

best = kelly_fraction(p)
print("golden-section optimum", round(best, 8))

# ten thousand bets at the optimum versus at full stake
rng = np.random.default_rng(1)
wins = rng.random(10_000) < p
for f in (best, 0.9):
    log_wealth = np.log(np.where(wins, 1 + f, 1 - f)).cumsum()
    print(f"stake {f:.2f}: log wealth after 10^4 bets {log_wealth[-1]:.1f}")
