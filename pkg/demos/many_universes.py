"""
Averaging over many universes
=============================

One wealth path next to equal-time averages over growing numbers of
independent paths.  Small ensembles follow the single path; large ones
track exp(mu t) for longer.
"""

import numpy as np

from ergodic_leverage import GbmParams
from ergodic_leverage.experiments import averaging_horizon, log_slope, run_universes

params = GbmParams(0.05, 0.45)
run = run_universes(params, T=150, steps=1500, ladder=(1, 10, 100, 1000, 10_000), seed=1)

print("t_c =", round(run.t_c, 2))
print("exemplar slope after t_c:", round(log_slope(run.times, run.exemplar, run.t_c), 4))

# fit each average only where that many paths can still carry exp(mu t);
# a single path has no such window
for n, avg in list(run.averages.items())[1:]:
    window = averaging_horizon(params, n)
    slope = log_slope(run.times, avg, 0, window)
    print(f"N={n:>6}  fit window [0, {window:5.1f}]  slope={slope:.4f}  p(150)={avg[-1]:.3g}")

# the same numbers at a few fixed times
idx = np.searchsorted(run.times, [10, 50, 100, 150])
print(np.column_stack([run.times[idx], run.exemplar[idx], run.averages[10_000][idx]]))
