"""
How fast a single path reveals its growth rate
==============================================

Relative errors of one-path estimates shrink like T**-0.5 and cross unity
at t_c.
"""

from ergodic_leverage import GbmParams
from ergodic_leverage.experiments import run_error_envelope

run = run_error_envelope(GbmParams(0.05, 0.45), T_list=(10, 100, 1000), samples=1000, seed=7)

print("g_bar =", run.g_bar)
for T in run.T_list:
    print(f"T={T:>6g}  envelope={run.envelope[T]:.3f}"
          f"  inside 1sd={run.coverage_1sd[T]:.3f}  inside 2sd={run.coverage_2sd[T]:.3f}")

# one long path settling down
for t in (100, 1000, 10_000):
    k = int(t / run.inset_times[-1] * len(run.inset_times)) - 1
    print(f"t={run.inset_times[k]:>7g}  g_est={run.inset_estimates[k]:+.4f}")
