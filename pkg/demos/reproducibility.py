"""
Reproducible parallel streams
=============================

Every normal is a pure function of (seed, path index, position), so an
ensemble comes out bit-identical for any thread count and path i can be
regenerated alone.
"""

from ergodic_leverage import GbmParams, substream
from ergodic_leverage.simulate import TimeGrid, exact_ensemble, sample_path_exact

params, grid = GbmParams(0.05, 0.45), TimeGrid(10, 100)

one = exact_ensemble(params, grid, 20_000, seed=42, threads=1).terminal_ratios
many = exact_ensemble(params, grid, 20_000, seed=42, threads=8).terminal_ratios
print("identical across thread counts:", one.tobytes() == many.tobytes())

# path 12345 on its own
alone = sample_path_exact(params, grid, substream(42, 12345))
print("path 12345 regenerated alone:", alone.values[-1] == one[12345])

s = substream(42, 0)
print("first normals:", [round(s.next_normal(), 6) for _ in range(4)], "position", s.position)
