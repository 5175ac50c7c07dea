"""Dominance, strength/density fitness, the archive and the 2-D hypervolume.

Run:  python3 demos/03_pareto_and_hypervolume.py
"""

import numpy as np

from quakeopt.hypervolume import contributions, hypervolume_2d
from quakeopt.pareto import ParetoArchive, Solution, fitness_assignment, nondominated_filter

chain = [(1, 1), (2, 2), (3, 3)]
f = fitness_assignment(chain)
print("chain strengths", f.strength, "raw", f.raw, "density", f.density.round(3))

# stream random candidates through the archive and compare with brute force
rng = np.random.default_rng(0)
obj = rng.uniform(size=(200, 2))
arc = ParetoArchive()
for i, o in enumerate(obj):
    arc.insert(Solution(i, np.zeros(1), o))
ids = sorted(m.id for m in arc)
print(f"archive keeps {len(ids)} of 200; matches brute force: {ids == nondominated_filter(obj).tolist()}")

front = np.array([(1, 3), (2, 2), (3, 1)], dtype=float)
print("HV of staircase, ref (4,4):", hypervolume_2d(front, (4, 4)))
print("exclusive contributions:", contributions(front, (4, 4)))

# a quick Monte Carlo check of the sweep
s = rng.uniform(0, 4, size=(1_000_000, 2))
covered = np.zeros(len(s), dtype=bool)
for p in front:
    covered |= np.all(s >= p, axis=1)
print("Monte Carlo estimate:", round(16 * covered.mean(), 3))
