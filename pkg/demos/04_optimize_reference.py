"""Optimise the reference instance and compare with an exhaustive grid.

Run:  python3 demos/04_optimize_reference.py [generations]
"""

import itertools
import sys

import numpy as np

from quakeopt import problem
from quakeopt.engine import EngineConfig, run_optimizer

gens = int(sys.argv[1]) if len(sys.argv) > 1 else 100
spec = problem.reference_instance()

levels = np.linspace(0, 1, 21)
grid = np.array(list(itertools.product(levels, repeat=4)))
obj, viol = problem.evaluate_batch(spec, spec.expand(grid))
pen = obj[:, 0] + viol[:, 3]
k = int(np.argmin(pen))
print(f"grid optimum {pen[k]:.5f} at {grid[k]}")

rep = run_optimizer(spec, EngineConfig(seed=0, max_generations=gens))
best = rep.best
gap = 100 * (best.objectives[0] - pen[k]) / abs(pen[k])
print(f"{rep.generations} generations ({rep.stop_reason}) in {rep.wall_time:.1f} s")
print(f"best -G {best.objectives[0]:.5f} ({gap:+.2f}% vs grid) at {best.position.round(4)}")
print(f"violations {best.violations}, archive size {len(rep.archive)}")
for g in (0, len(rep.best_trajectory) // 2, len(rep.best_trajectory) - 1):
    print(f"  gen {g + 1:4d}: best {rep.best_trajectory[g]:.5f}  HV {rep.hypervolume_trajectory[g]:.4f}")
