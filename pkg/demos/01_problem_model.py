"""Walk through the entanglement-allocation model on the reference instance.

Run:  python3 demos/01_problem_model.py
"""

import numpy as np

from quakeopt import problem

spec = problem.reference_instance()
print(f"N={spec.N} nodes, T={spec.T} fidelity types, active dims {spec.active_dims.tolist()}")

# node classes: a node is high-class only if every type reaches F*
part = problem.classify_nodes(spec)
print("fidelities per node:\n", spec.fidelities.round(3))
print("S_low =", sorted(part.low), " S_high =", sorted(part.high), " alpha =", spec.alpha)

# a throughput matrix: type 0 at mid-range, type 1 pinned at zero
X = spec.expand(np.full(4, 0.5))
obj = problem.objective_vector(spec, X)
print(f"G = {-obj.g_neg:.4f}   C(X) = {obj.f1:.4f}   S(X) = {obj.f2:.4f}")

rec = problem.constraint_violations(spec, X)
print(f"h1={rec.h1:.4f} h2={rec.h2:.4f} h3={rec.h3:.4f} penalty={rec.penalty:.4f} feasible={rec.feasible}")

# class split of G always adds back up
g_low, g_high = problem.class_objectives(spec, X, part)
print(f"g_low + g_high = {g_low + g_high:.6f}  vs  G = {problem.main_objective(spec, X):.6f}")

# how does each node react to a small uniform throughput increase?
for i in range(spec.N):
    r = problem.recommend_strategy(spec, X, i)
    print(f"node {i} ({r.node_class}): dF/db = {r.fidelity_sensitivity:.4f}, "
          f"dD/db = {r.relent_sensitivity:.4f} -> {r.action}")

# quantities from the class-resolved formulation are diagnostics only
print({k: round(v, 4) if isinstance(v, float) else v for k, v in problem.class_diagnostics(spec, X, part).items()})
