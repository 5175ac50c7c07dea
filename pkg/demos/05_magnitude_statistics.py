"""Magnitude histograms, Gutenberg-Richter fits and Poisson aggregation.

Run:  python3 demos/05_magnitude_statistics.py
"""

import numpy as np

from quakeopt import analysis, problem
from quakeopt.engine import EngineConfig, run_optimizer

# exact synthetic counts recover the generating line
M = np.arange(1.0, 11.0)
for a in (10, 20):
    fit = analysis.gutenberg_richter_fit(analysis.MagnitudeHistogram.from_counts(M, 10.0 ** (a - M)))
    print(f"a={a}: fitted a={fit.a:.6f} b={fit.b:.6f}")

# magnitudes of the locations visited by a short optimiser run
rep = run_optimizer(problem.reference_instance(), EngineConfig(seed=0, max_generations=60))
mags = np.concatenate([np.asarray(g) for g in rep.magnitude_trace])
hist = analysis.magnitude_histogram(mags, 20)
fit = analysis.gutenberg_richter_fit(hist)
print(f"{hist.q} locations, GR fit a={fit.a:.3f} b={fit.b:.3f} residual={fit.residual:.3f}")
for mid, n, nf in zip(hist.midpoints[:6], hist.counts[:6], fit.predict(hist.midpoints[:6])):
    print(f"  M~{mid:.4f}: observed {n:5d}  fitted {nf:8.1f}")

# Poisson totals: mean equals variance, and the total looks Gaussian for large lambda
rng = np.random.default_rng(1)
for lam in (1e2, 1e6):
    r = analysis.poisson_aggregate_check([lam / 4] * 4, 1, 1000, rng)
    print(f"lambda(q)={lam:g}: mean/var={r.ratio:.3f}  KS p={r.ks_pvalue:.3f}  gaussian@1%={r.gaussian_at_1pct}")
