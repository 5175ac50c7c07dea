"""The seismic operators one at a time, on small hand-sized inputs.

Run:  python3 demos/02_seismic_operators.py
"""

import numpy as np

from quakeopt import seismic as sm

p = sm.SeismicParams(m=12, vartheta=0.01)

# dispersion: lower (better) fitness gets more locations
fit = np.array([10.0, 8.0, 6.0, 4.0])
d = sm.dispersion_counts(fit, p)
print("fitness", fit, "-> raw D", d.raw.round(4), "counts", d.counts, "q =", d.q)

# power and magnitude are exact inverses of each other
P = sm.seismic_power(2.0, 5.0, p)
print(f"P(d=2, M=5) = {P}   M(P, d=2) = {sm.magnitude_from_power(P, 2.0, p)}")

# peak power per epicenter, then cumulative magnitudes (worse fitness -> wider range)
p_star, where, strongest = sm.peak_power([[1.0, 3.0], [2.0, 2.0]])
print("P* =", p_star, "at locations", where, "strongest epicenter", strongest)
C = sm.cumulative_magnitudes([4.0, 6.0], [4.0, 6.0], p)
print("C =", C.round(6), "sum", C.sum())

# relevance radius with the printed constants
print(f"r(M~=2.05) = {sm.relevance_radius([2.05], sm.SeismicParams()):.6f}")

# range identifier: E, R_k, R_l collinear with R_l between the others
print("Phi =", sm.range_identifier((0, 0), (2, 0), (1, 0), (2.0, 1.0)))

# spawning a new epicenter from nearby references stays within the radius
rng = sm.make_rng(0, 1)
refs = rng.uniform(size=(16, 2))
e = np.array([0.5, 0.5])
new = [sm.spawn_epicenter(e, refs, sm.SeismicParams(), rng, magnitude=1.0, radius=0.2,
                          low=np.zeros(2), up=np.ones(2)) for _ in range(5)]
print("spawned:", np.round(new, 3).tolist())

# locations: hypocentral displacement then Poisson scaling, wrapped into the box
x = 0.7
v = sm.hypocentral_displace([x], 0, 0.1, 1.2, rng)
print(f"displaced {x} -> {v:.4f} -> located {sm.poisson_location(v, sm.SeismicParams(), rng, 0.0, 1.0):.4f}")
print("wrap 13 into [0, 10):", sm.normalize_coordinate(13, 0, 10), " wrap -2:", sm.normalize_coordinate(-2, 0, 10))
