"""
The maximal function along a time set
=====================================

sup over t in E of |S_t f|, integrated in space and divided by
sum_m N_E(2^-m) 2^(-2ms/a) ||f||_{H_s}^2, should stay bounded over f.  Here
we watch that ratio across random functions and two very different sets.
"""

import math

import numpy as np

from schro_maxlab.maximal import (
    SpectralSampler,
    interval_sup_check,
    maximal_field,
    theorem3_sums,
    theorem4_ratio_sweep,
)
from schro_maxlab.spectral import ExponentParams, FrequencyGrid, random_spectral_function
from schro_maxlab.timesets import cantor_build, cantor_endpoints, seq_generate

params = ExponentParams(2.0, 0.5)
sampler = SpectralSampler(mode_bound=64)
sets = {
    "Cantor level 8 endpoints": cantor_endpoints(cantor_build(1 / 3, 8)),
    "1/k^2, 200 terms": seq_generate("power", 200, p=2.0),
}
for name, E in sets.items():
    stats = theorem4_ratio_sweep(30, sampler, E, params, seed=0)
    print(f"{name}: max ratio {stats.max_ratio:.4g}, mean {stats.mean_ratio:.4g}, sum {stats.sum_value:.4g}")

# a single function in detail
f = sampler.draw(np.random.default_rng(1))
rep = maximal_field(f, sets["1/k^2, 200 terms"], params, 2 * f.grid.side)
print("max over x of sup_t |S_t f| =", rep.max_values.max())

# short intervals: the sup of |S_t f - S_b f| over [b, b + r] is O(r)
for r in (0.01, 0.001):
    chk = interval_sup_check(f, (0.2, r), params, 32)
    print(f"r = {r}: lhs {chk.lhs:.3e}, bound {chk.rhs_bound:.3e}")

# low and high frequency sums barely move when more dyadic classes are added
grid = FrequencyGrid(1, 8 * math.pi, 64)
g = random_spectral_function(grid, np.random.default_rng(2))
ts = seq_generate("geometric", 24, r=0.5)
for j in (8, 12, 16):
    res = theorem3_sums(g, ts, params, j_max=j)
    print(f"j_max {j:2d}: low/H_s {res.low_sum / res.hs_sq:.6f}  high/H_s {res.high_sum / res.hs_sq:.6f}")
