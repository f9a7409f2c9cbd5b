"""
Slow sequences need more regularity
===================================

Along t_k = 1/log k the maximal function of f_nu, a bump at frequency 2^nu,
outgrows its L^2 norm.  The ratio r_nu keeps rising with nu; asymptotically
r_nu^2 is linear in nu, and at desk-scale nu the fit still carries a
sizeable offset.
"""

from schro_maxlab.counterexample import (
    BumpSpec,
    growth_experiment,
    optimal_time,
    stationary_phase_check,
)
from schro_maxlab.spectral import ExponentParams

params = ExponentParams(2.0, 0.5)
spec = BumpSpec(2.0)
print(f"bump flat on {spec.flat}, support in [{1 / spec.A:.3f}, {spec.A:.3f}]")

# the sequence term nearest the ideal time tau = 2^(nu(1-a)) x
for nu, x in ((4, 0.8), (8, 0.5), (12, 1.0)):
    t = optimal_time(x, nu, params)
    print(f"nu {nu:2d}, x {x}: tau {t.tau:.3e}, k {t.k}, substitution error {t.substitution_error_bound:.1e}")

table = growth_experiment(range(6, 13), params)
print(" nu   ||f_nu||     lower bound   r_nu")
for row in table.rows:
    print(f"{row.nu:3d}  {row.norm_f:10.4f}  {row.lower_bound_maximal:12.4f}  {row.ratio:.4f}")
print(f"log-log slope {table.exponent:.3f}")
print(f"r^2 = {table.sq_slope:.4f} (nu - {table.sq_offset:.3f})")

# the oscillatory integral behind the lower bound decays like 2^(-nu/2)
prev = None
for nu in (10, 12, 14, 16):
    r = stationary_phase_check(nu, 1.0, spec, params)
    step = "" if prev is None else f"  step ratio {r.integral_abs / prev:.3f}"
    print(f"nu {nu}: |I| {r.integral_abs:.4e}  floor {r.predicted_floor:.4e}{step}")
    prev = r.integral_abs
