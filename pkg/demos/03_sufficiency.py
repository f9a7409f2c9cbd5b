"""
The sufficiency series
======================

Pointwise convergence along E holds for H_s data when
sum_m N_E(2^-m) 2^(-2ms/a) is finite.  For the unit interval this is a
geometric series that converges exactly when 2s/a > 1; for a Cantor set the
threshold moves to its dimension.
"""

from schro_maxlab.timesets import (
    Interval,
    cantor_build,
    cantor_dimension,
    cantor_valid_m_max,
    exponents,
    sufficiency_sum,
)
from schro_maxlab.spectral import ExponentParams

a = 2.0
for q in (0.5, 1.0, 1.2, 2.0):
    res = sufficiency_sum(Interval(), q * a / 2, a, 40)
    closed = 1 / (1 - 2.0 ** (1 - q)) if q > 1 else float("inf")
    print(f"2s/a = {q}: {res.verdict:<10} total {res.total:.12g}  closed form {closed:.12g}")

# Cantor(1/3): dimension 0.6309 sits between 2s/a = 0.5 and 0.7
c = cantor_build(1 / 3, 12)
m = cantor_valid_m_max(c)
print("dimension", cantor_dimension(1 / 3), "valid up to m =", m)
for s in (0.5, 0.7):
    res = sufficiency_sum(c, s, a, m)
    print(f"s = {s}: {res.verdict}, geometric-mean term ratio {res.decay_ratio:.4f}")

# derived exponents for a = 2, s = 1/2
e = exponents(ExponentParams(2.0, 0.5))
print(e)
