"""
Time sets and covering numbers
==============================

Convergence along a set of times is governed by how many intervals of
length r it takes to cover the set.  Sequences tending to zero, intervals
and middle-interval Cantor stages are all supported.
"""

from schro_maxlab.timesets import (
    Interval,
    cantor_build,
    cantor_dimension,
    covering_number,
    dumps,
    loads,
    seq_generate,
)

power = seq_generate("power", 200, p=2.0)      # t_k = 1/k^2
geometric = seq_generate("geometric", 30, r=0.5)
cantor = cantor_build(1 / 3, 10)

print(" m   interval   1/k^2   2^-k   Cantor(1/3)")
for m in range(0, 12, 2):
    r = 2.0**-m
    row = [covering_number(E, r) for E in (Interval(), power, geometric, cantor)]
    print(f"{m:2d}   {row[0]:8d} {row[1]:7d} {row[2]:6d} {row[3]:8d}")

# at r = 3^-k the Cantor stage needs exactly 2^k intervals
print([covering_number(cantor, 3.0**-k) for k in range(11)])
print("dimension log2/log3 =", cantor_dimension(1 / 3))

# descriptors are plain JSON
text = dumps(geometric)
print(text[:80], "...")
print(len(loads(text)) == len(geometric))
