"""Numerical laboratory for maximal estimates of fractional Schrodinger means

``S_t f = F^-1(exp(i t |xi|^a) fhat)`` along time sets ``E subset [0, 1]``.

Modules: ``spectral`` (band-limited functions and the propagator),
``timesets`` (sequences, Cantor sets, covering numbers, sufficiency sums),
``maximal`` (maximal functions and the quantities in their L2 bounds),
``counterexample`` (growth along ``t_k = 1/log k``) and ``cli``.
"""

__version__ = "0.1.0"
