import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schro_maxlab.maximal import (
    SpectralSampler,
    augmented_class,
    interval_sup_check,
    lowhigh_split,
    maximal_field,
    sup_deviation_integral,
    theorem3_sums,
    theorem4_ratio_sweep,
)
from schro_maxlab.spectral import (
    ExponentParams,
    FrequencyGrid,
    SpectralFunction,
    evaluate_lattice,
    h_s_norm,
    random_spectral_function,
    spatial_l2_norm,
)
from schro_maxlab.timesets import Interval, TimeSet, covering_number, seq_generate

P = ExponentParams(2.0, 0.5)
G = FrequencyGrid(1, 2 * math.pi, 64)
RES = 2 * G.side


def rand_f(seed, grid=G):
    return random_spectral_function(grid, np.random.default_rng(seed))


def mode(grid, m, c=1.0):
    coeffs = np.zeros(grid.n_modes, dtype=complex)
    coeffs[grid.mode_bound + m] = c
    return SpectralFunction(grid, coeffs)


# ------------------------------------------------------------ maximal field


def test_single_time_zero_gives_modulus():
    f = rand_f(0)
    rep = maximal_field(f, TimeSet([0.0]), ExponentParams(2.0, 0.0), RES)
    np.testing.assert_allclose(rep.max_values, np.abs(evaluate_lattice(f, 0.0, P, RES)), rtol=1e-15)
    # s = 0 makes every term 1: the sum is truncated at m_max + 1 terms
    assert rep.sum_value == 41
    assert rep.ratio == pytest.approx(1 / (2 * math.pi * 41), rel=1e-12)


def test_single_mode_is_time_independent():
    f = mode(G, 7, 2 - 1j)
    rep = maximal_field(f, seq_generate("geometric", 10, r=0.5), P, RES)
    np.testing.assert_allclose(rep.max_values, abs(2 - 1j) * G.spacing / (2 * math.pi), rtol=1e-13)


def test_max_dominates_each_time_and_quadrature():
    f = rand_f(1)
    E = seq_generate("geometric", 16, r=0.7)
    rep = maximal_field(f, E, P, RES)
    for t in E.times:
        assert np.all(rep.max_values >= np.abs(evaluate_lattice(f, t, P, RES)))
    assert rep.l2_sq == pytest.approx(math.fsum(rep.max_values**2) * G.period / RES, rel=1e-12)
    assert rep.hs_sq == pytest.approx(h_s_norm(f, P.s) ** 2, rel=1e-15)


def test_maximal_field_rejects_bad_input():
    with pytest.raises(ValueError, match="resolution"):
        maximal_field(rand_f(2), TimeSet([0.1]), P, RES - 1)
    with pytest.raises(ValueError):
        maximal_field(rand_f(2), Interval(), P, RES)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.lists(st.floats(0, 1), min_size=1, max_size=6, unique=True), st.floats(0.1, 5))
def test_dominance_subadditivity_scaling(seed, times, c):
    g = FrequencyGrid(1, 2 * math.pi, 12)
    res = 2 * g.side
    f, h = rand_f(seed, g), rand_f(seed + 1, g)
    E = TimeSet(sorted(times + [0.5] if 0.5 not in times else times))
    sub = TimeSet(sorted(times))
    big = maximal_field(f, E, P, res)
    small = maximal_field(f, sub, P, res)
    assert np.all(big.max_values >= small.max_values)
    fh = maximal_field(f + h, sub, P, res).max_values
    assert np.all(fh <= small.max_values + maximal_field(h, sub, P, res).max_values + 1e-12)
    scaled = maximal_field(c * f, sub, P, res)
    np.testing.assert_allclose(scaled.max_values, c * small.max_values, rtol=1e-13)
    assert scaled.ratio == pytest.approx(small.ratio, rel=1e-12)


# ------------------------------------------------------------------- sweeps


def test_single_mode_sweep_matches_closed_form():
    sampler = SpectralSampler(32, kind="single_mode")
    E = seq_generate("power", 20, p=2.0)
    stats = theorem4_ratio_sweep(8, sampler, E, P, seed=3)
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(3).spawn(8)]
    want = []
    for rng in rngs:
        f = sampler.draw(rng)
        xi = f.grid.abs_frequencies[f.support[0]]
        want.append(1 / (2 * math.pi * (1 + xi**2) ** P.s * stats.sum_value))
    np.testing.assert_allclose(stats.ratios, want, rtol=1e-12)


def test_sweep_is_seeded():
    sampler = SpectralSampler(16)
    E = seq_generate("power", 10, p=2.0)
    a = theorem4_ratio_sweep(4, sampler, E, P, seed=5)
    b = theorem4_ratio_sweep(4, sampler, E, P, seed=5)
    np.testing.assert_array_equal(a.ratios, b.ratios)


def test_sampler_rejects_unknown_kind():
    with pytest.raises(ValueError):
        SpectralSampler(4, kind="cauchy").draw(np.random.default_rng(0))


# ---------------------------------------------------------- low/high split


def test_lowhigh_examples():
    f = rand_f(4)
    low, high = lowhigh_split(f, 1, 10.0)
    assert not high.coeffs.any()
    # cutoff 2^(b1 j) is at least 1, so a spacing of 2 leaves only the DC mode below it
    coarse = rand_f(4, FrequencyGrid(1, math.pi, 8))
    low, high = lowhigh_split(coarse, 1, 0.5)
    assert low.support.tolist() == [8]
    with pytest.raises(ValueError):
        lowhigh_split(f, 0, 1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 12), st.floats(0.05, 3))
def test_lowhigh_partition(seed, j, b1):
    f = rand_f(seed)
    low, high = lowhigh_split(f, j, b1)
    np.testing.assert_array_equal((low + high).coeffs, f.coeffs)
    assert h_s_norm(low, 0) ** 2 + h_s_norm(high, 0) ** 2 == pytest.approx(h_s_norm(f, 0) ** 2, rel=1e-13)


# --------------------------------------------------------- low/high sums


def test_augmented_class_gaps():
    ts = seq_generate("geometric", 20, r=0.5)
    for j in (1, 4, 9):
        v = augmented_class(ts, j, 2 / 3)
        assert v[0] == 0.0 and v[-1] == 2.0**-j
        assert np.diff(v).max() <= 2.0**-j * 2.0 ** (-2 / 3 * j) * (1 + 1e-12)


def test_lowhigh_sums_single_mode_one_class():
    ts = seq_generate("geometric", 6, r=0.5)
    f = mode(G, 3, 0.5)
    b = 2 / 3
    res = theorem3_sums(f, ts, P, b=b, j_max=1)
    v = augmented_class(ts, 1, b)
    omega = 3.0**2
    direct = 2.0**b * math.fsum(np.abs(np.exp(1j * v[1:] * omega) - np.exp(1j * v[:-1] * omega)) ** 2) * 0.25 * G.spacing
    b1 = b / (2 * P.s)
    if 3.0 <= 2.0**b1:
        assert res.low_sum == pytest.approx(direct, rel=1e-12) and res.high_sum == 0
    else:
        assert res.low_sum == 0
        assert res.high_sum == pytest.approx(v.size * 0.25 * G.spacing, rel=1e-12)
    # force the mode into the low part
    low = theorem3_sums(f, ts, P, b=4.0, j_max=1)
    v4 = augmented_class(ts, 1, 4.0)
    want = 2.0**4 * math.fsum(np.abs(np.exp(1j * v4[1:] * omega) - np.exp(1j * v4[:-1] * omega)) ** 2) * 0.25 * G.spacing
    assert low.low_sum == pytest.approx(want, rel=1e-12)


def test_lowhigh_sums_dc_only_vanishes():
    res = theorem3_sums(mode(G, 0, 1.0), seq_generate("geometric", 12, r=0.5), P, j_max=8)
    assert res.low_sum == 0 and res.high_sum == 0


def test_lowhigh_sums_requires_nonempty_classes():
    with pytest.raises(ValueError, match="empty"):
        theorem3_sums(rand_f(5), seq_generate("power", 50, p=2.0), P, j_max=4)


def test_lowhigh_sums_bounded_over_truncation():
    grid = FrequencyGrid(1, 8 * math.pi, 64)
    ts = seq_generate("geometric", 24, r=0.5)
    f = rand_f(6, grid)
    vals = [theorem3_sums(f, ts, P, j_max=j) for j in (8, 12, 16)]
    lows = [v.low_sum / v.hs_sq for v in vals]
    highs = [v.high_sum / v.hs_sq for v in vals]
    assert lows == sorted(lows) and highs == sorted(highs)
    assert lows[-1] / lows[0] < 1.1 and highs[-1] / highs[0] < 1.1


# ---------------------------------------------------------- interval sups


def test_interval_sup_degenerate_and_errors():
    f = rand_f(7)
    assert interval_sup_check(f, (0.2, 0.0), P, 16).lhs == 0.0
    with pytest.raises(ValueError):
        interval_sup_check(f, (0.2, -0.1), P, 16)
    with pytest.raises(ValueError):
        interval_sup_check(f, (0.2, 0.1), P, 8)


def test_interval_sup_single_mode_closed_form():
    c, m = 0.3 + 0.4j, 5
    f = mode(G, m, c)
    b0, r, N = 0.1, 0.05, 16
    res = interval_sup_check(f, (b0, r), P, N)
    t = b0 + r * np.arange(N + 1) / N
    e = np.exp(1j * t * m**2)
    diam = max(abs(x - y) ** 2 for x, y in itertools.combinations(e, 2))
    amp = abs(c) * G.spacing / (2 * math.pi)
    assert res.lhs == pytest.approx(G.period * amp**2 * diam, rel=1e-12)
    assert res.lhs <= (r * m**2) ** 2 * G.period * amp**2
    assert res.rhs_bound == pytest.approx(r**2 * m**4 * spatial_l2_norm(f) ** 2, rel=1e-12)


def test_interval_sup_bound_and_mesh_convergence():
    f = rand_f(8, FrequencyGrid(1, 2 * math.pi, 32))
    coarse = interval_sup_check(f, (0.3, 0.002), P, 64)
    fine = interval_sup_check(f, (0.3, 0.002), P, 128)
    assert coarse.ratio <= 1 and fine.ratio <= 1
    assert fine.lhs >= coarse.lhs
    assert abs(fine.lhs / coarse.lhs - 1) < 0.01


def test_sup_over_set_is_bounded_by_cover_pieces():
    f = rand_f(9, FrequencyGrid(1, 2 * math.pi, 24))
    E = seq_generate("power", 30, p=2.0)
    r = 1 / 32
    total = sup_deviation_integral(f, E.times, P)
    # greedy cover: consecutive runs of times within r of the run's first time
    pieces, start = [], 0
    t = E.times
    for i in range(1, t.size + 1):
        if i == t.size or t[i] > t[start] + r:
            pieces.append(t[start:i])
            start = i
    assert len(pieces) == covering_number(E, r)
    assert total <= math.fsum(sup_deviation_integral(f, piece, P) for piece in pieces) * (1 + 1e-12)
