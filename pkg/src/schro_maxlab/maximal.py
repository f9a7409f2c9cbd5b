"""Maximal functions over finite time sets and the inequalities behind them.

Spatial integrals are lattice quadratures over one period cell.  With at
least ``2 (2M+1)`` points per axis the quadrature of ``|S_t f|^2`` is exact
(the square is band-limited at twice the band), so the only discretisation
left in ``int sup_t |S_t f|^2`` is the pointwise maximum itself, which is
checked by refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .parallel import ordered_map
from .spectral import (
    ExponentParams,
    FrequencyGrid,
    SpectralFunction,
    evaluate_lattice,
    h_s_norm,
    random_spectral_function,
    spatial_lattice,
    spatial_l2_norm,
)
from .timesets import TimeSet, dyadic_classes, sufficiency_sum

__all__ = [
    "MaximalReport",
    "SpectralSampler",
    "SweepStats",
    "Theorem3Sums",
    "IntervalSupResult",
    "maximal_field",
    "theorem4_ratio_sweep",
    "lowhigh_split",
    "augmented_class",
    "theorem3_sums",
    "interval_sup_check",
    "sup_deviation_integral",
]

SUM_M_MAX = 40


@dataclass(frozen=True, eq=False)
class MaximalReport:
    """Pointwise ``S* f = max_{t in E} |S_t f|`` on the lattice plus the two
    sides of the maximal inequality.

    ``ratio = l2_sq / (sum_value * hs_sq)``.  ``l2_sq`` is the spatial integral
    over one cell while ``hs_sq`` is a frequency-side sum, so at ``E = {0}``
    and ``s = 0`` the ratio is ``1 / ((2 pi)^n sum_value)``.
    """

    x_points: np.ndarray = field(repr=False)
    max_values: np.ndarray = field(repr=False)
    l2_sq: float
    hs_sq: float
    sum_value: float
    ratio: float
    m_max: int
    sum_tail: float
    resolution: int

    def summary(self) -> dict:
        return {
            "l2_sq": self.l2_sq,
            "hs_sq": self.hs_sq,
            "sum_value": self.sum_value,
            "ratio": self.ratio,
            "m_max": self.m_max,
            "sum_tail": self.sum_tail,
            "resolution": self.resolution,
        }


def _cell(grid: FrequencyGrid, resolution: int) -> float:
    return (grid.period / resolution) ** grid.dim


def _min_resolution(grid: FrequencyGrid) -> int:
    return 2 * grid.side


def maximal_field(
    f: SpectralFunction,
    E: TimeSet,
    params: ExponentParams,
    spatial_resolution: int,
    m_max: int = SUM_M_MAX,
) -> MaximalReport:
    if not isinstance(E, TimeSet) or len(E) == 0:
        raise ValueError("maximal_field needs a nonempty finite TimeSet")
    if spatial_resolution < _min_resolution(f.grid):
        raise ValueError(
            f"spatial_resolution {spatial_resolution} is below twice the mode count "
            f"({_min_resolution(f.grid)})"
        )

    def field_abs(t):
        return np.abs(evaluate_lattice(f, float(t), params, spatial_resolution))

    fields = ordered_map(field_abs, E.times)
    smax = np.maximum.reduce(fields) if len(fields) > 1 else fields[0]
    smax = smax.reshape(-1)
    l2_sq = math.fsum(smax**2) * _cell(f.grid, spatial_resolution)
    hs_sq = h_s_norm(f, params.s) ** 2
    suff = sufficiency_sum(E, params.s, params.a, m_max)
    if math.isfinite(suff.total):
        sum_value, tail = suff.total, suff.tail
    else:
        sum_value, tail = float(suff.partial_sums[-1]), math.inf
    ratio = l2_sq / (sum_value * hs_sq) if hs_sq > 0 else math.nan
    return MaximalReport(
        spatial_lattice(f.grid, spatial_resolution),
        smax,
        l2_sq,
        hs_sq,
        sum_value,
        ratio,
        m_max,
        tail,
        spatial_resolution,
    )


# ----------------------------------------------------------------- ratio sweep


@dataclass(frozen=True)
class SpectralSampler:
    """Recipe for seeded random band-limited functions.

    ``kind="gaussian"``: complex Gaussian coefficients on every mode, damped by
    ``(1+|xi|^2)^(-decay/2)``.  ``kind="single_mode"``: one uniformly chosen
    mode with a unit-modulus random coefficient.
    """

    mode_bound: int
    period: float = 2 * math.pi
    dim: int = 1
    kind: str = "gaussian"
    decay: float = 0.0

    @property
    def grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.dim, self.period, self.mode_bound)

    def draw(self, rng: np.random.Generator) -> SpectralFunction:
        grid = self.grid
        if self.kind == "gaussian":
            return random_spectral_function(grid, rng, self.decay)
        if self.kind == "single_mode":
            c = np.zeros(grid.n_modes, dtype=np.complex128)
            c[rng.integers(grid.n_modes)] = np.exp(2j * np.pi * rng.random())
            return SpectralFunction(grid, c)
        raise ValueError(f"unknown sampler kind {self.kind!r}")


@dataclass(frozen=True, eq=False)
class SweepStats:
    max_ratio: float
    mean_ratio: float
    ratios: np.ndarray = field(repr=False)
    sum_value: float


def theorem4_ratio_sweep(
    trials: int,
    sampler: SpectralSampler,
    E: TimeSet,
    params: ExponentParams,
    seed: int = 0,
    spatial_resolution: int | None = None,
) -> SweepStats:
    """Empirical constant ``sup_f int |S* f|^2 / (sum_m N_E(2^-m) 2^(-2ms/a) ||f||_{H_s}^2)``."""
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    res = spatial_resolution or _min_resolution(sampler.grid)
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(trials)]
    reports = [maximal_field(sampler.draw(rng), E, params, res) for rng in rngs]
    ratios = np.array([r.ratio for r in reports])
    return SweepStats(float(ratios.max()), float(ratios.mean()), ratios, reports[0].sum_value)


# ------------------------------------------------------- low/high frequency sums


def lowhigh_split(f: SpectralFunction, j: int, b1: float) -> tuple[SpectralFunction, SpectralFunction]:
    """Split at ``|xi| <= 2^(b1 j)``; ``low + high == f`` exactly."""
    if j < 1 or not b1 > 0:
        raise ValueError(f"need j >= 1 and b1 > 0, got j = {j}, b1 = {b1}")
    low = f.grid.abs_frequencies <= 2.0 ** (b1 * j)
    return f.with_coeffs(np.where(low, f.coeffs, 0)), f.with_coeffs(np.where(low, 0, f.coeffs))


def augmented_class(ts: TimeSet, j: int, b: float) -> np.ndarray:
    """``A_j`` padded to ``0 = v_0 < ... < v_N = 2^-j`` with gaps ``<= 2^-j 2^-bj``.

    The padding is the uniform grid with ``ceil(2^(bj))`` steps on ``[0, 2^-j]``.
    """
    hi = 2.0**-j
    lo = 2.0 ** -(j + 1)
    t = ts.times
    cls = t[(t > lo) & (t <= hi)]
    steps = math.ceil(2.0 ** (b * j) * (1 - 1e-12))
    grid = np.arange(steps + 1) * (hi / steps)
    grid[-1] = hi
    return np.unique(np.concatenate([grid, cls]))


@dataclass(frozen=True, eq=False)
class Theorem3Sums:
    """Truncated low- and high-frequency double sums (frequency-side norms).

    ``low_terms[j-1]`` and ``high_terms[j-1]`` are the per-class contributions.
    """

    low_sum: float
    high_sum: float
    hs_sq: float
    low_terms: np.ndarray = field(repr=False)
    high_terms: np.ndarray = field(repr=False)
    class_sizes: np.ndarray = field(repr=False)
    b: float
    b1: float


def theorem3_sums(
    f: SpectralFunction,
    ts: TimeSet,
    params: ExponentParams,
    b: float | None = None,
    j_max: int = 8,
) -> Theorem3Sums:
    """``sum_j 2^(bj) sum_k ||S_{v_k,low} f - S_{v_{k-1},low} f||^2`` and
    ``sum_j sum_k ||S_{v_k,high} f||^2`` over the padded classes.

    Norms are frequency-side, ``sum |.|^2 dxi^n``, matching ``hs_sq``.  The
    low frequencies of class ``j`` are ``|xi| <= 2^(b1 j)`` with ``b1 = b/(2s)``.
    """
    params.require(s_lt_a=True, s_pos=True)
    if b is None:
        b = 2 * params.s / (params.a - params.s)
    b1 = b / (2 * params.s)
    if j_max < 1:
        raise ValueError(f"j_max must be positive, got {j_max}")
    prof = dyadic_classes(ts, j_max)
    empty = [j for j in range(1, j_max + 1) if prof.counts[j] == 0]
    if empty:
        raise ValueError(f"dyadic classes {empty} of the time set are empty")

    r = f.grid.abs_frequencies
    idx = f.support
    w = (np.abs(f.coeffs[idx]) ** 2) * f.grid.cell_volume
    r = r[idx]
    omega = r**params.a
    low_terms = np.zeros(j_max)
    high_terms = np.zeros(j_max)
    sizes = np.zeros(j_max, dtype=np.int64)
    for j in range(1, j_max + 1):
        v = augmented_class(ts, j, b)
        sizes[j - 1] = v.size
        low = r <= 2.0 ** (b1 * j)
        gaps = np.diff(v)
        if low.any():
            # |e^{i v_k w} - e^{i v_{k-1} w}|^2 = 4 sin^2(gap w / 2)
            acc = np.zeros(int(low.sum()))
            om = omega[low]
            step = max(1, (1 << 22) // om.size)
            for lo in range(0, gaps.size, step):
                acc += np.sum(4 * np.sin(np.outer(gaps[lo : lo + step], om) / 2) ** 2, axis=0)
            low_terms[j - 1] = 2.0 ** (b * j) * math.fsum(acc * w[low])
        high_terms[j - 1] = v.size * math.fsum(w[~low])
    hs_sq = h_s_norm(f, params.s) ** 2
    return Theorem3Sums(
        math.fsum(low_terms), math.fsum(high_terms), hs_sq, low_terms, high_terms, sizes, b, b1
    )


# ------------------------------------------------------------- interval sups


@dataclass(frozen=True)
class IntervalSupResult:
    lhs: float
    rhs_bound: float
    support_radius: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs_bound if self.rhs_bound > 0 else 0.0


def _fields(f, times, params, res):
    return np.stack(ordered_map(lambda t: evaluate_lattice(f, float(t), params, res).reshape(-1), times))


def _diameter_sq(z: np.ndarray) -> np.ndarray:
    """Per column, ``max_{i,k} |z_i - z_k|^2`` for a ``(T, X)`` complex array."""
    out = np.zeros(z.shape[1])
    step = max(1, (1 << 22) // (z.shape[0] ** 2))
    for lo in range(0, z.shape[1], step):
        blk = z[:, lo : lo + step]
        d = np.abs(blk[:, None, :] - blk[None, :, :]) ** 2
        out[lo : lo + step] = d.max(axis=(0, 1))
    return out


def interval_sup_check(
    f: SpectralFunction,
    interval: tuple[float, float],
    params: ExponentParams,
    N_mesh: int,
    spatial_resolution: int | None = None,
) -> IntervalSupResult:
    """``int max_{t,u in T} |S_t f - S_u f|^2`` over the mesh ``T`` of ``[b, b+r]``
    (``N_mesh`` steps) against ``r^2 A^(2a) ||f||_2^2``, ``A`` the support radius.

    ``interval`` is ``(b, r)``.  The mesh maximum is a lower bound for the
    supremum over the whole interval.
    """
    b0, r = interval
    if r < 0:
        raise ValueError(f"interval length must be nonnegative, got {r}")
    if N_mesh < 16:
        raise ValueError(f"N_mesh must be at least 16, got {N_mesh}")
    A = f.support_radius
    rhs = r**2 * A ** (2 * params.a) * spatial_l2_norm(f) ** 2
    if r == 0:
        return IntervalSupResult(0.0, rhs, A)
    res = spatial_resolution or _min_resolution(f.grid)
    times = b0 + r * np.arange(N_mesh + 1) / N_mesh
    d = _diameter_sq(_fields(f, times, params, res))
    lhs = math.fsum(d) * _cell(f.grid, res)
    return IntervalSupResult(lhs, rhs, A)


def sup_deviation_integral(
    f: SpectralFunction, times, params: ExponentParams, spatial_resolution: int | None = None
) -> float:
    """``int max_{t in times} |S_t f(x) - f(x)|^2 dx`` over one cell."""
    res = spatial_resolution or _min_resolution(f.grid)
    z = _fields(f, np.asarray(times, dtype=float), params, res)
    f0 = evaluate_lattice(f, 0.0, params, res).reshape(-1)
    return math.fsum(np.max(np.abs(z - f0) ** 2, axis=0)) * _cell(f.grid, res)
