"""Unboundedness of the maximal operator along ``t_k = 1/log k``.

The test functions are dilated bumps ``fhat_nu(xi) = phi(2^-nu xi)``.  For each
``x`` in ``[C 2^-nu, 1]`` the time ``tau(x) = 2^nu x / 2^(nu a)`` turns the
phase of ``S_tau f_nu(x)`` into ``2^nu x (|eta|^a + eta)``, which has a
nondegenerate critical point at ``eta = -a^(-1/(a-1))`` where ``phi = 1``.
The sequence has a term within ``tau^2 exp(-1/tau)`` of ``tau``, so
``int |S* f_nu|^2 >= int_{C 2^-nu}^1 |S_tau(x) f_nu(x)|^2 dx``, which grows
like ``2^nu nu`` while ``||f_nu||^2`` grows like ``2^nu``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .parallel import ordered_map
from .spectral import (
    ExponentParams,
    FrequencyGrid,
    SpectralFunction,
    evaluate_along,
    evaluate_lattice,
    lipschitz_time_bound,
    sample_symbol,
    spatial_l2_norm,
)

__all__ = [
    "BumpSpec",
    "GrowthRow",
    "GrowthTable",
    "OptimalTime",
    "StationaryPhaseResult",
    "smooth_step",
    "bump_phi",
    "psi_bump",
    "f_nu_grid",
    "make_f_nu",
    "make_f_nu_2d",
    "optimal_time",
    "growth_experiment",
    "critical_point",
    "stationary_phase_integral",
    "calibrate_floor",
    "stationary_phase_check",
]

DEFAULT_C = 8.0
DEFAULT_PERIOD = 32.0
# largest k for which 1/log k and 1/log(k+1) are still distinct doubles near tau
ENUMERABLE_K = 2.0**53
MODE_BUDGET = 4_000_000
QUAD_BUDGET = 50_000_000


def smooth_step(x):
    """C-infinity step: 0 for ``x <= 0``, 1 for ``x >= 1``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        p = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        q = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return p / (p + q)


@dataclass(frozen=True)
class BumpSpec:
    """Even plateau bump in ``1/A <= |xi| <= A``, equal to 1 for
    ``|xi|`` within ``plateau`` (relative) of ``rho = a^(-1/(a-1))``."""

    a: float
    A: float | None = None
    plateau: float = 0.1

    def __post_init__(self):
        if not self.a > 1:
            raise ValueError(f"the bump needs a > 1, got {self.a}")
        if not 0 < self.plateau < 1:
            raise ValueError(f"plateau must lie in (0, 1), got {self.plateau}")
        if self.A is None:
            object.__setattr__(self, "A", 2 * max(1.0, self.rho) * 1.3)
        if not self.A > 1:
            raise ValueError(f"A must exceed 1, got {self.A}")
        lo, hi = self.flat
        if not (1 / self.A < lo and hi < self.A):
            raise ValueError(
                f"plateau [{lo:.4g}, {hi:.4g}] around a^(-1/(a-1)) = {self.rho:.4g} "
                f"is not inside (1/A, A) = ({1 / self.A:.4g}, {self.A:.4g})"
            )

    @property
    def rho(self) -> float:
        return self.a ** (-1.0 / (self.a - 1.0))

    @property
    def flat(self) -> tuple[float, float]:
        return (1 - self.plateau) * self.rho, (1 + self.plateau) * self.rho


def bump_phi(spec: BumpSpec):
    """The profile ``phi`` as a vectorised real function of ``xi``."""
    lo, hi = spec.flat
    inner, outer = 1.0 / spec.A, spec.A

    def phi(xi):
        r = np.abs(np.asarray(xi, dtype=float))
        return smooth_step((r - inner) / (lo - inner)) * smooth_step((outer - r) / (outer - hi))

    return phi


def psi_bump(flat: float = 0.5, outer: float = 1.5):
    """Fixed transverse factor: 1 for ``|xi| <= flat``, 0 for ``|xi| >= outer``."""

    def psi(xi):
        r = np.abs(np.asarray(xi, dtype=float))
        return smooth_step((outer - r) / (outer - flat))

    return psi


def f_nu_grid(nu: int, spec: BumpSpec, period: float = DEFAULT_PERIOD) -> FrequencyGrid:
    """Smallest 1-D grid whose band contains ``A 2^nu``.

    The period is doubled until the spacing resolves the annulus with 64 cells.
    """
    max_dxi = (spec.A - 1 / spec.A) * 2.0**nu / 64
    while 2 * math.pi / period > max_dxi:
        period *= 2
    dxi = 2 * math.pi / period
    M = math.ceil(spec.A * 2.0**nu / dxi) + 1
    if 2 * M + 1 > MODE_BUDGET:
        raise ValueError(f"nu = {nu} needs {2 * M + 1} modes, above the budget {MODE_BUDGET}")
    return FrequencyGrid(1, period, M)


def _check_resolution(nu: int, spec: BumpSpec, grid: FrequencyGrid) -> None:
    band = grid.mode_bound * grid.spacing
    need_band = spec.A * 2.0**nu
    max_dxi = (spec.A - 1 / spec.A) * 2.0**nu / 64
    if band < need_band or grid.spacing > max_dxi:
        raise ValueError(
            f"grid {grid} cannot hold f_nu for nu = {nu}: need band >= {need_band:.6g} "
            f"(mode_bound >= {math.ceil(need_band / grid.spacing)}) and spacing <= {max_dxi:.6g} "
            f"(period >= {2 * math.pi / max_dxi:.6g})"
        )


def make_f_nu(nu: int, spec: BumpSpec, grid: FrequencyGrid) -> SpectralFunction:
    """``fhat_nu(xi) = phi(2^-nu xi)`` sampled on a 1-D grid."""
    if grid.dim != 1:
        raise ValueError("make_f_nu builds 1-D functions; use make_f_nu_2d for the tensor form")
    _check_resolution(nu, spec, grid)
    phi = bump_phi(spec)
    scale = 2.0**-nu
    return sample_symbol(grid, lambda xi: phi(scale * xi))


def make_f_nu_2d(nu: int, spec: BumpSpec, grid: FrequencyGrid, psi=None) -> SpectralFunction:
    """``fhat_nu(xi) = phi(2^-nu xi_1) psi(xi_2)`` on a 2-D grid (small ``nu`` only)."""
    if grid.dim != 2:
        raise ValueError("make_f_nu_2d needs a 2-D grid")
    _check_resolution(nu, spec, grid)
    phi = bump_phi(spec)
    psi = psi or psi_bump()
    scale = 2.0**-nu
    return sample_symbol(grid, lambda xi: phi(scale * xi[:, 0]) * psi(xi[:, 1]))


# --------------------------------------------------------------- time selection


@dataclass(frozen=True)
class OptimalTime:
    """Time used at one sample point.

    ``t`` is either the sequence term nearest ``tau`` (``k`` set, ``exact``)
    or ``tau`` itself with ``substitution_error_bound >= |t_k - tau|`` for the
    nearest term.  ``underflow`` marks a positive bound that flushed to 0.
    """

    t: float
    tau: float
    substitution_error_bound: float
    k: int | None
    exact: bool
    underflow: bool = False


def _t(k: int) -> float:
    return 1.0 / math.log(k)


def optimal_time(x: float, nu: int, params: ExponentParams, C: float = DEFAULT_C) -> OptimalTime:
    """Term of ``t_k = 1/log k`` (``k >= 3``) next to ``tau = 2^nu x / 2^(nu a)``."""
    params.require(a_gt_1=True)
    if C < 4:
        raise ValueError(f"C must be at least 4, got {C}")
    lo = C * 2.0**-nu
    if not lo <= x <= 1:
        raise ValueError(f"x = {x} outside [C 2^-nu, 1] = [{lo}, 1]")
    tau = 2.0 ** (nu * (1 - params.a)) * x
    inv = 1.0 / tau
    if inv <= math.log(ENUMERABLE_K):
        # bracket t_{k+1} < tau <= t_k, then keep the nearer endpoint
        k = max(3, math.floor(math.exp(inv)))
        while k > 3 and _t(k) < tau:
            k -= 1
        while _t(k + 1) >= tau:
            k += 1
        cands = [(abs(_t(k) - tau), k), (abs(_t(k + 1) - tau), k + 1)]
        err, kk = min(cands)
        return OptimalTime(_t(kk), tau, err, kk, True)
    # gap t_k - t_{k+1} <= 1/(k log^2 k) with k ~ e^(1/tau)
    bound = math.exp(2 * math.log(tau) - inv)
    return OptimalTime(tau, tau, bound, None, False, bound == 0.0)


# ------------------------------------------------------------ growth experiment


@dataclass(frozen=True)
class GrowthRow:
    nu: int
    norm_f: float
    lower_bound_maximal: float
    ratio: float
    substitution_error: float
    n_modes: int
    n_x: int
    fit_residual: float = math.nan


@dataclass(frozen=True, eq=False)
class GrowthTable:
    """``r_nu = (lower bound of ||S* f_nu||_2) / ||f_nu||_2`` by ``nu``.

    ``exponent`` is the least-squares slope of ``log r_nu`` against
    ``log nu``.  ``sq_slope`` and ``sq_offset`` fit ``r_nu^2 = sq_slope *
    (nu - sq_offset)``, the form the lower bound takes for large ``nu``.
    """

    rows: list[GrowthRow]
    exponent: float
    intercept: float
    sq_slope: float
    sq_offset: float
    metadata: dict = field(default_factory=dict)

    @property
    def nus(self) -> np.ndarray:
        return np.array([r.nu for r in self.rows])

    @property
    def ratios(self) -> np.ndarray:
        return np.array([r.ratio for r in self.rows])

    @property
    def strictly_increasing(self) -> bool:
        return bool(np.all(np.diff(self.ratios) > 0))


def _x_mesh(nu: int, C: float, n_x: int) -> np.ndarray:
    xs = np.geomspace(C * 2.0**-nu, 1.0, n_x)
    xs[0], xs[-1] = C * 2.0**-nu, 1.0
    return xs


def _log_trapezoid(x: np.ndarray, g: np.ndarray) -> float:
    # int g dx = int g(x) x d(log x)
    return float(np.trapezoid(g * x, np.log(x)))


def _transverse_sq(times: np.ndarray, period: float, psi) -> tuple[np.ndarray, float]:
    """``int |J(t, x')|^2 dx'`` over one cell for each t, and ``int |psi|^2 dxi'``."""
    M = math.ceil(1.5 * period / (2 * math.pi)) + 1
    g = FrequencyGrid(1, period, M)
    p = sample_symbol(g, psi)
    res = 2 * g.side
    cell = period / res
    params2 = ExponentParams(2.0, 0.0, 1)
    out = np.array(
        [math.fsum(np.abs(evaluate_lattice(p, float(t), params2, res)) ** 2) * cell for t in times]
    )
    psi_sq = math.fsum(np.abs(p.coeffs) ** 2) * g.spacing
    return out, psi_sq


def _one_nu(nu, params, spec, n, C, n_x, period, psi):
    grid = f_nu_grid(nu, spec, period)
    f = make_f_nu(nu, spec, grid)
    xs = _x_mesh(nu, C, n_x)
    choice = [optimal_time(float(x), nu, params, C) for x in xs]
    ts = np.array([c.t for c in choice])
    vals = np.abs(evaluate_along(f, ts, xs, params))
    subst = max(
        lipschitz_time_bound(f, c.t, c.t + c.substitution_error_bound, params) / v if v > 0 else 0.0
        for c, v in zip(choice, vals)
    )
    integrand = vals**2
    norm_sq = spatial_l2_norm(f) ** 2
    if n == 2:
        jsq, psi_sq = _transverse_sq(ts, period, psi)
        integrand = integrand * jsq
        # the 2-D norm factors: ||f||^2 = ||f_1||^2 * (2 pi)^-1 int |psi|^2
        norm_sq = norm_sq * psi_sq / (2 * math.pi)
    lb = math.sqrt(_log_trapezoid(xs, integrand))
    norm = math.sqrt(norm_sq)
    return GrowthRow(nu, norm, lb, lb / norm, float(subst), grid.n_modes, n_x)


def growth_experiment(
    nu_range,
    params: ExponentParams,
    spec: BumpSpec | None = None,
    n: int = 1,
    C: float = DEFAULT_C,
    n_x: int = 256,
    period: float = DEFAULT_PERIOD,
    psi=None,
    sensitivity_C: tuple[float, ...] = (),
) -> GrowthTable:
    """Certified lower bounds for ``||S* f_nu||_2 / ||f_nu||_2`` over ``nu_range``.

    For ``n = 2`` (``a = 2`` only) the test function is ``phi(2^-nu xi_1)
    psi(xi_2)``; the propagator factorises and the ``x_2`` integral of the
    transverse factor is done on its own lattice.
    """
    params.require(a_gt_1=True)
    if n not in (1, 2):
        raise ValueError(f"n must be 1 or 2, got {n}")
    if n == 2 and params.a != 2:
        raise ValueError("the tensor construction needs a = 2")
    if n_x < 256:
        raise ValueError(f"n_x must be at least 256, got {n_x}")
    spec = spec or BumpSpec(params.a)
    if spec.a != params.a:
        raise ValueError("bump and params disagree on a")
    psi = psi or psi_bump()
    nus = sorted(int(v) for v in nu_range)
    if len(nus) < 2 or len(set(nus)) != len(nus):
        raise ValueError("nu_range needs at least two distinct values")
    for nu in nus:
        f_nu_grid(nu, spec, period)  # budget check before any allocation
    p1 = ExponentParams(params.a, params.s, 1)
    rows = ordered_map(lambda nu: _one_nu(nu, p1, spec, n, C, n_x, period, psi), nus)
    table = _fit(rows)
    meta = {
        "a": params.a,
        "n": n,
        "C": C,
        "n_x": n_x,
        "period": period,
        "bump": {"A": spec.A, "plateau": spec.plateau, "rho": spec.rho},
        "x_mesh": "log",
    }
    if sensitivity_C:
        sens = {}
        for c in sensitivity_C:
            alt = _fit(ordered_map(lambda nu: _one_nu(nu, p1, spec, n, c, n_x, period, psi), nus))
            sens[str(c)] = {"exponent": alt.exponent, "ratios": alt.ratios.tolist()}
        meta["C_sensitivity"] = sens
    return GrowthTable(table.rows, table.exponent, table.intercept, table.sq_slope, table.sq_offset, meta)


def _fit(rows: list[GrowthRow]) -> GrowthTable:
    nu = np.array([r.nu for r in rows], dtype=float)
    rr = np.array([r.ratio for r in rows])
    slope, icpt = np.polyfit(np.log(nu), np.log(rr), 1)
    resid = np.log(rr) - (slope * np.log(nu) + icpt)
    sq_slope, sq_icpt = np.polyfit(nu, rr**2, 1)
    rows = [
        GrowthRow(r.nu, r.norm_f, r.lower_bound_maximal, r.ratio, r.substitution_error, r.n_modes, r.n_x, float(e))
        for r, e in zip(rows, resid)
    ]
    return GrowthTable(rows, float(slope), float(icpt), float(sq_slope), float(-sq_icpt / sq_slope))


# --------------------------------------------------------------- stationary phase


def _phase_derivative(xi, a):
    xi = np.asarray(xi, dtype=float)
    return a * np.sign(xi) * np.abs(xi) ** (a - 1) + 1.0


def critical_point(spec: BumpSpec) -> float:
    """The zero of ``K'(xi) = d/dxi (|xi|^a + xi)`` inside the support, by root bracketing.

    Raises if ``K'`` does not change sign exactly once on a fine sample of the support.
    """
    a = spec.a
    xs = np.concatenate([np.linspace(-spec.A, -1 / spec.A, 20001), np.linspace(1 / spec.A, spec.A, 20001)])
    d = _phase_derivative(xs, a)
    neg = xs < 0
    changes = int(np.sum(np.diff(np.sign(d[neg])) != 0)) + int(np.sum(np.diff(np.sign(d[~neg])) != 0))
    if changes != 1:
        raise ValueError(f"expected one critical point in the support, found {changes}")
    return float(brentq(lambda v: _phase_derivative(v, a), -spec.A, -1 / spec.A, xtol=1e-15, rtol=1e-15))


def stationary_phase_integral(lam: float, spec: BumpSpec, points_per_cycle: int = 32) -> tuple[complex, int]:
    """``int exp(i lam (|xi|^a + xi)) phi(xi) dxi`` by the trapezoid rule.

    ``phi`` is smooth with compact support, so the rule is spectrally accurate
    once the phase is resolved; the sample count gives ``points_per_cycle``
    points per ``2 pi`` of phase at the steepest point of the support.
    """
    a, A = spec.a, spec.A
    max_slope = lam * (a * A ** (a - 1) + 1)
    n = int(max(4096, math.ceil(points_per_cycle * max_slope * 2 * A / (2 * math.pi)))) + 1
    if n > QUAD_BUDGET:
        raise ValueError(f"quadrature needs {n} points, above the budget {QUAD_BUDGET}")
    phi = bump_phi(spec)
    total = 0j
    step = 2 * A / (n - 1)
    chunk = 1 << 21
    for lo in range(0, n, chunk):
        xi = -A + step * np.arange(lo, min(n, lo + chunk))
        total += np.sum(np.exp(1j * lam * (np.abs(xi) ** a + xi)) * phi(xi))
    return total * step, n


@dataclass(frozen=True)
class StationaryPhaseResult:
    integral_abs: float
    predicted_floor: float
    floor_constant: float
    n_points: int

    @property
    def above_floor(self) -> bool:
        return self.integral_abs >= self.predicted_floor


@lru_cache(maxsize=32)
def calibrate_floor(spec: BumpSpec, nus: tuple[int, ...] = (4, 5, 6), C: float = DEFAULT_C, n_x: int = 64) -> float:
    """Floor constant ``c = min |I| 2^(nu/2) x^(1/2)`` over a calibration sweep.

    Sweeps ``nu`` in ``nus`` and ``x`` on the log mesh of ``[C 2^-nu, 1]``.
    """
    best = math.inf
    for nu in nus:
        for x in _x_mesh(nu, C, n_x):
            val, _ = stationary_phase_integral(2.0**nu * x, spec)
            best = min(best, abs(val) * 2.0 ** (nu / 2) * math.sqrt(x))
    return best


def stationary_phase_check(
    nu: int, x: float, spec: BumpSpec, params: ExponentParams, C: float = DEFAULT_C, floor_constant: float | None = None
) -> StationaryPhaseResult:
    """``|int exp(iG) phi|`` with ``G = 2^nu x (|xi|^a + xi)`` against ``c 2^(-nu/2) x^(-1/2)``."""
    params.require(a_gt_1=True)
    if spec.a != params.a:
        raise ValueError("bump and params disagree on a")
    if not C * 2.0**-nu <= x <= 1:
        raise ValueError(f"x = {x} outside [C 2^-nu, 1]")
    c = calibrate_floor(spec, C=C) if floor_constant is None else floor_constant
    val, n = stationary_phase_integral(2.0**nu * x, spec)
    return StationaryPhaseResult(float(abs(val)), c * 2.0 ** (-nu / 2) / math.sqrt(x), c, n)
