"""Band-limited functions on a periodic lattice and the fractional Schrodinger group.

A function is stored by the values of its Fourier transform at the lattice
frequencies ``xi_m = (2*pi/L) * m`` with ``|m_i| <= M``.  Every integral over
frequency space becomes the Riemann sum with weight ``dxi**n``, so

    S_t f(x) = (2 pi)^-n  sum_m  exp(i xi_m.x) exp(i t |xi_m|^a) fhat(xi_m) dxi^n

is a trigonometric polynomial of period ``L`` and Plancherel holds exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

__all__ = [
    "FrequencyGrid",
    "SpectralFunction",
    "ExponentParams",
    "sample_symbol",
    "propagate",
    "evaluate",
    "evaluate_along",
    "evaluate_lattice",
    "spatial_lattice",
    "lattice_coefficients",
    "h_s_norm",
    "spatial_l2_norm",
    "bessel_apply",
    "delta_multiplier",
    "delta_multiplier_sup",
    "lipschitz_time_bound",
    "dyadic_decompose",
    "random_spectral_function",
]

# complex exponentials per chunk in the direct sums
_CHUNK = 1 << 22


@dataclass(frozen=True)
class FrequencyGrid:
    """Lattice of frequencies ``(2 pi / period) * m`` with ``|m_i| <= mode_bound``.

    Modes are enumerated lexicographically in ``m`` (first axis slowest), which
    is the C-order flattening of a ``(2M+1,) * dim`` array.
    """

    dim: int
    period: float
    mode_bound: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if not (math.isfinite(self.period) and self.period > 0):
            raise ValueError(f"period must be positive and finite, got {self.period}")
        if int(self.mode_bound) != self.mode_bound or self.mode_bound < 0:
            raise ValueError(f"mode_bound must be a nonnegative integer, got {self.mode_bound}")
        object.__setattr__(self, "period", float(self.period))
        object.__setattr__(self, "mode_bound", int(self.mode_bound))

    @property
    def spacing(self) -> float:
        return 2.0 * math.pi / self.period

    @property
    def side(self) -> int:
        return 2 * self.mode_bound + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.side,) * self.dim

    @property
    def n_modes(self) -> int:
        return self.side**self.dim

    @property
    def cell_volume(self) -> float:
        """``dxi**dim``, the quadrature weight of one mode."""
        return self.spacing**self.dim

    @cached_property
    def indices(self) -> np.ndarray:
        """Integer mode vectors, shape ``(n_modes, dim)``, lexicographic."""
        m = np.arange(-self.mode_bound, self.mode_bound + 1)
        if self.dim == 1:
            return m[:, None]
        m1, m2 = np.meshgrid(m, m, indexing="ij")
        return np.stack([m1.ravel(), m2.ravel()], axis=1)

    @cached_property
    def frequencies(self) -> np.ndarray:
        """Lattice frequencies, shape ``(n_modes, dim)``."""
        xi = self.spacing * self.indices
        xi.setflags(write=False)
        return xi

    @cached_property
    def abs_frequencies(self) -> np.ndarray:
        """``|xi_m|`` for every mode, shape ``(n_modes,)``."""
        r = np.sqrt(np.sum(self.frequencies**2, axis=1))
        r.setflags(write=False)
        return r

    def symbol_argument(self) -> np.ndarray:
        """Frequencies in the form handed to symbols: ``(n,)`` in 1-D, ``(n, 2)`` in 2-D."""
        return self.frequencies[:, 0] if self.dim == 1 else self.frequencies


@dataclass(frozen=True)
class ExponentParams:
    """Dispersion exponent ``a``, regularity ``s`` and dimension ``n``."""

    a: float
    s: float
    n: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a > 0):
            raise ValueError(f"a must be positive, got {self.a}")
        # s = 0 is admitted so that plain L2 ratios can be formed
        if not (math.isfinite(self.s) and self.s >= 0):
            raise ValueError(f"s must be nonnegative, got {self.s}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    def require(self, *, a_gt_1: bool = False, s_lt_a: bool = False, s_pos: bool = False):
        if a_gt_1 and not self.a > 1:
            raise ValueError(f"this operation requires a > 1, got a = {self.a}")
        if s_lt_a and not self.s < self.a:
            raise ValueError(f"this operation requires s < a, got s = {self.s}, a = {self.a}")
        if s_pos and not self.s > 0:
            raise ValueError(f"this operation requires s > 0, got s = {self.s}")
        return self


@dataclass(frozen=True, eq=False)
class SpectralFunction:
    """Fourier data ``fhat(xi_m)`` of a band-limited function on ``grid``."""

    grid: FrequencyGrid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128).reshape(-1)
        if c.shape[0] != self.grid.n_modes:
            raise ValueError(
                f"expected {self.grid.n_modes} coefficients for {self.grid}, got {c.shape[0]}"
            )
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def _check(self, other: "SpectralFunction") -> None:
        if not isinstance(other, SpectralFunction):
            raise TypeError(f"expected SpectralFunction, got {type(other).__name__}")
        if other.grid != self.grid:
            raise ValueError("spectral functions live on different grids")

    def __add__(self, other):
        self._check(other)
        return SpectralFunction(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return SpectralFunction(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, c):
        return SpectralFunction(self.grid, self.coeffs * complex(c))

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralFunction(self.grid, -self.coeffs)

    def with_coeffs(self, coeffs) -> "SpectralFunction":
        return SpectralFunction(self.grid, coeffs)

    @property
    def support(self) -> np.ndarray:
        """Indices of the modes with a nonzero coefficient."""
        return np.flatnonzero(self.coeffs)

    @property
    def support_radius(self) -> float:
        """Largest ``|xi|`` carrying a nonzero coefficient (0 for the zero function)."""
        idx = self.support
        return float(self.grid.abs_frequencies[idx].max()) if idx.size else 0.0


def _check_dim(f: SpectralFunction, params: ExponentParams) -> None:
    if params.n != f.grid.dim:
        raise ValueError(f"params.n = {params.n} does not match grid dim {f.grid.dim}")


def _phase(grid: FrequencyGrid, a: float) -> np.ndarray:
    return grid.abs_frequencies**a


def sample_symbol(grid: FrequencyGrid, symbol: Callable[[np.ndarray], np.ndarray]) -> SpectralFunction:
    """Evaluate a frequency symbol at every lattice frequency.

    ``symbol`` is called once with all frequencies: an array of shape
    ``(n_modes,)`` in 1-D or ``(n_modes, 2)`` in 2-D.
    """
    xi = grid.symbol_argument()
    values = np.asarray(symbol(xi), dtype=np.complex128)
    values = np.broadcast_to(values, (grid.n_modes,)).copy()
    bad = ~np.isfinite(values)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise ValueError(
            f"symbol is not finite at xi = {grid.frequencies[i].tolist()} (value {values[i]})"
        )
    return SpectralFunction(grid, values)


def propagate(f: SpectralFunction, t: float, params: ExponentParams) -> SpectralFunction:
    """``(S_t f)^(xi) = exp(i t |xi|^a) fhat(xi)``."""
    if not math.isfinite(t):
        raise ValueError(f"time must be finite, got {t}")
    _check_dim(f, params)
    if t == 0:
        return f
    return f.with_coeffs(np.exp(1j * t * _phase(f.grid, params.a)) * f.coeffs)


def _weight(grid: FrequencyGrid) -> float:
    return (grid.spacing / (2.0 * math.pi)) ** grid.dim


def evaluate(f: SpectralFunction, t: float, params: ExponentParams, points) -> np.ndarray:
    """``S_t f(x)`` at arbitrary points by direct summation over the support.

    ``points`` has shape ``(k,)`` in 1-D or ``(k, 2)`` in 2-D.
    """
    _check_dim(f, params)
    x = np.asarray(points, dtype=float)
    if x.size == 0:
        return np.zeros(0, dtype=np.complex128)
    x = x.reshape(-1, f.grid.dim)
    idx = f.support
    if idx.size == 0:
        return np.zeros(x.shape[0], dtype=np.complex128)
    xi = f.grid.frequencies[idx]
    c = f.coeffs[idx] * np.exp(1j * t * _phase(f.grid, params.a)[idx])
    out = np.empty(x.shape[0], dtype=np.complex128)
    step = max(1, _CHUNK // idx.size)
    for lo in range(0, x.shape[0], step):
        ph = x[lo : lo + step] @ xi.T
        out[lo : lo + step] = np.exp(1j * ph) @ c
    return _weight(f.grid) * out


def evaluate_along(f: SpectralFunction, times, points, params: ExponentParams) -> np.ndarray:
    """``S_{t_i} f(x_i)`` for paired times and points (each point has its own time)."""
    _check_dim(f, params)
    t = np.asarray(times, dtype=float).reshape(-1)
    x = np.asarray(points, dtype=float).reshape(-1, f.grid.dim)
    if t.shape[0] != x.shape[0]:
        raise ValueError("times and points must pair up one to one")
    idx = f.support
    if idx.size == 0 or t.size == 0:
        return np.zeros(t.shape[0], dtype=np.complex128)
    xi = f.grid.frequencies[idx]
    w = _phase(f.grid, params.a)[idx]
    c = f.coeffs[idx]
    out = np.empty(t.shape[0], dtype=np.complex128)
    step = max(1, _CHUNK // idx.size)
    for lo in range(0, t.shape[0], step):
        ph = x[lo : lo + step] @ xi.T + np.outer(t[lo : lo + step], w)
        out[lo : lo + step] = np.exp(1j * ph) @ c
    return _weight(f.grid) * out


def spatial_lattice(grid: FrequencyGrid, resolution: int) -> np.ndarray:
    """Points ``j * L / N`` of the uniform lattice dual to ``grid``.

    Returns shape ``(N,)`` in 1-D and ``(N*N, 2)`` in 2-D (C order).
    """
    x = np.arange(resolution) * (grid.period / resolution)
    if grid.dim == 1:
        return x
    x1, x2 = np.meshgrid(x, x, indexing="ij")
    return np.stack([x1.ravel(), x2.ravel()], axis=1)


def _scatter(f: SpectralFunction, coeffs: np.ndarray, resolution: int) -> np.ndarray:
    grid = f.grid
    if resolution < grid.side:
        raise ValueError(f"lattice resolution {resolution} is below the mode count {grid.side}")
    buf = np.zeros((resolution,) * grid.dim, dtype=np.complex128)
    pos = tuple((grid.indices % resolution).T)
    buf[pos] = coeffs
    return buf


def evaluate_lattice(f: SpectralFunction, t: float, params: ExponentParams, resolution: int) -> np.ndarray:
    """``S_t f`` on the dual spatial lattice by FFT.

    Agrees with :func:`evaluate` at :func:`spatial_lattice` points; the result
    has shape ``(resolution,) * dim``.
    """
    _check_dim(f, params)
    g = propagate(f, t, params)
    buf = _scatter(g, g.coeffs, resolution)
    return _weight(f.grid) * resolution**f.grid.dim * np.fft.ifftn(buf)


def lattice_coefficients(values: np.ndarray, grid: FrequencyGrid) -> SpectralFunction:
    """Inverse of :func:`evaluate_lattice` at ``t = 0``."""
    v = np.asarray(values, dtype=np.complex128)
    resolution = v.shape[0]
    if v.shape != (resolution,) * grid.dim:
        raise ValueError(f"expected a {grid.dim}-D square lattice, got shape {v.shape}")
    if resolution < grid.side:
        raise ValueError(f"lattice resolution {resolution} is below the mode count {grid.side}")
    spec = np.fft.fftn(v) / (_weight(grid) * resolution**grid.dim)
    pos = tuple((grid.indices % resolution).T)
    return SpectralFunction(grid, spec[pos])


def h_s_norm(f: SpectralFunction, s: float) -> float:
    """``(sum_m (1+|xi_m|^2)^s |fhat(xi_m)|^2 dxi^n)^(1/2)``, summed with ``math.fsum``."""
    w = (1.0 + f.grid.abs_frequencies**2) ** s
    terms = w * (f.coeffs.real**2 + f.coeffs.imag**2)
    return math.sqrt(math.fsum(terms) * f.grid.cell_volume)


def spatial_l2_norm(f: SpectralFunction) -> float:
    """L2 norm of ``f`` over one period cell; equals ``h_s_norm(f, 0) / (2 pi)^(n/2)``."""
    return h_s_norm(f, 0.0) / (2.0 * math.pi) ** (f.grid.dim / 2)


def bessel_apply(f: SpectralFunction, s: float) -> SpectralFunction:
    """Multiply by ``(1+|xi|^2)^(-s/2)``."""
    if s == 0:
        return f
    return f.with_coeffs(f.coeffs * (1.0 + f.grid.abs_frequencies**2) ** (-s / 2))


def delta_multiplier(xi_abs, delta: float, params: ExponentParams) -> np.ndarray:
    """``(exp(i delta |xi|^a) - 1) / (1+|xi|^2)^(s/2)`` as a function of ``|xi|``."""
    r = np.asarray(xi_abs, dtype=float)
    return np.expm1(1j * delta * r**params.a) / (1.0 + r**2) ** (params.s / 2)


def delta_multiplier_sup(grid: FrequencyGrid, delta: float, params: ExponentParams) -> float:
    """Largest ``|m(xi)|`` over the lattice; the L2 multiplier norm of ``m`` on it."""
    params.require(a_gt_1=True, s_lt_a=True, s_pos=True)
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    # |m| is radial: evaluate once per distinct radius
    r = np.unique(grid.abs_frequencies)
    return float(np.abs(delta_multiplier(r, delta, params)).max())


def lipschitz_time_bound(f: SpectralFunction, t: float, u: float, params: ExponentParams) -> float:
    """Uniform bound ``|t-u| (2 pi)^-n sum_m |xi_m|^a |fhat(xi_m)| dxi^n`` on ``|S_t f - S_u f|``."""
    _check_dim(f, params)
    if t == u:
        return 0.0
    terms = _phase(f.grid, params.a) * np.abs(f.coeffs)
    return abs(t - u) * math.fsum(terms) * _weight(f.grid)


def dyadic_decompose(f: SpectralFunction) -> list[SpectralFunction]:
    """Split ``f`` into pieces ``f_0, ..., f_K`` with disjoint frequency supports.

    ``f_0`` keeps ``|xi| <= 1`` and ``f_k`` keeps ``2^(k-1) < |xi| <= 2^k``;
    ``K = ceil(log2(max |xi|))`` over the lattice.
    """
    r = f.grid.abs_frequencies
    k = np.zeros(r.shape, dtype=np.int64)
    big = r > 1
    # frexp gives r = mant * 2^e with mant in [0.5, 1): exact dyadic bucketing
    mant, e = np.frexp(r[big])
    k[big] = np.where(mant == 0.5, e - 1, e)
    K = int(k.max())
    pieces = []
    for j in range(K + 1):
        pieces.append(f.with_coeffs(np.where(k == j, f.coeffs, 0)))
    return pieces


def random_spectral_function(
    grid: FrequencyGrid, rng: np.random.Generator, decay: float = 0.0
) -> SpectralFunction:
    """Complex Gaussian coefficients damped by ``(1+|xi|^2)^(-decay/2)``."""
    z = rng.standard_normal(grid.n_modes) + 1j * rng.standard_normal(grid.n_modes)
    return SpectralFunction(grid, z * (1.0 + grid.abs_frequencies**2) ** (-decay / 2))
