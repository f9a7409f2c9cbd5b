"""Time sets in [0, 1]: decreasing sequences, Cantor sets and intervals.

Covering numbers ``N_E(r)`` (fewest closed intervals of length ``r`` whose
union contains ``E``) are computed exactly by the left-to-right greedy sweep,
which is optimal on the line.  Set descriptors round-trip through JSON, see
``docs/descriptors.md``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

__all__ = [
    "TimeSet",
    "Interval",
    "CantorApprox",
    "DyadicProfile",
    "SufficiencyResult",
    "Exponents",
    "Lemma6Result",
    "seq_generate",
    "uniform_mesh",
    "cantor_build",
    "cantor_endpoints",
    "cantor_dimension",
    "cantor_valid_m_max",
    "dyadic_classes",
    "covering_number",
    "sufficiency_sum",
    "exponents",
    "lemma6_check",
    "from_descriptor",
    "to_descriptor",
    "loads",
    "dumps",
]

# Relative slack on r in the covering sweeps; absorbs round-off in endpoints
# computed by repeated scaling (e.g. Cantor intervals of length lambda^k at r = lambda^k).
COVER_RTOL = 1e-9

# Verdict classification for sufficiency sums.
CONVERGED_RATIO = 0.95
VERDICT_WINDOW = 8

# Allowed excess of a dyadic class over the fitted profile C' 2^(bj).
PROFILE_SLACK = 4.0


@dataclass(frozen=True, eq=False)
class TimeSet:
    """Finite, strictly increasing times in [0, 1] with a provenance descriptor."""

    times: np.ndarray
    descriptor: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.array(self.times, dtype=float).reshape(-1)
        if t.size == 0:
            raise ValueError("a time set must be nonempty")
        if not np.all(np.isfinite(t)):
            raise ValueError("times must be finite")
        if t[0] < 0 or t[-1] > 1:
            raise ValueError(f"times must lie in [0, 1], got range [{t[0]}, {t[-1]}]")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "descriptor", dict(self.descriptor))

    def __len__(self):
        return self.times.size

    @property
    def diameter(self) -> float:
        return float(self.times[-1] - self.times[0])

    @property
    def min_gap(self) -> float:
        return float(np.diff(self.times).min()) if self.times.size > 1 else math.inf


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[left, right]``."""

    left: float = 0.0
    right: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.left) and math.isfinite(self.right)) or self.right < self.left:
            raise ValueError(f"invalid interval [{self.left}, {self.right}]")

    @property
    def length(self) -> float:
        return self.right - self.left

    @property
    def descriptor(self) -> dict:
        return {"kind": "interval", "params": {"left": self.left, "right": self.right}}


@dataclass(frozen=True, eq=False)
class CantorApprox:
    """Level-``k`` stage of the middle-gap Cantor set: ``2^k`` closed intervals of length ``lambda^k``."""

    lam: float
    level: int
    intervals: np.ndarray = field(repr=False)

    @property
    def descriptor(self) -> dict:
        return {"kind": "cantor", "params": {"lambda": self.lam}, "level": self.level}

    @property
    def dimension(self) -> float:
        return cantor_dimension(self.lam)


TimeLike = Union[TimeSet, Interval, CantorApprox]


# ---------------------------------------------------------------- construction


def seq_generate(kind: str, count: int | None = None, **params) -> TimeSet:
    """First ``count`` terms of a decreasing sequence ``t_1 > t_2 > ...``.

    Kinds: ``power`` (``t_k = k^-p``), ``geometric`` (``t_k = r^k``),
    ``log_reciprocal`` (``t_k = 1/log k`` from ``k = 3``, the first index with
    ``t_k < 1``) and ``explicit`` (``times=[...]``, given in decreasing order).
    """
    if kind == "explicit":
        raw = np.asarray(params.pop("times"), dtype=float).reshape(-1)
        if count is not None:
            raw = raw[:count]
        if raw.size == 0:
            raise ValueError("explicit sequence is empty")
        bad = np.flatnonzero(np.diff(raw) >= 0)
        if bad.size:
            i = int(bad[0])
            raise ValueError(
                f"explicit sequence is not strictly decreasing at index {i + 1}: "
                f"{raw[i]} then {raw[i + 1]}"
            )
        if raw[-1] <= 0 or raw[0] > 1:
            raise ValueError("explicit sequence must lie in (0, 1]")
        seq = raw
        desc_params = {"times": raw.tolist()}
    else:
        if count is None or count < 1:
            raise ValueError(f"count must be a positive integer, got {count}")
        k = np.arange(1, count + 1, dtype=float)
        if kind == "power":
            p = float(params.pop("p"))
            if not p > 0:
                raise ValueError(f"power sequence requires p > 0, got {p}")
            seq = k**-p
            desc_params = {"p": p}
        elif kind == "geometric":
            r = float(params.pop("r"))
            if not 0 < r < 1:
                raise ValueError(f"geometric sequence requires 0 < r < 1, got {r}")
            seq = r**k
            desc_params = {"r": r}
        elif kind == "log_reciprocal":
            seq = 1.0 / np.log(k + 2.0)
            desc_params = {}
        else:
            raise ValueError(f"unknown sequence kind {kind!r}")
        if np.any(np.diff(seq) >= 0) or seq[-1] <= 0:
            raise ValueError(f"{kind} sequence with count {count} is not strictly decreasing in (0, 1]")
    if params:
        raise ValueError(f"unexpected parameters for {kind!r}: {sorted(params)}")
    desc = {"kind": kind, "params": desc_params}
    if kind != "explicit":
        desc["count"] = int(count)
    return TimeSet(seq[::-1].copy(), desc)


def uniform_mesh(left: float, right: float, count: int) -> TimeSet:
    """``count`` equally spaced times from ``left`` to ``right`` inclusive."""
    if count < 1:
        raise ValueError(f"count must be positive, got {count}")
    t = np.array([left]) if count == 1 else np.linspace(left, right, count)
    return TimeSet(t, {"kind": "mesh", "params": {"left": left, "right": right}, "count": count})


def cantor_build(lam: float, level: int) -> CantorApprox:
    """Level-``level`` intervals of ``C(lam)``.

    Children of ``[u, v]`` are ``[u, u + lam (v-u)]`` and ``[v - lam (v-u), v]``.
    """
    if not 0 < lam < 0.5:
        raise ValueError(f"lambda must lie in (0, 1/2), got {lam}")
    if int(level) != level or not 0 <= level <= 30:
        raise ValueError(f"level must be an integer in [0, 30], got {level}")
    u = np.array([0.0])
    v = np.array([1.0])
    for _ in range(int(level)):
        w = lam * (v - u)
        u, v = np.stack([u, v - w], axis=1).ravel(), np.stack([u + w, v], axis=1).ravel()
    iv = np.stack([u, v], axis=1)
    iv.setflags(write=False)
    return CantorApprox(float(lam), int(level), iv)


def cantor_endpoints(c: CantorApprox) -> TimeSet:
    """Finite set of all interval endpoints of a Cantor stage."""
    t = np.unique(c.intervals.ravel())
    return TimeSet(t, {"kind": "cantor_endpoints", "params": {"lambda": c.lam}, "level": c.level})


def cantor_dimension(lam: float) -> float:
    """``log 2 / log(1/lam)``."""
    if not 0 < lam < 0.5:
        raise ValueError(f"lambda must lie in (0, 1/2), got {lam}")
    return math.log(2.0) / math.log(1.0 / lam)


def cantor_valid_m_max(c: CantorApprox) -> int:
    """Largest ``m`` with ``2^-m >= lam^level``: where the stage's covering numbers are those of ``C(lam)``."""
    return int(math.floor(c.level * math.log2(1.0 / c.lam) * (1 + 1e-12)))


# ------------------------------------------------------------- covering numbers


def _cover_points(t: np.ndarray, r: float) -> int:
    reach = r * (1 + COVER_RTOL)
    n = 0
    i = 0
    while i < t.size:
        n += 1
        i = int(np.searchsorted(t, t[i] + reach, side="right"))
    return n


def _cover_intervals(iv: np.ndarray, r: float) -> int:
    end = -math.inf
    n = 0
    for u, v in iv:
        if v <= end:
            continue
        if u > end:
            need = max(1, math.ceil((v - u) / r - COVER_RTOL))
            p = u
        else:
            need = max(0, math.ceil((v - end) / r - COVER_RTOL))
            p = end
        n += need
        end = p + need * r
    return n


def covering_number(E: TimeLike, r: float) -> int:
    """``N_E(r)``: fewest closed intervals of length ``r`` covering ``E``."""
    if not r > 0:
        raise ValueError(f"r must be positive, got {r}")
    if isinstance(E, TimeSet):
        return _cover_points(E.times, r)
    if isinstance(E, Interval):
        return max(1, math.ceil(E.length / r - COVER_RTOL))
    if isinstance(E, CantorApprox):
        return _cover_intervals(E.intervals, r)
    raise TypeError(f"cannot cover {type(E).__name__}")


# ---------------------------------------------------------------- dyadic classes


@dataclass(frozen=True, eq=False)
class DyadicProfile:
    """Class counts ``#A_j = #{t : 2^-(j+1) < t <= 2^-j}``.

    ``counts[0]`` is the overflow bin for ``t in (1/2, 1]``; ``counts[j]`` for
    ``j >= 1`` is ``#A_j``; ``below`` counts times ``<= 2^-(j_max+1)``, so
    ``counts.sum() + below == len(ts)``.  ``complete[j]`` marks classes the
    (truncated) sequence has passed through entirely.
    """

    counts: np.ndarray
    below: int
    complete: np.ndarray
    b_fit: float


def dyadic_classes(ts: TimeSet, j_max: int) -> DyadicProfile:
    if j_max < 1:
        raise ValueError(f"j_max must be at least 1, got {j_max}")
    t = ts.times
    j = np.arange(0, j_max + 1)
    upper = np.where(j == 0, 1.0, 2.0 ** -j.astype(float))
    lower = 2.0 ** -(j + 1.0)
    hi = np.searchsorted(t, upper, side="right")
    hi[0] = t.size
    counts = hi - np.searchsorted(t, lower, side="right")
    below = int(np.searchsorted(t, 2.0 ** -(j_max + 1.0), side="right"))
    complete = lower >= t[0]

    fit = (j >= 1) & (counts > 0) & complete
    if fit.sum() < 2:
        fit = (j >= 1) & (counts > 0)
    b_fit = float(np.polyfit(j[fit], np.log2(counts[fit]), 1)[0]) if fit.sum() >= 2 else math.nan
    counts.setflags(write=False)
    return DyadicProfile(counts, below, complete, b_fit)


# -------------------------------------------------------------- sufficiency sums


@dataclass(frozen=True, eq=False)
class SufficiencyResult:
    """Partial sums of ``sum_m N_E(2^-m) 2^(-2ms/a)`` and a convergence verdict.

    ``total`` adds the tail beyond ``m_max``: exact for finite sets (after
    saturation the terms are geometric), the geometric extrapolation
    ``last * rho / (1 - rho)`` for converged infinite sets, ``inf`` otherwise.
    """

    terms: np.ndarray
    partial_sums: np.ndarray
    covering: np.ndarray
    verdict: str
    decay_ratio: float
    tail: float
    total: float
    saturation_index: int | None = None


def _finite_tail(E: TimeSet, m_max: int, rho: float) -> tuple[float, int]:
    n = len(E)
    gap = E.min_gap
    # N_E(2^-m) = #E exactly once 2^-m < min gap
    m_sat = 0
    if n > 1:
        while 2.0**-m_sat * (1 + COVER_RTOL) >= gap:
            m_sat += 1
    if rho >= 1:
        return math.inf, m_sat
    extra = [covering_number(E, 2.0**-m) * rho**m for m in range(m_max + 1, m_sat)]
    start = max(m_sat, m_max + 1)
    return math.fsum(extra) + n * rho**start / (1 - rho), m_sat


def sufficiency_sum(E: TimeLike, s: float, a: float, m_max: int) -> SufficiencyResult:
    """Terms ``N_E(2^-m) 2^(-2ms/a)`` for ``m = 0..m_max`` and their classification.

    Infinite sets: "converged" when the geometric-mean term ratio over the last
    ``VERDICT_WINDOW`` terms is below ``CONVERGED_RATIO``, "diverging" when the
    terms do not decrease over that window, "inconclusive" otherwise.  Finite
    time sets always converge for ``s > 0`` and report their saturation index.
    """
    if m_max < VERDICT_WINDOW:
        raise ValueError(f"m_max must be at least {VERDICT_WINDOW}, got {m_max}")
    if not a > 0 or s < 0:
        raise ValueError(f"need a > 0 and s >= 0, got a = {a}, s = {s}")
    if isinstance(E, CantorApprox):
        valid = cantor_valid_m_max(E)
        if m_max > valid:
            raise ValueError(
                f"level-{E.level} Cantor stage matches C({E.lam}) only for m <= {valid}; got m_max = {m_max}"
            )
    m = np.arange(m_max + 1)
    rho = 2.0 ** (-2.0 * s / a)
    cover = np.array([covering_number(E, 2.0 ** -int(k)) for k in m], dtype=np.int64)
    terms = cover * rho ** m.astype(float)
    partial = np.cumsum(terms)

    window = terms[-VERDICT_WINDOW:]
    ratio = float((window[-1] / window[0]) ** (1.0 / (VERDICT_WINDOW - 1)))
    sat = None
    if isinstance(E, TimeSet):
        tail, sat = _finite_tail(E, m_max, rho)
        verdict = "converged" if math.isfinite(tail) else "diverging"
    else:
        if ratio < CONVERGED_RATIO:
            verdict = "converged"
            tail = float(window[-1] * ratio / (1 - ratio))
        elif ratio >= 1.0:
            verdict = "diverging"
            tail = math.inf
        else:
            verdict = "inconclusive"
            tail = math.inf
    total = float(partial[-1] + tail)
    return SufficiencyResult(terms, partial, cover, verdict, ratio, tail, total, sat)


# ------------------------------------------------------------------- exponents


@dataclass(frozen=True)
class Exponents:
    """Derived exponents; a field is ``None`` when its hypotheses fail, and the
    failed hypotheses are listed in ``flags``."""

    gamma: float | None
    theorem_a_exponent: float
    p0: float
    interval_I: tuple[float, float, bool]
    cantor_threshold: float
    b_max: float | None
    cor7_gamma_bound: float | None
    flags: tuple[str, ...] = ()

    @property
    def every_cantor_admissible(self) -> bool:
        """Whether every ``lambda in (0, 1/2)`` satisfies ``kappa < 2s/a``."""
        return self.cantor_threshold >= 1


def exponents(params) -> Exponents:
    """``gamma = 2s/(a-s)``, ``p0 = 2/(1 + 2s/(na))``, the interval ``I``,
    ``kappa`` threshold ``2s/a``, ``b_max = 2s/(a-s)`` and the bound
    ``gamma < 2s/(a-2s)`` equivalent to ``1/gamma > (a-2s)/2s``.

    ``interval_I`` is ``(lo, hi, lo_included)``.
    """
    a, s, n = params.a, params.s, params.n
    flags = []
    if not s > 0:
        raise ValueError("exponents need s > 0")
    gamma = 2 * s / (a - s) if s < a else None
    if gamma is None:
        flags.append("s<a")
    b_max = gamma
    if not (a > 1 and s <= 0.5):
        flags.append("sequence theorems need a>1 and s<=1/2")
    p0 = 2.0 / (1.0 + 2.0 * s / (n * a))
    interval = (1.0, 2.0, False) if (n == 1 and s >= a / 2) else (p0, 2.0, True)
    if a >= 2 * s and s <= 0.5:
        cor7 = math.inf if a == 2 * s else 2 * s / (a - 2 * s)
    else:
        cor7 = None
        flags.append("gamma bound needs a>=2s and s<=1/2")
    return Exponents(gamma, 2 * s / a, p0, interval, 2 * s / a, b_max, cor7, tuple(flags))


# ------------------------------------------------------------ class profiles


@dataclass(frozen=True, eq=False)
class Lemma6Result:
    """Ratios ``N_E(2^-m) / 2^(bm/(b+1))`` and their running maximum.

    ``stable`` is true when the maximum over the second half of the range
    exceeds the maximum over the first half by at most ``growth_tol``.
    """

    ratios: np.ndarray
    empirical_C: float
    profile_C: float
    stable: bool
    growth: float


def lemma6_check(ts: TimeSet, b: float, m_max: int, growth_tol: float = 0.25) -> Lemma6Result:
    """Empirical constant in ``N_E(2^-m) <= C 2^(bm/(b+1))``.

    The class profile is checked first: with ``C'`` fitted to
    ``log2 #A_j = b j + log2 C'`` over the complete nonempty classes, every
    class must satisfy ``#A_j <= PROFILE_SLACK * C' 2^(bj)``; otherwise a
    ``ValueError`` names the first violating ``j``.
    """
    if b < 0:
        raise ValueError(f"b must be nonnegative, got {b}")
    if m_max < 2:
        raise ValueError(f"m_max must be at least 2, got {m_max}")
    t_pos = ts.times[ts.times > 0]
    j_max = max(1, math.ceil(-math.log2(t_pos[0]))) if t_pos.size else 1
    prof = dyadic_classes(ts, j_max)
    j = np.arange(prof.counts.size)
    use = (j >= 1) & (prof.counts > 0) & prof.complete
    if not use.any():
        use = (j >= 1) & (prof.counts > 0)
    if use.any():
        logc = float(np.mean(np.log2(prof.counts[use]) - b * j[use]))
        profile_C = 2.0**logc
        over = np.flatnonzero(use & (prof.counts > PROFILE_SLACK * profile_C * 2.0 ** (b * j)))
        if over.size:
            jj = int(over[0])
            raise ValueError(
                f"#A_{jj} = {prof.counts[jj]} exceeds {PROFILE_SLACK} * {profile_C:.4g} * 2^({b} * {jj})"
            )
    else:
        profile_C = 0.0

    m = np.arange(m_max + 1)
    cover = np.array([covering_number(ts, 2.0 ** -int(k)) for k in m], dtype=float)
    ratios = cover / 2.0 ** (b * m / (b + 1.0))
    half = m_max // 2
    first = float(ratios[: half + 1].max())
    last = float(ratios[half + 1 :].max())
    growth = last / first - 1.0
    return Lemma6Result(ratios, float(ratios.max()), profile_C, growth <= growth_tol, growth)


# ------------------------------------------------------------------ descriptors


def from_descriptor(d: dict) -> TimeLike:
    """Build a time set from ``{"kind", "params", "count" | "level"}``."""
    d = dict(d)
    kind = d.pop("kind")
    params = dict(d.pop("params", {}))
    count = d.pop("count", None)
    level = d.pop("level", None)
    if d:
        raise ValueError(f"unknown descriptor keys: {sorted(d)}")
    if kind in ("power", "geometric", "log_reciprocal", "explicit"):
        return seq_generate(kind, count, **params)
    if kind == "mesh":
        return uniform_mesh(float(params["left"]), float(params["right"]), int(count))
    if kind == "interval":
        return Interval(float(params.get("left", 0.0)), float(params.get("right", 1.0)))
    if kind == "cantor":
        return cantor_build(float(params["lambda"]), int(level))
    if kind == "cantor_endpoints":
        return cantor_endpoints(cantor_build(float(params["lambda"]), int(level)))
    raise ValueError(f"unknown time-set kind {kind!r}")


def to_descriptor(E: TimeLike) -> dict:
    return dict(E.descriptor)


def dumps(E: TimeLike) -> str:
    return json.dumps(to_descriptor(E), sort_keys=True)


def loads(text: str) -> TimeLike:
    return from_descriptor(json.loads(text))
