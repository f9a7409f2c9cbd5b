"""Batch driver: ``schro-maxlab run <config.json> [--out DIR] [--threads N]`` and ``schro-maxlab list``.

A run reads one JSON config, validates every descriptor, runs the named
experiment and writes ``<experiment>.csv`` plus ``<experiment>_summary.json``.
Exit status: 0 when every registered check passes, 2 when a check fails,
1 on a usage or config error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import scipy

from . import __version__
from .counterexample import BumpSpec, growth_experiment
from .maximal import SpectralSampler, interval_sup_check, maximal_field, theorem3_sums
from .parallel import set_max_workers
from .reporting import write_csv, write_json
from .spectral import (
    ExponentParams,
    FrequencyGrid,
    delta_multiplier_sup,
    h_s_norm,
    propagate,
    random_spectral_function,
)
from .timesets import (
    CantorApprox,
    TimeSet,
    cantor_endpoints,
    cantor_valid_m_max,
    covering_number,
    exponents,
    from_descriptor,
    sufficiency_sum,
)

EXIT_OK, EXIT_USAGE, EXIT_CHECK = 0, 1, 2
TOP_KEYS = {"experiment", "params", "set", "grid", "trials", "seed", "output", "tolerances", "options"}
DEFAULT_OUTPUT = "results"


class ConfigError(ValueError):
    def __init__(self, where: str, msg: str):
        super().__init__(f"{where}: {msg}")
        self.where = where


@dataclass
class ExperimentConfig:
    experiment: str
    params: ExponentParams | None
    time_set: object
    grid: FrequencyGrid | None
    trials: int | None
    seed: int | None
    output: str | None
    tolerances: dict
    options: dict
    raw: dict = field(repr=False)

    @property
    def inputs_hash(self) -> str:
        body = {k: v for k, v in self.raw.items() if k != "output"}
        text = json.dumps(body, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


@dataclass
class Outcome:
    columns: list[str]
    rows: list
    metrics: dict
    checks: dict
    provenance: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Experiment:
    name: str
    tests: str
    runner: Callable[[ExperimentConfig], Outcome]
    required: frozenset
    options: dict
    tolerances: dict


# ------------------------------------------------------------------- helpers


def _rng_list(seed: int, n: int):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _grid_info(grid: FrequencyGrid) -> dict:
    return {"dim": grid.dim, "period": grid.period, "mode_bound": grid.mode_bound, "n_modes": grid.n_modes}


def _finite_set(E, where="set"):
    if isinstance(E, CantorApprox):
        return cantor_endpoints(E)
    if not isinstance(E, TimeSet):
        raise ConfigError(where, "this experiment needs a finite time set")
    return E


# --------------------------------------------------------------- experiments


def run_propagate(cfg: ExperimentConfig) -> Outcome:
    p, g, o = cfg.params, cfg.grid, cfg.options
    times = [float(t) for t in o["times"]]
    rows = []
    for trial, rng in enumerate(_rng_list(cfg.seed, cfg.trials)):
        f = random_spectral_function(g, rng, float(o["decay"]))
        n0 = h_s_norm(f, 0.0)
        ident = h_s_norm(propagate(f, 0.0, p) - f, 0.0) / n0
        for i, t in enumerate(times):
            u = times[(i + 1) % len(times)]
            ft = propagate(f, t, p)
            unit = max(abs(h_s_norm(ft, s) - h_s_norm(f, s)) / h_s_norm(f, s) for s in o["s_values"])
            semi = h_s_norm(propagate(ft, u, p) - propagate(f, t + u, p), 0.0) / n0
            rows.append([trial, t, ident, unit, semi])
    arr = np.array([r[2:] for r in rows])
    tol = cfg.tolerances["rel"]
    worst = {"identity": arr[:, 0].max(), "unitarity": arr[:, 1].max(), "semigroup": arr[:, 2].max()}
    return Outcome(
        ["trial", "t", "identity_rel_err", "unitarity_rel_err", "semigroup_rel_err"],
        rows,
        {f"max_{k}_rel_err": float(v) for k, v in worst.items()},
        {k: bool(v <= tol) for k, v in worst.items()},
        {"grid": _grid_info(g)},
    )


def run_covernum(cfg: ExperimentConfig) -> Outcome:
    E, o = cfg.time_set, cfg.options
    kind = E.descriptor.get("kind")
    cantor = isinstance(E, CantorApprox) or kind == "cantor_endpoints"
    if o["radii"] is not None:
        radii = [(None, float(r)) for r in o["radii"]]
    else:
        base = o["base"] or (1.0 / E.descriptor["params"]["lambda"] if cantor else 2.0)
        radii = [(k, float(base) ** -k) for k in range(int(o["k_max"]) + 1)]
    rows, law = [], []
    for k, r in radii:
        N = covering_number(E, r)
        rows.append([k, r, N])
        if cantor and k is not None and o["base"] is None and k <= E.descriptor["level"]:
            law.append(N == 2**k)
    ordered = sorted(rows, key=lambda row: row[1])
    checks = {"monotone": all(a[2] >= b[2] for a, b in zip(ordered, ordered[1:]))}
    if law:
        checks["cantor_law"] = all(law)
    return Outcome(
        ["k", "r", "covering_number"],
        rows,
        {"n_radii": len(rows), "max_covering": max(r[2] for r in rows)},
        checks,
        {"set": E.descriptor},
    )


def run_suffsum(cfg: ExperimentConfig) -> Outcome:
    E, p, o = cfg.time_set, cfg.params, cfg.options
    m_max = o["m_max"]
    if m_max is None:
        m_max = min(40, cantor_valid_m_max(E)) if isinstance(E, CantorApprox) else 40
    res = sufficiency_sum(E, p.s, p.a, int(m_max))
    rows = [
        [m, 2.0**-m, int(res.covering[m]), float(res.terms[m]), float(res.partial_sums[m])]
        for m in range(res.terms.size)
    ]
    checks = {"decided": res.verdict != "inconclusive"}
    if o["expect"] is not None:
        checks["expected_verdict"] = res.verdict == o["expect"]
    metrics = {
        "verdict": res.verdict,
        "decay_ratio": res.decay_ratio,
        "partial_sum": float(res.partial_sums[-1]),
        "tail": res.tail,
        "total": res.total,
        "saturation_index": res.saturation_index,
    }
    return Outcome(
        ["m", "r", "covering_number", "term", "partial_sum"],
        rows,
        metrics,
        checks,
        {"set": E.descriptor, "m_max": int(m_max)},
    )


def run_maximal(cfg: ExperimentConfig) -> Outcome:
    p, g, o = cfg.params, cfg.grid, cfg.options
    E = _finite_set(cfg.time_set)
    sampler = SpectralSampler(g.mode_bound, g.period, g.dim, o["sampler"], float(o["decay"]))
    res = int(o["resolution"] or 2 * g.side)
    rows = []
    for trial, rng in enumerate(_rng_list(cfg.seed, cfg.trials)):
        rep = maximal_field(sampler.draw(rng), E, p, res, int(o["m_max"]))
        rows.append([trial, rep.ratio, rep.l2_sq, rep.hs_sq, rep.sum_value])
    ratios = np.array([r[1] for r in rows])
    return Outcome(
        ["trial", "ratio", "l2_sq", "hs_sq", "sum_value"],
        rows,
        {"max_ratio": float(ratios.max()), "mean_ratio": float(ratios.mean()), "sum_value": rows[0][4]},
        {"finite_ratio": bool(np.all(np.isfinite(ratios)))},
        {"grid": _grid_info(g), "resolution": res, "m_max": int(o["m_max"]), "n_times": len(E)},
    )


def run_theorem3(cfg: ExperimentConfig) -> Outcome:
    p, g, o = cfg.params, cfg.grid, cfg.options
    E = _finite_set(cfg.time_set)
    js = (int(o["j_max"]), int(o["j_max_compare"]))
    rows, growth_low, growth_high = [], [], []
    for trial, rng in enumerate(_rng_list(cfg.seed, cfg.trials)):
        f = random_spectral_function(g, rng, float(o["decay"]))
        res = [theorem3_sums(f, E, p, o["b"], j) for j in js]
        for j, r in zip(js, res):
            rows.append([trial, j, r.low_sum / r.hs_sq, r.high_sum / r.hs_sq])
        growth_low.append(res[1].low_sum / res[0].low_sum - 1)
        growth_high.append(res[1].high_sum / res[0].high_sum - 1)
    tol = cfg.tolerances["growth"]
    gl, gh = max(growth_low), max(growth_high)
    b = o["b"] if o["b"] is not None else 2 * p.s / (p.a - p.s)
    return Outcome(
        ["trial", "j_max", "low_over_hs", "high_over_hs"],
        rows,
        {"max_low_growth": gl, "max_high_growth": gh, "b": b},
        {"low_bounded": gl < tol, "high_bounded": gh < tol},
        {"grid": _grid_info(g), "j_max": list(js), "n_times": len(E)},
    )


def run_lemma3(cfg: ExperimentConfig) -> Outcome:
    p, g, o = cfg.params, cfg.grid, cfg.options
    b0, r = (float(v) for v in o["interval"])
    rows = []
    for trial, rng in enumerate(_rng_list(cfg.seed, cfg.trials)):
        f = random_spectral_function(g, rng, float(o["decay"]))
        res = interval_sup_check(f, (b0, r), p, int(o["n_mesh"]), o["resolution"])
        rows.append([trial, res.lhs, res.rhs_bound, res.ratio])
    worst = max(row[3] for row in rows)
    return Outcome(
        ["trial", "lhs", "rhs_bound", "ratio"],
        rows,
        {"max_ratio": worst},
        {"bound_holds": worst <= cfg.tolerances["max_ratio"]},
        {"grid": _grid_info(g), "n_mesh": int(o["n_mesh"]), "interval": [b0, r]},
    )


def run_multiplier(cfg: ExperimentConfig) -> Outcome:
    p, g, o = cfg.params, cfg.grid, cfg.options
    rows = []
    for d in o["deltas"]:
        sup = delta_multiplier_sup(g, float(d), p)
        rows.append([float(d), sup, sup / float(d) ** (p.s / p.a)])
    norm = [r[2] for r in rows]
    variation = max(norm) / min(norm)
    return Outcome(
        ["delta", "sup_abs_m", "normalized"],
        rows,
        {"variation_factor": variation, "max_normalized": max(norm)},
        {"bounded_variation": variation < cfg.tolerances["max_variation_factor"]},
        {"grid": _grid_info(g)},
    )


def run_counterexample(cfg: ExperimentConfig) -> Outcome:
    p, o = cfg.params, cfg.options
    spec = BumpSpec(p.a, o["A"])
    table = growth_experiment(
        range(int(o["nu_min"]), int(o["nu_max"]) + 1),
        p,
        spec,
        int(o["n"]),
        float(o["C"]),
        int(o["n_x"]),
        float(o["period"]),
        sensitivity_C=tuple(float(c) for c in o["sensitivity_C"]),
    )
    rows = [
        [r.nu, r.norm_f, r.lower_bound_maximal, r.ratio, r.fit_residual, r.substitution_error]
        for r in table.rows
    ]
    lo, hi = cfg.tolerances["exponent_window"]
    return Outcome(
        ["nu", "norm_f", "lower_bound_maximal", "ratio", "fit_residual", "substitution_error"],
        rows,
        {"exponent": table.exponent, "intercept": table.intercept, "sq_slope": table.sq_slope, "sq_offset": table.sq_offset},
        {"strictly_increasing": table.strictly_increasing, "exponent_in_window": lo <= table.exponent <= hi},
        {"growth_table": table.metadata, "n_modes": [r.n_modes for r in table.rows]},
    )


def run_exponents(cfg: ExperimentConfig) -> Outcome:
    e = exponents(cfg.params)
    lo, hi, closed = e.interval_I
    items = [
        ("gamma", e.gamma),
        ("theorem_a_exponent", e.theorem_a_exponent),
        ("p0", e.p0),
        ("interval_I_lo", lo),
        ("interval_I_hi", hi),
        ("interval_I_lo_included", closed),
        ("cantor_threshold", e.cantor_threshold),
        ("b_max", e.b_max),
        ("cor7_gamma_bound", e.cor7_gamma_bound),
    ]
    return Outcome(["name", "value"], [list(i) for i in items], dict(items) | {"flags": list(e.flags)}, {})


REGISTRY: dict[str, Experiment] = {
    e.name: e
    for e in [
        Experiment(
            "propagate", "Theorem 1", run_propagate, frozenset({"params", "grid", "trials", "seed"}),
            {"times": [0.1, 0.37, 1.0], "s_values": [0.0, 0.5, 1.0, 2.0], "decay": 0.0}, {"rel": 1e-12},
        ),
        Experiment(
            "covernum", "Theorem 6", run_covernum, frozenset({"set"}),
            {"radii": None, "k_max": 10, "base": None}, {},
        ),
        Experiment(
            "suffsum", "Corollary 5", run_suffsum, frozenset({"params", "set"}),
            {"m_max": None, "expect": None}, {},
        ),
        Experiment(
            "maximal", "Theorem 4", run_maximal, frozenset({"params", "set", "grid", "trials", "seed"}),
            {"resolution": None, "sampler": "gaussian", "decay": 0.0, "m_max": 40}, {},
        ),
        Experiment(
            "theorem3", "Theorem 3", run_theorem3, frozenset({"params", "set", "grid", "trials", "seed"}),
            {"b": None, "j_max": 8, "j_max_compare": 16, "decay": 0.0}, {"growth": 0.10},
        ),
        Experiment(
            "lemma3", "Lemma 3", run_lemma3, frozenset({"params", "grid", "trials", "seed"}),
            {"interval": [0.0, 0.01], "n_mesh": 32, "resolution": None, "decay": 0.0}, {"max_ratio": 1.0},
        ),
        Experiment(
            "multiplier", "Theorem 2", run_multiplier, frozenset({"params", "grid"}),
            {"deltas": [2.0**-k for k in range(2, 17, 2)]}, {"max_variation_factor": 2.0},
        ),
        Experiment(
            "counterexample", "Theorem 7", run_counterexample, frozenset({"params"}),
            {"nu_min": 6, "nu_max": 12, "n": 1, "C": 8.0, "n_x": 256, "period": 32.0, "A": None,
             "sensitivity_C": [4.0, 16.0]},
            {"exponent_window": [0.35, 0.65]},
        ),
        Experiment(
            "exponents", "Corollary 1", run_exponents, frozenset({"params"}), {}, {},
        ),
    ]
}


def list_experiments() -> list[str]:
    return [f"{name} → {e.tests}" for name, e in REGISTRY.items()]


# ------------------------------------------------------------ config parsing


def _merge(where: str, given, defaults: dict) -> dict:
    if given is None:
        given = {}
    if not isinstance(given, dict):
        raise ConfigError(where, "must be an object")
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise ConfigError(f"{where}.{unknown[0]}", f"unknown key (allowed: {sorted(defaults)})")
    return {**defaults, **given}


def _int(where: str, v, lo: int) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise ConfigError(where, f"must be an integer >= {lo}, got {v!r}")
    return v


def parse_config(raw) -> ExperimentConfig:
    """Validate a decoded config and build every descriptor it names."""
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be a JSON object")
    unknown = sorted(set(raw) - TOP_KEYS)
    if unknown:
        raise ConfigError(unknown[0], f"unknown key (allowed: {sorted(TOP_KEYS)})")
    name = raw.get("experiment")
    if name not in REGISTRY:
        raise ConfigError("experiment", f"must be one of {sorted(REGISTRY)}, got {name!r}")
    exp = REGISTRY[name]
    for key in sorted(exp.required):
        if key not in raw:
            raise ConfigError(key, f"required by experiment {name!r}")

    params = grid = E = None
    if "params" in raw:
        pr = raw["params"]
        if not isinstance(pr, dict) or set(pr) - {"a", "s", "n"} or not {"a", "s"} <= set(pr):
            raise ConfigError("params", "must be an object with keys a, s and optional n")
        try:
            params = ExponentParams(float(pr["a"]), float(pr["s"]), pr.get("n", 1))
        except (TypeError, ValueError) as err:
            raise ConfigError("params", str(err)) from None
    if "grid" in raw:
        gr = raw["grid"]
        if not isinstance(gr, dict) or set(gr) - {"dim", "period", "mode_bound"} or "mode_bound" not in gr:
            raise ConfigError("grid", "must be an object with mode_bound and optional dim, period")
        try:
            grid = FrequencyGrid(
                _int("grid.dim", gr.get("dim", 1), 1),
                float(gr.get("period", 2 * math.pi)),
                _int("grid.mode_bound", gr["mode_bound"], 0),
            )
        except ValueError as err:
            if isinstance(err, ConfigError):
                raise
            raise ConfigError("grid", str(err)) from None
        if params is not None and grid.dim != params.n:
            raise ConfigError("grid.dim", f"grid dimension {grid.dim} differs from params.n = {params.n}")
    if "set" in raw:
        if not isinstance(raw["set"], dict):
            raise ConfigError("set", "must be a time-set descriptor object")
        try:
            E = from_descriptor(raw["set"])
        except (KeyError, TypeError, ValueError) as err:
            raise ConfigError("set", str(err)) from None
    trials = _int("trials", raw["trials"], 1) if "trials" in raw else None
    seed = _int("seed", raw["seed"], 0) if "seed" in raw else None
    output = raw.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigError("output", "must be a directory path string")
    options = _merge("options", raw.get("options"), exp.options)
    tolerances = _merge("tolerances", raw.get("tolerances"), exp.tolerances)
    cfg = ExperimentConfig(name, params, E, grid, trials, seed, output, tolerances, options, raw)
    _precheck(cfg)
    return cfg


def _precheck(cfg: ExperimentConfig) -> None:
    """Experiment-specific validation that needs no heavy computation."""
    p, o = cfg.params, cfg.options
    try:
        if cfg.experiment in ("maximal", "theorem3"):
            _finite_set(cfg.time_set)
        if cfg.experiment == "suffsum" and isinstance(cfg.time_set, CantorApprox) and o["m_max"] is not None:
            if int(o["m_max"]) > cantor_valid_m_max(cfg.time_set):
                raise ConfigError("options.m_max", f"exceeds the Cantor validity limit {cantor_valid_m_max(cfg.time_set)}")
        if cfg.experiment == "covernum" and o["radii"] is not None:
            if not all(isinstance(r, (int, float)) and r > 0 for r in o["radii"]):
                raise ConfigError("options.radii", "must be positive numbers")
        if cfg.experiment == "multiplier":
            p.require(a_gt_1=True, s_lt_a=True, s_pos=True)
            if not all(0 < float(d) < 1 for d in o["deltas"]):
                raise ConfigError("options.deltas", "every delta must lie in (0, 1)")
        if cfg.experiment == "theorem3":
            p.require(s_lt_a=True, s_pos=True)
        if cfg.experiment == "exponents":
            p.require(s_pos=True)
        if cfg.experiment == "counterexample":
            p.require(a_gt_1=True)
            BumpSpec(p.a, o["A"])
            if int(o["n"]) == 2 and p.a != 2:
                raise ConfigError("options.n", "the tensor construction needs a = 2")
            lo, hi = cfg.tolerances["exponent_window"]
            if not lo <= hi:
                raise ConfigError("tolerances.exponent_window", "must be [lo, hi] with lo <= hi")
        if cfg.experiment == "lemma3" and float(o["interval"][1]) < 0:
            raise ConfigError("options.interval", "length must be nonnegative")
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as err:
        raise ConfigError("options" if cfg.experiment != "exponents" else "params", str(err)) from None


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError("config", f"cannot read {path}: {err.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError("config", f"invalid JSON at line {err.lineno} column {err.colno}: {err.msg}") from None
    return parse_config(raw)


# ---------------------------------------------------------------------- main


def run(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> tuple[int, dict]:
    """Run one experiment, write its files and return ``(exit code, summary)``."""
    exp = REGISTRY[cfg.experiment]
    outcome = exp.runner(cfg)
    out = Path(out_dir or cfg.output or DEFAULT_OUTPUT)
    csv_path = write_csv(out / f"{cfg.experiment}.csv", f"schro-maxlab {cfg.experiment}", outcome.columns, outcome.rows)
    passed = all(outcome.checks.values())
    summary = {
        "experiment": cfg.experiment,
        "tests": exp.tests,
        "inputs_hash": cfg.inputs_hash,
        "metrics": outcome.metrics,
        "checks": outcome.checks,
        "passed": passed,
        "results_file": csv_path.name,
        "provenance": {
            "config": cfg.raw,
            "options": cfg.options,
            "tolerances": cfg.tolerances,
            **outcome.provenance,
            "versions": {
                "schro_maxlab": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
        },
    }
    write_json(out / f"{cfg.experiment}_summary.json", summary)
    return (EXIT_OK if passed else EXIT_CHECK), summary


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="schro-maxlab", description="Maximal-estimate experiments for fractional Schrodinger means.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment from a JSON config")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides the config's output)")
    r.add_argument("--threads", type=int, help="worker cap (default: $SCHRO_MAXLAB_THREADS or 1)")
    sub.add_parser("list", help="list experiments and what each one tests")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.command == "list":
        for line in list_experiments():
            print(line)
        return EXIT_OK
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_USAGE
    set_max_workers(args.threads)
    try:
        cfg = load_config(args.config)
        code, summary = run(cfg, args.out)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    failed = [k for k, v in summary["checks"].items() if not v]
    status = "PASS" if not failed else "FAIL (" + ", ".join(failed) + ")"
    print(f"{cfg.experiment}: {status}")
    return code


if __name__ == "__main__":
    sys.exit(main())
