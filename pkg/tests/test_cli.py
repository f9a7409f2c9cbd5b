import json
import math

import pytest

from schro_maxlab import cli, parallel
from schro_maxlab.reporting import read_csv_body, read_csv_rows


def write_cfg(tmp_path, body, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(body))
    return str(p)


def run_cli(tmp_path, body, *extra):
    out = tmp_path / "out"
    code = cli.main(["run", write_cfg(tmp_path, body), "--out", str(out), *extra])
    summary = None
    path = out / f"{body['experiment']}_summary.json"
    if path.exists():
        summary = json.loads(path.read_text())
    return code, out, summary


# ---------------------------------------------------------------------- list


def test_list_registry(capsys):
    assert cli.main(["list"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 9
    assert "counterexample → Theorem 7" in lines
    assert "maximal → Theorem 4" in lines
    assert {ln.split(" → ")[0] for ln in lines} == set(cli.REGISTRY)


# -------------------------------------------------------------- config errors


@pytest.mark.parametrize(
    "body, field",
    [
        ({"experiment": "suffsum", "params": {"a": 2, "s": 2}, "set": {"kind": "interval"}, "colour": 1}, "colour"),
        ({"experiment": "nope"}, "experiment"),
        ({"experiment": "suffsum", "params": {"a": 2, "s": 2}}, "set"),
        ({"experiment": "suffsum", "params": {"a": 2, "s": 2}, "set": {"kind": "interval"}, "options": {"bogus": 1}}, "options.bogus"),
        ({"experiment": "propagate", "params": {"a": 2, "s": 1}, "grid": {"mode_bound": 4}, "trials": 0, "seed": 1}, "trials"),
        ({"experiment": "propagate", "params": {"a": 2, "s": 1}, "grid": {"mode_bound": 4, "dim": 2}, "trials": 1, "seed": 1}, "grid.dim"),
        ({"experiment": "covernum", "set": {"kind": "geometric", "count": 5, "params": {"r": -0.5}}}, "set"),
        ({"experiment": "suffsum", "params": {"a": 2, "s": 0.7},
          "set": {"kind": "cantor", "params": {"lambda": 1 / 3}, "level": 4}, "options": {"m_max": 30}}, "options.m_max"),
    ],
)
def test_config_errors_name_the_field(tmp_path, capsys, body, field):
    code, out, summary = run_cli(tmp_path, body)
    assert code == 1 and summary is None
    err = capsys.readouterr().err
    assert err.startswith(f"error: {field}:")


def test_unreadable_and_malformed_config(tmp_path, capsys):
    assert cli.main(["run", str(tmp_path / "missing.json")]) == 1
    assert "config: cannot read" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text("{\"experiment\": ")
    assert cli.main(["run", str(bad)]) == 1
    assert "invalid JSON" in capsys.readouterr().err


def test_usage_errors():
    assert cli.main([]) == 1
    assert cli.main(["frobnicate"]) == 1
    assert cli.main(["run", "x.json", "--threads", "0"]) == 1


# --------------------------------------------------------------- experiments


def test_suffsum_interval_converges(tmp_path):
    body = {"experiment": "suffsum", "params": {"a": 2.0, "s": 2.0}, "set": {"kind": "interval"}}
    code, out, summary = run_cli(tmp_path, body)
    assert code == 0
    assert summary["metrics"]["verdict"] == "converged"
    assert summary["experiment"] == "suffsum" and summary["tests"] == "Corollary 5"
    assert len(summary["inputs_hash"]) == 64
    assert summary["passed"] is True and summary["results_file"] == "suffsum.csv"
    prov = summary["provenance"]
    assert prov["config"] == body and prov["m_max"] == 40
    assert set(prov["versions"]) == {"schro_maxlab", "python", "numpy", "scipy"}


def test_covernum_cantor_column(tmp_path):
    body = {"experiment": "covernum", "set": {"kind": "cantor", "params": {"lambda": 1 / 3}, "level": 10}}
    code, out, summary = run_cli(tmp_path, body)
    assert code == 0 and summary["checks"] == {"monotone": True, "cantor_law": True}
    header, *rows = read_csv_rows(out / "covernum.csv")
    assert header == ["k", "r", "covering_number"]
    for k, r, n in rows:
        assert int(n) == 2 ** int(k)
        assert float(r) == pytest.approx(3.0 ** -int(k), rel=1e-15)


def test_failed_check_exits_two(tmp_path, capsys):
    body = {"experiment": "suffsum", "params": {"a": 2.0, "s": 0.25}, "set": {"kind": "interval"},
            "options": {"expect": "converged"}}
    code, out, summary = run_cli(tmp_path, body)
    assert code == 2
    assert summary["passed"] is False and summary["checks"]["expected_verdict"] is False
    assert "FAIL (expected_verdict)" in capsys.readouterr().out


def test_exponents_summary(tmp_path):
    code, out, summary = run_cli(tmp_path, {"experiment": "exponents", "params": {"a": 2.0, "s": 0.5}})
    assert code == 0 and summary["checks"] == {}
    header, *rows = read_csv_rows(out / "exponents.csv")
    names = [r[0] for r in rows]
    assert names[0] == "gamma" and "p0" in names


def test_interval_sup_and_propagate_runs(tmp_path):
    body = {"experiment": "lemma3", "params": {"a": 2.0, "s": 0.5}, "grid": {"mode_bound": 16}, "trials": 3, "seed": 2}
    code, _, summary = run_cli(tmp_path, body)
    assert code == 0 and summary["metrics"]["max_ratio"] <= 1
    body = {"experiment": "propagate", "params": {"a": 2.0, "s": 1.0}, "grid": {"mode_bound": 16}, "trials": 3, "seed": 2}
    code, _, summary = run_cli(tmp_path, body)
    assert code == 0 and summary["provenance"]["grid"]["n_modes"] == 33


def test_inputs_hash_ignores_output(tmp_path):
    body = {"experiment": "exponents", "params": {"a": 2.0, "s": 0.5}}
    a = cli.parse_config(body).inputs_hash
    assert cli.parse_config(body | {"output": "elsewhere"}).inputs_hash == a
    assert cli.parse_config(body | {"params": {"a": 2.0, "s": 0.6}}).inputs_hash != a


# --------------------------------------------------------------- determinism


def test_repeated_runs_have_identical_csv_bodies(tmp_path):
    body = {"experiment": "maximal", "params": {"a": 2.0, "s": 0.5}, "grid": {"mode_bound": 16},
            "set": {"kind": "power", "count": 20, "params": {"p": 2.0}}, "trials": 4, "seed": 11}
    path = write_cfg(tmp_path, body)
    bodies = []
    for i in range(2):
        out = tmp_path / f"run{i}"
        assert cli.main(["run", path, "--out", str(out)]) == 0
        raw = (out / "maximal.csv").read_bytes()
        first, rest = raw.split(b"\r\n", 1)
        assert first.startswith(b"# ")
        bodies.append(rest)
    assert bodies[0] == bodies[1]
    assert read_csv_body(tmp_path / "run0" / "maximal.csv").encode() == bodies[0]
    # full float round trip
    rows = read_csv_rows(tmp_path / "run0" / "maximal.csv")[1:]
    assert all(math.isfinite(float(r[1])) for r in rows)


def test_threads_flag_and_env(tmp_path, monkeypatch):
    body = {"experiment": "maximal", "params": {"a": 2.0, "s": 0.5}, "grid": {"mode_bound": 16},
            "set": {"kind": "power", "count": 20, "params": {"p": 2.0}}, "trials": 4, "seed": 11}
    path = write_cfg(tmp_path, body)
    assert cli.main(["run", path, "--out", str(tmp_path / "one")]) == 0
    assert cli.main(["run", path, "--out", str(tmp_path / "four"), "--threads", "4"]) == 0
    assert parallel.max_workers() == 4
    one = read_csv_rows(tmp_path / "one" / "maximal.csv")
    assert read_csv_rows(tmp_path / "four" / "maximal.csv") == one
    monkeypatch.setenv(parallel.ENV_VAR, "3")
    assert cli.main(["run", path, "--out", str(tmp_path / "env")]) == 0
    assert parallel.max_workers() == 3
    parallel.set_max_workers(None)
