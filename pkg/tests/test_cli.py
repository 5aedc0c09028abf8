import csv
import json

import numpy as np
import pytest

from qgevrey.cli import DEFAULT_OUT, OUT_ENV, main, output_dir
from qgevrey.config import builtin_config
from qgevrey.pipeline import asym_paths, solve_paths


def _write_config(tmp_path, mutate):
    raw = json.loads(json.dumps(builtin_config("toy1").raw))
    mutate(raw)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    return str(path)


def _zero_data(raw):
    raw["problem"]["cauchy"] = {}


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_validate_toy1(capsys):
    assert main(["validate", "toy1"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["passed"] and rep["hypotheses"]["passed"]
    assert rep["admissibility"]["eps"]["passed"]
    assert set(rep["provenance"]) == {"config_sha256", "hypothesis_sha256"}


def test_validate_names_failed_structural_check(tmp_path, capsys):
    def bump(raw):
        raw["problem"]["terms"][0]["Delta"] = 1

    assert main(["validate", _write_config(tmp_path, bump)]) == 1
    rep = json.loads(capsys.readouterr().out)
    failed = [c["check"] for c in rep["hypotheses"]["checks"] if not c["passed"]]
    assert failed == ["Delta_l>=l0"]


def test_malformed_json(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["validate", str(bad)]) == 2


def test_unknown_config():
    assert main(["validate", "no-such-config"]) == 2


def test_usage_errors(tmp_path):
    assert main(["solve", "toy1", "--N", "0", "--out", str(tmp_path)]) == 2
    with pytest.raises(SystemExit) as info:
        main(["solve", "toy1", "--variant", "x"])
    assert info.value.code == 2


def test_asym_without_artifacts(tmp_path):
    assert main(["asym", "toy1", "--out", str(tmp_path)]) == 3


def test_output_dir_precedence(monkeypatch, tmp_path):
    monkeypatch.delenv(OUT_ENV, raising=False)
    assert str(output_dir(None)) == DEFAULT_OUT
    monkeypatch.setenv(OUT_ENV, str(tmp_path))
    assert output_dir(None) == tmp_path
    assert str(output_dir("elsewhere")) == "elsewhere"


def test_zero_data_solve_via_env(monkeypatch, tmp_path):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "env-out"))
    assert main(["solve", _write_config(tmp_path, _zero_data), "--N", "2"]) == 0
    rows = _read_csv(solve_paths(tmp_path / "env-out", "eps")["solution"])
    assert rows
    assert all(float(r["re"]) == 0 and float(r["im"]) == 0 for r in rows)


def test_solve_families_match_oracle(eps_run):
    rows = _read_csv(solve_paths(eps_run, "eps")["families"])
    q = builtin_config("toy1").problem.q
    checked = 0
    for r in rows:
        if r["n"] == "2" and r["grid"] == "ray" and float(r["radius"]) <= 1:
            u = float(r["radius"]) * np.exp(1j * np.radians(float(r["angle_deg"])))
            exact = q * u**3 / (2 * (1 + u**3))
            assert abs(complex(float(r["re"]), float(r["im"])) - exact) <= 1e-8 * abs(exact)
            checked += 1
    assert checked > 10


def test_solve_report(eps_run):
    rep = json.loads(solve_paths(eps_run, "eps")["report"].read_text())
    assert rep["passed"] and rep["schema_version"] == 1
    assert [s["p"] for s in rep["solutions"]] == [0, 1, 2]
    for s in rep["solutions"]:
        assert s["max_residual"] <= 1e-6
        assert s["max_cauchy_gap"] <= 1e-8
        assert set(s["bound_fits"]) == {"ray-growth", "disc", "annulus"}


def test_asym_reports(eps_run):
    qrel = json.loads(asym_paths(eps_run, "eps", "q-relative")["report"].read_text())
    sup = json.loads(asym_paths(eps_run, "eps", "sup")["report"].read_text())
    for rep in (qrel, sup):
        assert rep["cauchy_heine"]["classification"]["verdict"]
        assert rep["formal"]["classification"]["verdict"] == "Gevrey"
        for pair in rep["pairs"]:
            assert pair["flatness"]["r2"] is not None
            assert pair["mixed_bound"]["model"] == "mixed"
    for path in asym_paths(eps_run, "eps", "sup").values():
        assert path.exists()


def test_cocycle_grows_with_eps(eps_run):
    rep = json.loads(asym_paths(eps_run, "eps", "q-relative")["report"].read_text())
    for pair in rep["pairs"]:
        norms = np.array(pair["samples"]["norms"], dtype=float)
        mags = np.abs([complex(p["re"], p["im"]) for p in pair["samples"]["probes"]])
        order = np.argsort(mags)
        assert np.all(norms > 0)
        assert np.all(np.diff(norms[order]) > 0)


def test_selftest_cli(capsys):
    assert main(["selftest", "--quick"]) == 0
    assert json.loads(capsys.readouterr().out)["passed"]
