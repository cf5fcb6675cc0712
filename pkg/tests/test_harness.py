"""Experiment configs, persistence, determinism, and the CLI."""

import json
import subprocess
import sys

import numpy as np
import pytest

from conelab.cli import main as cli_main
from conelab.errors import MissingInput
from conelab.harness import (
    CLASSIFICATION_CATALOG,
    ExperimentConfig,
    named_profile,
    run_classification_suite,
    run_experiment,
)


def test_config_from_dict_and_defaults():
    cfg = ExperimentConfig.from_dict({"experiment": "rebound"})
    assert cfg.eps_list == [1 / 64, 1 / 128, 1 / 256]
    assert cfg.grid_n == 8192
    assert cfg.dt_over_eps == 0.05
    assert cfg.profile == ["all_right", "even", "split70"]


def test_config_schema_rejects_bad_docs():
    import jsonschema

    with pytest.raises(jsonschema.ValidationError):
        ExperimentConfig.from_dict({"experiment": "unknown"})
    with pytest.raises(jsonschema.ValidationError):
        ExperimentConfig.from_dict({"experiment": "crossing", "eps": [-1.0]})
    with pytest.raises(jsonschema.ValidationError):
        ExperimentConfig.from_dict(
            {"experiment": "crossing", "scheme": {"beta": 0.5}}
        )


def test_config_hash_is_stable_and_sensitive():
    doc = {"experiment": "static_cone", "eps": [0.015625], "seed": 1}
    a = ExperimentConfig.from_dict(doc).canonical_hash()
    b = ExperimentConfig.from_dict(dict(doc)).canonical_hash()
    c = ExperimentConfig.from_dict({**doc, "seed": 2}).canonical_hash()
    assert a == b
    assert a != c


def test_missing_config_file(tmp_path):
    with pytest.raises(MissingInput):
        ExperimentConfig.from_json_file(tmp_path / "nope.json")


def test_named_profiles():
    y = np.linspace(-40, 40, 400_001)
    for name, expect_plus in (("all_right", 1.0), ("even", 0.5), ("split70", 0.7)):
        prof = named_profile(name)
        vals = np.abs(prof(y)) ** 2
        total = np.trapezoid(vals, y)
        plus = np.trapezoid(vals[y >= 0], y[y >= 0])
        assert plus / total == pytest.approx(expect_plus, abs=1e-9)
    right = named_profile("all_right")(y)
    assert np.all(right[y < 1.0] == 0.0)
    assert np.all(right[y > 2.0] == 0.0)
    with pytest.raises(MissingInput):
        named_profile("bogus")


def test_classification_record_persists_and_reruns_identically(tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    rec_a = run_classification_suite(
        ExperimentConfig(experiment="classify_suite", out_dir=str(out_a))
    )
    rec_b = run_classification_suite(
        ExperimentConfig(experiment="classify_suite", out_dir=str(out_b))
    )
    assert rec_a.passed and rec_b.passed
    for name in ("metrics.csv", "record.json", "events.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
    record = json.loads((out_a / "record.json").read_text())
    assert record["passed"] is True
    assert record["provenance"]["config_hash"] == rec_a.provenance["config_hash"]
    adjud = record["summary"]["adjudications"]
    assert set(adjud) == {"ex5", "ex6"}
    for verdict in adjud.values():
        assert verdict["verdict"] in ("confirmed", "revised")
        assert "claimed_roots" in verdict and "computed_roots" in verdict


def test_run_experiment_dispatch():
    with pytest.raises(MissingInput):
        run_experiment(ExperimentConfig(experiment="nope"))


def test_catalog_shape():
    names = [entry["name"] for entry in CLASSIFICATION_CATALOG]
    assert names == ["ex1", "ex2", "ex3", "ex4", "ex5", "ex6", "ex7"]
    assert sum(entry["disputed"] for entry in CLASSIFICATION_CATALOG) == 2


def test_cli_run_and_report(tmp_path, capsys):
    config = {"experiment": "classify_suite", "out_dir": str(tmp_path / "res")}
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(config))
    assert cli_main(["run", str(cfg_path)]) == 0
    out = capsys.readouterr().out
    assert "[PASS]" in out and "all checks passed" in out
    assert cli_main(["report", str(tmp_path / "res")]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "classify_suite" in out


def test_cli_classify(tmp_path, capsys):
    pot = {"V_S": "x1/2", "F": "-1", "g": ["x1"], "d": 1}
    path = tmp_path / "pot.json"
    path.write_text(json.dumps(pot))
    assert cli_main(["classify", str(path)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["label"] == "BranchesExist"
    assert sorted(r[0] for r in doc["roots"]["nonzero_roots"]) == [-1.5, 0.5]
    assert doc["nu"]["atoms"][0]["weight"] == pytest.approx(0.75)

    pot2 = {"V_S": "x2*x2/2", "F": "1", "g": ["x1"], "d": 2}
    path2 = tmp_path / "pot2.json"
    path2.write_text(json.dumps(pot2))
    out_file = tmp_path / "sweep.json"
    assert cli_main(["classify", str(path2), "--sweep", "5", "--out", str(out_file)]) == 0
    docs = json.loads(out_file.read_text())
    assert len(docs) == 5


def test_cli_classify_rejects_off_manifold(tmp_path, capsys):
    pot = {"V_S": "0", "F": "1", "g": ["x1"], "d": 1}
    path = tmp_path / "pot.json"
    path.write_text(json.dumps(pot))
    assert cli_main(["classify", str(path), "--sigma", "0.5"]) == 2


def test_cli_report_empty(tmp_path, capsys):
    assert cli_main(["report", str(tmp_path)]) == 2


def test_cli_entry_point_subprocess(tmp_path):
    pot = {"V_S": "0", "F": "1", "g": ["x1"], "d": 1}
    path = tmp_path / "pot.json"
    path.write_text(json.dumps(pot))
    proc = subprocess.run(
        [sys.executable, "-m", "conelab.cli", "classify", str(path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["label"] == "NoContact"


def test_small_scale_static_cone_writes_outputs(tmp_path):
    cfg = ExperimentConfig(
        experiment="static_cone",
        eps_list=[1 / 32, 1 / 64],
        grid_n=2048,
        snapshots=3,
        horizon=0.5,
        out_dir=str(tmp_path / "sc"),
    )
    record = run_experiment(cfg)
    assert (tmp_path / "sc" / "metrics.csv").exists()
    assert (tmp_path / "sc" / "record.json").exists()
    header = (tmp_path / "sc" / "metrics.csv").read_text().splitlines()[0]
    assert header.startswith("experiment,")
    for check in record.checks:
        if "parity" in check.rule or "nu_split" in check.rule:
            assert check.passed
