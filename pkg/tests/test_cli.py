import json
import subprocess
import sys

import pytest

from cgpt_sense.cli import main

FAST = ["--positions", "60", "--receptors", "32"]


@pytest.fixture(scope="module")
def dict_path(tmp_path_factory):
    p = tmp_path_factory.mktemp("cli") / "dict.json"
    assert main(["build-dict", "--out", str(p)]) == 0
    return p


def test_build_dict_writes_all_entries(dict_path):
    d = json.loads(dict_path.read_text())
    assert [e["id"] for e in d["entries"]] == ["1a", "1b", "2a", "2b", "3a", "3b", "4a", "4b", "5a", "5b"]


def test_build_dict_is_byte_identical(dict_path, tmp_path):
    again = tmp_path / "again.json"
    assert main(["build-dict", "--out", str(again)]) == 0
    assert again.read_bytes() == dict_path.read_bytes()


def test_missing_dictionary_is_usage_error(tmp_path, capsys):
    rc = main(["match", "--dict", str(tmp_path / "none.json"), "--cgpt", "x.json"])
    assert rc == 2
    assert "build-dict" in capsys.readouterr().err


def test_unknown_shape_is_usage_error(tmp_path):
    assert main(["cgpt", "--shapes", "9z", "--out", str(tmp_path / "c.json")]) == 2


def test_pipeline_simulate_reconstruct_match(dict_path, tmp_path, capsys):
    msr = tmp_path / "msr.csv"
    assert main(["simulate", "--shapes", "3b", "--test-motion", "--out", str(msr), *FAST]) == 0
    assert msr.with_suffix(".json").exists()
    rec = tmp_path / "rec.json"
    assert main(["reconstruct", "--msr", str(msr), "--shapes", "3b", "--test-motion", "--out", str(rec)]) == 0
    assert rec.with_suffix(".csv").exists()
    out = tmp_path / "match.json"
    assert main(["match", "--dict", str(dict_path), "--cgpt", str(rec), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["best_id"] == "3b"
    assert "best match 3b" in capsys.readouterr().out


def test_cgpt_from_spec_file(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"kind": "Ellipse", "params": {"a": 1.0, "b": 0.3}, "k1": 5.0, "id": "thin"}))
    out = tmp_path / "c.json"
    assert main(["cgpt", "--spec", str(spec), "--order", "3", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["order"] == 3 and "descriptors" in data


def test_invalid_spec_file(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"kind": "Blob", "k1": 2.0}))
    assert main(["cgpt", "--spec", str(spec), "--out", str(tmp_path / "c.json")]) != 0


def test_experiment_and_robustness_outputs(dict_path, tmp_path):
    f = tmp_path / "freq.csv"
    args = ["experiment", "--dict", str(dict_path), "--shapes", "2a", "--sigma", "0,0.2", "--trials", "4", *FAST]
    assert main([*args, "--out", str(f)]) == 0
    assert f.read_text().startswith("true_id,sigma0,selected_id,frequency\n")
    r = tmp_path / "rob.csv"
    assert main(["robustness", "--shapes", "2a", "--trials", "3", "--out", str(r), *FAST]) == 0
    assert len(r.read_text().splitlines()) == 11


def test_bad_order_rejected(tmp_path):
    assert main(["cgpt", "--shapes", "1a", "--order", "0", "--out", str(tmp_path / "c.json")]) == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "cgpt_sense", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("build-dict", "cgpt", "simulate", "reconstruct", "match", "experiment", "robustness"):
        assert cmd in out.stdout
