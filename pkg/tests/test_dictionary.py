import json

import numpy as np
import pytest
from conftest import cached_cgpt

from cgpt_sense.algebra import transform_cgpt
from cgpt_sense.dictionary import (
    TEST_MOTION,
    Dictionary,
    ExperimentSettings,
    build_dictionary,
    match,
    run_identification_experiment,
    run_robustness_experiment,
)
from cgpt_sense.geometry import ShapeSpec
from cgpt_sense.invariants import descriptors_from_cgpt

IDS = ["1a", "1b", "2a", "2b", "3a", "3b", "4a", "4b", "5a", "5b"]
SMALL = dict(n_positions=100, n_receptors=128)


def test_default_dictionary(dictionary):
    assert dictionary.ids == IDS
    assert len(dictionary) == 10
    e = dictionary["1b"]
    assert e.spec.k2 == 4.0 and e.spec.coated["ratio"] == 0.5
    assert dictionary["1a"].spec.k2 is None
    with pytest.raises(KeyError):
        dictionary["6a"]


def test_coating_changes_descriptors(dictionary):
    a, b = dictionary["1a"].descriptors, dictionary["1b"].descriptors
    assert np.max(np.abs(a.I1 - b.I1)) + np.max(np.abs(a.I2 - b.I2)) > 1e-3


@pytest.mark.parametrize("key", IDS)
def test_self_match(dictionary, key):
    res = match(dictionary[key].descriptors, dictionary)
    assert res.best_id == key
    assert res.best_error == 0.0
    assert res.margin > 0


def test_moved_target_matches(dictionary):
    moved = transform_cgpt(cached_cgpt("2b"), TEST_MOTION)
    res = match(descriptors_from_cgpt(moved), dictionary)
    assert res.best_id == "2b"
    assert res.best_error < 1e-8


def test_radial_tie_goes_to_lowest_id():
    specs = {
        "c2": ShapeSpec("Circle", k1=2.0, k2=4.0, coated={"ratio": 0.5}),
        "c1": ShapeSpec("Circle", k1=3.0),
    }
    d = build_dictionary(specs, 3, n_nodes=256)
    res = match(d["c2"].descriptors, d)
    assert res.tie
    assert res.best_id == "c1"


def test_order_mismatch_rejected(dictionary):
    with pytest.raises(ValueError, match="does not match dictionary order"):
        match(descriptors_from_cgpt(cached_cgpt("1a"), 3), dictionary)


def test_build_arguments_checked():
    with pytest.raises(ValueError):
        build_dictionary(K=1)
    with pytest.raises(ValueError):
        build_dictionary(K=2, descriptor_order=3)


def test_save_load_round_trip(dictionary, tmp_path):
    p = dictionary.save(tmp_path / "d.json")
    again = Dictionary.load(p)
    assert again.to_json() == dictionary.to_json()
    assert json.loads(p.read_text())["descriptor_order"] == 2
    with pytest.raises(FileNotFoundError, match="build-dict"):
        Dictionary.load(tmp_path / "missing.json")


def test_duplicate_ids_rejected(dictionary):
    with pytest.raises(ValueError):
        Dictionary(dictionary.entries + dictionary.entries[:1], 512, 2)


def test_noiseless_identification_is_certain(dictionary):
    st = ExperimentSettings(sigmas=(0.0,), trials=5, **SMALL)
    table = run_identification_experiment(dictionary, ["2a", "4b"], st)
    assert table.identification("2a") == [1.0]
    assert table.identification("4b") == [1.0]


def test_experiment_is_deterministic(dictionary, tmp_path):
    st = ExperimentSettings(sigmas=(0.3,), trials=8, seed=5, **SMALL)
    a = run_identification_experiment(dictionary, ["3a"], st).write_csv(tmp_path / "a.csv")
    b = run_identification_experiment(dictionary, ["3a"], ExperimentSettings(**{**st.__dict__, "workers": 1})).write_csv(
        tmp_path / "b.csv"
    )
    assert a.read_bytes() == b.read_bytes()
    rows = a.read_text().splitlines()
    assert rows[0] == "true_id,sigma0,selected_id,frequency"
    assert len(rows) == 11
    freqs = [float(r.split(",")[3]) for r in rows[1:]]
    assert abs(sum(freqs) - 1.0) < 1e-12


def test_mean_error_selection(dictionary):
    st = ExperimentSettings(sigmas=(0.1,), trials=4, selection="mean-error", **SMALL)
    table = run_identification_experiment(dictionary, ["5a"], st)
    assert table.identification("5a") == [1.0]


def test_settings_validation():
    with pytest.raises(ValueError):
        ExperimentSettings(trials=0)
    with pytest.raises(ValueError):
        ExperimentSettings(selection="vote")
    with pytest.raises(ValueError):
        ExperimentSettings(sigmas=(-0.1,))


def test_unknown_target(dictionary):
    with pytest.raises(KeyError):
        run_identification_experiment(dictionary, ["9z"], ExperimentSettings(sigmas=(0.0,), **SMALL))


def test_robustness_small(specs):
    res = run_robustness_experiment(specs["2a"], (0.0, 0.2), trials=5, **SMALL)
    assert len(res.errors) == 2 and len(res.errors[0]) == 5
    assert max(res.errors[0]) < 1e-2
    rows = list(res.rows())
    assert rows[0][3] == 1 and rows[-1][3] == 5


def test_corner_shapes_absorb_confusions(dictionary):
    # at high noise 1a is mistaken for the other corner shapes, not for the smooth ones
    st = ExperimentSettings(sigmas=(0.3, 0.5), trials=100, seed=1, motion=TEST_MOTION)
    table = run_identification_experiment(dictionary, ["1a"], st)
    corner = {s: sum(table.frequency("1a", s, k) for k in ("5a", "5b")) for s in st.sigmas}
    smooth = {s: sum(table.frequency("1a", s, k) for k in ("2a", "2b", "3a", "3b")) for s in st.sigmas}
    # at 0.3 this acquisition makes no mistakes at all, so only the smooth side is checked there
    assert smooth[0.3] == 0.0
    assert corner[0.5] > smooth[0.5]
