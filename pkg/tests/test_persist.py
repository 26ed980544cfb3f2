import json

import numpy as np
import pytest

from lnn.architecture import LnnConfig, build_architecture
from lnn.binary import fit_binary, predict_prob_many
from lnn.persist import (
    architecture_from_dict,
    architecture_to_dict,
    load_metadata,
    load_model,
    model_to_dict,
    save_model,
)
from lnn.regress import fit_regression, predict_many


def test_architecture_round_trip():
    arch = build_architecture(LnnConfig(d=2, q=2, u_sigma=0.5), M=3)
    doc = json.loads(json.dumps(architecture_to_dict(arch)))
    back = architecture_from_dict(doc)
    assert back.M == 3 and np.array_equal(back.D, arch.D)


def test_tampered_architecture_is_rejected():
    doc = architecture_to_dict(build_architecture(LnnConfig(d=1, q=2), M=2))
    doc["gamma"][0] += 1e-9
    with pytest.raises(ValueError, match="gamma"):
        architecture_from_dict(doc)
    doc = architecture_to_dict(build_architecture(LnnConfig(d=1, q=2), M=2))
    doc["format_version"] = 99
    with pytest.raises(ValueError):
        architecture_from_dict(doc)


def test_regression_round_trip_is_bit_identical(reg_sample, tmp_path):
    data, _, arch = reg_sample
    model = fit_regression(data, arch)
    path = tmp_path / "m.json"
    save_model(model, path, {"x_names": ["x1", "x2"]})
    back = load_model(path)
    pts = np.random.default_rng(0).uniform(-3, 3, (100, 2))
    assert np.array_equal(predict_many(model, pts)[0], predict_many(back, pts)[0])
    assert back.sigma_eps2 == model.sigma_eps2
    assert load_metadata(path) == {"x_names": ["x1", "x2"]}


def test_binary_round_trip(bin_sample, tmp_path):
    data, _, arch = bin_sample
    model = fit_binary(data, arch)
    path = tmp_path / "b.json"
    save_model(model, path)
    back = load_model(path)
    pts = np.random.default_rng(1).uniform(-3, 3, (100, 2))
    a, fa = predict_prob_many(model, pts)
    b, fb = predict_prob_many(back, pts)
    assert np.array_equal(a, b, equal_nan=True) and np.array_equal(fa, fb)
    assert [r.status for r in back.records] == [r.status for r in model.records]
    assert model_to_dict(back)["kind"] == "bin"
