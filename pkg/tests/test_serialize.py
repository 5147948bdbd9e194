import json

import numpy as np
import pytest

from corrca.errors import ValidationError
from corrca.kernel import fit_kernel, transform_kernel
from corrca.linear import fit, transform
from corrca.mcca import fit_mcca, transform_mcca
from corrca.serialize import load_model, model_from_dict, model_to_dict, save_model


def test_corrca_round_trip(tmp_path, rng):
    x = rng.standard_normal((20, 3, 3))
    m = fit(x, "shrinkage:0.2")
    path = save_model(m, tmp_path / "m.json")
    back = load_model(path)
    assert np.array_equal(back.backward, m.backward)
    assert np.array_equal(back.forward, m.forward)
    assert str(back.regularization) == "shrinkage:0.2"
    assert back.training_dims == (20, 3, 3)
    obj = json.loads(path.read_text())
    assert obj["version"] and obj["dims"] == {"t": 20, "d": 3, "n": 3}
    assert np.array_equal(transform(x, back).values, transform(x, m).values)


def test_mcca_round_trip(tmp_path, rng):
    x = rng.standard_normal((20, 2, 3))
    m = fit_mcca(x)
    back = load_model(save_model(m, tmp_path / "m.json"))
    assert len(back.backward_per_rep) == 3
    assert np.array_equal(transform_mcca(x, back).values, transform_mcca(x, m).values)


def test_kernel_round_trip_keeps_reference(tmp_path, rng):
    x = rng.standard_normal((12, 2, 2))
    m = fit_kernel(x, n_components=2)
    obj = model_to_dict(m)
    assert len(obj["training_reference"]) == 2
    back = model_from_dict(json.loads(json.dumps(obj)))
    new = rng.standard_normal((5, 2, 3))
    assert np.array_equal(transform_kernel(new, back).values, transform_kernel(new, m).values)


def test_nan_written_as_null(rng):
    m = fit(rng.standard_normal((10, 2, 2)))
    obj = model_to_dict(m)
    obj["isc"][0] = None
    assert np.isnan(model_from_dict(obj).isc[0])


def test_malformed(tmp_path):
    with pytest.raises(ValidationError):
        model_from_dict({"kind": "corrca"})
    p = tmp_path / "bad.json"
    p.write_text("{")
    with pytest.raises(ValidationError):
        load_model(p)
    with pytest.raises(ValidationError):
        model_from_dict({"kind": "svm", "dims": {}, "regularization": "none"})
