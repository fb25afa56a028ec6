import json

import numpy as np
import pytest

from lobrnn.baselines import OvrLogistic, WhiteNoise, ffwd_init
from lobrnn.errors import LayoutHashMismatch, ModelFormatError, VersionMismatch
from lobrnn.features import LAYOUT_HASH
from lobrnn.rnn.model import glorot_init
from lobrnn.serialize import dumps, from_document, load, loads, save, to_document


def models():
    rnn = glorot_init(6, 4, 3, seed=1)
    rnn.b_h[:] = [0.1, -1e-300, 3.5e10, np.nextafter(0.2, 1)]
    rnn.meta.update(standardization={"shift": [0.1] * 6, "scale": [1 / 3] * 6}, T=4, seed=1)
    ff = ffwd_init(8, (5, 3), 3, seed=2)
    ovr = OvrLogistic(np.random.default_rng(0).normal(size=(3, 8)), np.array([0.1, 0.2, -0.3]), 0.5, 1e-3)
    return [rnn, ff, ovr, WhiteNoise(7)]


def assert_same_model(a, b):
    assert a.model_kind == b.model_kind
    assert a.meta == b.meta
    if hasattr(a, "params"):
        pa, pb = a.params(), b.params()
        assert pa.keys() == pb.keys()
        for k in pa:
            np.testing.assert_array_equal(pa[k], pb[k])
            assert pa[k].dtype == pb[k].dtype == np.float64


class TestRoundTrip:
    @pytest.mark.parametrize("model", models(), ids=lambda m: m.model_kind)
    def test_bit_exact(self, model):
        again = loads(dumps(model))
        assert_same_model(model, again)
        assert dumps(again) == dumps(model)

    def test_file_round_trip(self, tmp_path):
        m = models()[0]
        save(m, tmp_path / "m.json")
        assert_same_model(m, load(tmp_path / "m.json"))

    def test_logistic_hyper(self):
        ovr = models()[2]
        again = loads(dumps(ovr))
        assert (again.alpha, again.lam) == (0.5, 1e-3)

    def test_document_layout(self):
        doc = to_document(models()[0])
        assert doc["format"] == "lobrnn-model"
        assert doc["format_version"] == 1
        assert doc["layout_hash"] == LAYOUT_HASH
        assert doc["params"]["W_h"]["shape"] == [4, 6]


class TestRejects:
    def doc(self):
        return json.loads(dumps(models()[0]))

    def test_version(self):
        d = self.doc()
        d["format_version"] = 2
        with pytest.raises(VersionMismatch):
            from_document(d)

    def test_layout(self):
        d = self.doc()
        d["layout_hash"] = "deadbeef"
        with pytest.raises(LayoutHashMismatch):
            from_document(d)
        assert from_document(d, expected_layout_hash=None).model_kind == "rnn"

    def test_truncated(self):
        text = dumps(models()[0])
        with pytest.raises(ModelFormatError):
            loads(text[: len(text) // 2])

    def test_missing_parameter(self):
        d = self.doc()
        del d["params"]["U_h"]
        with pytest.raises(ModelFormatError):
            from_document(d)

    def test_bad_shape(self):
        d = self.doc()
        d["params"]["W_h"]["shape"] = [5, 5]
        with pytest.raises(ModelFormatError):
            from_document(d)

    def test_unknown_kind_and_foreign_file(self):
        d = self.doc()
        d["model_kind"] = "svm"
        with pytest.raises(ModelFormatError):
            from_document(d)
        with pytest.raises(ModelFormatError):
            loads('{"hello": 1}')
        with pytest.raises(ModelFormatError):
            loads("[]")
