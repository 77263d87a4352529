import json

import numpy as np
import pytest

from conftest import random_measure
from mixpost import io as mio
from mixpost.gibbs import PosteriorDraw


class TestFmt:
    @pytest.mark.parametrize("x", [0.1, 1 / 3, np.pi, 1e-300, -2.5e17, 123456789.123456789])
    def test_roundtrip(self, x):
        s = mio.fmt(x)
        assert float(s) == x
        assert len(s.replace("-", "").replace(".", "").split("e")[0].lstrip("0")) <= 17

    def test_integers_and_floats(self):
        assert mio.fmt(3) == "3"
        assert mio.fmt(np.int64(-4)) == "-4"
        assert mio.fmt(1.0) == "1.0"
        assert mio.fmt(0.1) == "0.10000000000000001"
        assert mio.fmt(float("nan")) == "NaN"
        assert mio.fmt(float("-inf")) == "-Infinity"
        assert mio.fmt(True) == "true"

    def test_dumps_parses(self):
        obj = {"a": [0.1, 2, None], "b": {"c": np.float64(1e-5)}, "d": "x", "e": [[1.0, 2.0]]}
        assert json.loads(mio.dumps(obj, indent=2)) == {"a": [0.1, 2, None], "b": {"c": 1e-5},
                                                        "d": "x", "e": [[1.0, 2.0]]}
        with pytest.raises(TypeError):
            mio.dumps({"x": object()})


class TestConfigHash:
    def test_order_independent(self):
        assert mio.config_hash({"a": 1, "b": 2}) == mio.config_hash({"b": 2, "a": 1})
        assert mio.config_hash({"a": 1}) != mio.config_hash({"a": 2})
        assert len(mio.config_hash({})) == 16

    def test_provenance(self):
        p = mio.provenance({"seed": 5}, 5)
        assert p == {"config_hash": mio.config_hash({"seed": 5}), "seed": 5}


class TestDataCsv:
    def test_roundtrip_with_header_and_meta(self, tmp_path, rng):
        X = rng.normal(size=(7, 3))
        path = tmp_path / "d.csv"
        mio.write_data_csv(path, X, meta={"seed": 1})
        assert path.read_text().startswith("# seed=1\ny1,y2,y3\n")
        Y, header = mio.read_data_csv(path, return_header=True)
        np.testing.assert_array_equal(X, Y)
        assert header == ["y1", "y2", "y3"]

    def test_headerless(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1,2\n3,4\n\n")
        np.testing.assert_array_equal(mio.read_data_csv(path), [[1, 2], [3, 4]])

    @pytest.mark.parametrize("text,line", [("a,b\n1,2\n3\n", 3), ("1,2\n3,x\n", 2), ("1,2\nnan,1\n", 2)])
    def test_errors_name_line(self, tmp_path, text, line):
        path = tmp_path / "bad.csv"
        path.write_text(text)
        with pytest.raises(mio.ValidationError, match=f"line {line}"):
            mio.read_data_csv(path)

    def test_missing_and_empty(self, tmp_path):
        with pytest.raises(mio.ValidationError):
            mio.read_data_csv(tmp_path / "nope.csv")
        (tmp_path / "e.csv").write_text("# only a comment\n")
        with pytest.raises(mio.ValidationError):
            mio.read_data_csv(tmp_path / "e.csv")


class TestLabels:
    def test_one_based_on_disk(self, tmp_path):
        path = tmp_path / "z.csv"
        mio.write_labels_csv(path, [0, 2, 1])
        assert path.read_text().splitlines() == ["label", "1", "3", "2"]
        np.testing.assert_array_equal(mio.read_labels_csv(path), [0, 2, 1])

    def test_rejects_zero(self, tmp_path):
        path = tmp_path / "z.csv"
        path.write_text("1\n0\n")
        with pytest.raises(mio.ValidationError, match="line 2"):
            mio.read_labels_csv(path)

    def test_rejects_non_integer(self, tmp_path):
        path = tmp_path / "z.csv"
        path.write_text("1\n2.5\n")
        with pytest.raises(mio.ValidationError):
            mio.read_labels_csv(path)


class TestMeasuresAndDraws:
    def test_measure_roundtrip_bitwise(self, tmp_path, rng):
        G = random_measure(rng, 3, 2)
        mio.write_measure(tmp_path / "g.json", G, meta={"seed": 0})
        H = mio.read_measure(tmp_path / "g.json")
        np.testing.assert_array_equal(G.weights, H.weights)
        np.testing.assert_array_equal(G.means, H.means)
        np.testing.assert_array_equal(G.covs, H.covs)
        assert mio.read_json(tmp_path / "g.json")["meta"] == {"seed": 0}

    def test_bare_measure_accepted(self, rng):
        G = random_measure(rng, 2, 2)
        assert mio.measure_from_json(G.to_dict()) == G

    def test_bad_measure(self, tmp_path):
        (tmp_path / "g.json").write_text('{"weights": [1.0]}')
        with pytest.raises(mio.ValidationError):
            mio.read_measure(tmp_path / "g.json")
        (tmp_path / "h.json").write_text("{not json")
        with pytest.raises(mio.ValidationError):
            mio.read_json(tmp_path / "h.json")

    def test_draws_roundtrip(self, tmp_path, rng):
        draws = [PosteriorDraw(random_measure(rng, 3, 2), rng.integers(0, 3, 10), it) for it in (5, 6)]
        mio.write_draws_jsonl(tmp_path / "d.jsonl", draws, meta={"seed": 9})
        back, meta = mio.read_draws_jsonl(tmp_path / "d.jsonl")
        assert meta == {"seed": 9}
        for a, b in zip(draws, back):
            assert a.iteration == b.iteration
            np.testing.assert_array_equal(a.labels, b.labels)
            np.testing.assert_array_equal(a.measure.means, b.measure.means)
        first = json.loads((tmp_path / "d.jsonl").read_text().splitlines()[1])
        assert min(first["labels"]) >= 1

    def test_draws_errors(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text('{"meta": {}}\n')
        with pytest.raises(mio.ValidationError):
            mio.read_draws_jsonl(path)
        path.write_text('{"meta": {}}\n{oops\n')
        with pytest.raises(mio.ValidationError, match="line 2"):
            mio.read_draws_jsonl(path)
