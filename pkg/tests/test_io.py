"""Deterministic file formatting helpers.

Floats go through repr (shortest round-trip), bools become 0/1, and JSON is
key-sorted, so identical inputs give identical bytes.
"""

import numpy as np

from l0dag import io


def test_fmt_cells():
    assert io.fmt(True) == "1"
    assert io.fmt(False) == "0"
    assert io.fmt(np.bool_(True)) == "1"
    assert io.fmt(7) == "7"
    assert io.fmt(np.int64(-3)) == "-3"
    assert io.fmt(0.1) == "0.1"
    assert io.fmt(np.float64(1 / 3)) == repr(1 / 3)
    assert float(io.fmt(1e-17)) == 1e-17


def test_matrix_roundtrip_exact(tmp_path):
    rng = np.random.default_rng(0)
    m = rng.normal(size=(5, 3))
    path = tmp_path / "m.csv"
    io.write_matrix_csv(path, m)
    back = io.read_matrix_csv(path)
    np.testing.assert_array_equal(back, m)  # repr round-trips float64
    io.write_matrix_csv(path, np.arange(3.0))
    assert io.read_matrix_csv(path).shape == (1, 3)


def test_json_roundtrip_and_ordering(tmp_path):
    obj = {"b": 1, "a": [1.5, None, True]}
    path = tmp_path / "x.json"
    io.write_json(path, obj)
    text = path.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert text.endswith("\n")
    assert io.read_json(path) == obj


def test_canonical_json_and_hash():
    a = {"x": 1, "y": [2, 3]}
    b = {"y": [2, 3], "x": 1}
    assert io.canonical_json(a) == io.canonical_json(b) == '{"x":1,"y":[2,3]}'
    assert io.config_hash(a) == io.config_hash(b)
    assert len(io.config_hash(a)) == 64
    assert io.config_hash(a) != io.config_hash({"x": 2, "y": [2, 3]})


def test_manifest_fields():
    man = io.build_manifest({"p": 3}, 10, "numpy", 42)
    assert man == {
        "package": "l0dag",
        "version": man["version"],
        "seed": 42,
        "config_sha256": io.config_hash({"p": 3}),
        "backend": "numpy",
        "gaussian": "philox4x64-10+inverse-cdf",
        "records": 10,
    }
    assert "time" not in str(sorted(man))
