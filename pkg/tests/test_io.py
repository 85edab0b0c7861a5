import json
import math
import os

import numpy as np
import pytest

from strata import io
from strata.config import RunConfig
from strata.pipeline import finish_level

GOLDEN = json.load(open(os.path.join(os.path.dirname(__file__), "golden", "formats.json")))


def _header(path):
    with open(path) as fh:
        return fh.readline().strip()


@pytest.fixture(scope="module")
def atlas_dir(channel_atlas_201, tmp_path_factory):
    d = tmp_path_factory.mktemp("atlas")
    io.save_atlas(channel_atlas_201, str(d))
    return d


@pytest.fixture(scope="module")
def solution_dir(heteroclinic_small, tmp_path_factory):
    d = tmp_path_factory.mktemp("solution")
    cfg = RunConfig(nx=201, ly=6.4, ny=65)
    h = heteroclinic_small
    finish_level(h["result"], h["atlas"], cfg, 0.0, h["c"], str(d), figures=False)
    return d


def test_atlas_json_keys(atlas_dir):
    d = json.load(open(atlas_dir / "atlas.json"))
    assert sorted(d) == GOLDEN["atlas.json"]
    assert sorted(d["clusters"][0]) == GOLDEN["atlas.json:clusters"]
    assert sorted(d["hypothesis"]) == GOLDEN["atlas.json:hypothesis"]
    assert d["cluster_count"] == 2
    assert [c["file"] for c in d["clusters"]] == ["minimizer_0.csv", "minimizer_1.csv"]
    assert all(len(pair) == 2 for pair in d["hypothesis"]["omega_r"])


def test_minimizer_csv_header(atlas_dir):
    assert _header(atlas_dir / "minimizer_0.csv") == GOLDEN["minimizer_k.csv"]


def test_atlas_round_trip_is_exact(atlas_dir, channel_atlas_201):
    back = io.load_atlas(str(atlas_dir))
    a = channel_atlas_201
    assert back.m == a.m and back.m_star == a.m_star and back.d0 == a.d0
    assert back.star_holds == a.star_holds
    for q, r in zip(a.minimizers, back.minimizers):
        np.testing.assert_array_equal(q.half, r.half)
    assert back.hypothesis.to_dict() == a.hypothesis.to_dict()
    assert back.potential == a.potential


def test_solution_file_formats(solution_dir):
    assert _header(solution_dir / "field.csv") == GOLDEN["field.csv"]
    assert _header(solution_dir / "metrics.csv") == GOLDEN["metrics.csv"]
    rep = json.load(open(solution_dir / "report.json"))
    assert set(GOLDEN["report.json"]) <= set(rep)
    assert rep["kind"] == "Heteroclinic"
    assert rep["s_c"] == "-inf" and rep["t_c"] == "inf"
    audits = json.load(open(solution_dir / "audits.json"))
    assert isinstance(audits, list)
    assert all(sorted(a) == GOLDEN["audits.json"] for a in audits)


def test_field_csv_is_row_major_in_y(solution_dir, heteroclinic_small):
    x, y, values = io.read_field(str(solution_dir / "field.csv"))
    u = heteroclinic_small["result"].field
    np.testing.assert_array_equal(values, u.values)
    np.testing.assert_array_equal(y, u.y)
    _, data = io.read_csv(str(solution_dir / "field.csv"))
    assert data[1, 1] == data[0, 1] and data[1, 0] > data[0, 0]


def test_json_non_finite_values(tmp_path):
    path = tmp_path / "x.json"
    io.write_json(path, {"b": math.inf, "a": -math.inf, "c": math.nan, "d": np.float64(1.5)})
    text = path.read_text()
    assert json.loads(text) == {"a": "-inf", "b": "inf", "c": "nan", "d": 1.5}
    assert text.index('"a"') < text.index('"b"')


def test_csv_round_trip_is_bit_exact(tmp_path, rng):
    vals = rng.normal(size=(50, 3))
    io.write_csv(tmp_path / "t.csv", ("a", "b", "c"), vals.T)
    header, data = io.read_csv(tmp_path / "t.csv")
    assert header == ["a", "b", "c"]
    np.testing.assert_array_equal(data, vals)
