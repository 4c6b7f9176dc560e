import json

import numpy as np
from hypothesis import given, settings, strategies as st

from mattila_lab import serialize as S
from mattila_lab.bundled import bundled
from mattila_lab.fourier import FrequencySet
from mattila_lab.groups import GroupWindow
from mattila_lab.measures import Mollifier, PointMassMeasure, cantor_dust_spec, mollify


@given(st.integers(1, 20).flatmap(lambda n: st.tuples(
    st.lists(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=2), min_size=n, max_size=n),
    st.lists(st.floats(1e-3, 1), min_size=n, max_size=n))))
@settings(max_examples=50, deadline=None)
def test_measure_json_round_trip_is_exact(data):
    pts, w = data
    mu = PointMassMeasure(np.array(pts), np.array(w) / np.sum(w))
    back = S.measure_from_dict(json.loads(json.dumps(S.measure_to_dict(mu))))
    np.testing.assert_array_equal(back.points, mu.points)
    np.testing.assert_array_equal(back.weights, mu.weights)


def test_ifs_round_trip():
    spec = cantor_dust_spec(3)
    back = S.ifs_from_dict(json.loads(json.dumps(S.ifs_to_dict(spec))))
    assert back.depth == 3 and len(back.maps) == 4
    np.testing.assert_array_equal(back.maps[1].translation, spec.maps[1].translation)


def test_window_round_trip():
    w = GroupWindow.sl2(3.0, "KP-prime")
    d = S.window_to_dict(w, seed=11)
    assert d["seed"] == 11 and d["mass"] == w.mass
    assert S.window_from_dict(json.loads(json.dumps(d))) == w


def test_frequency_set_round_trip():
    fs = FrequencySet.default(2, 24.0, seed=5)
    back = S.frequency_set_from_dict(json.loads(json.dumps(S.frequency_set_to_dict(fs))))
    np.testing.assert_array_equal(back.frequencies, fs.frequencies)


def test_grid_round_trip(tmp_path):
    rho = mollify(bundled("two-point"), Mollifier(2, 0.125), 0.03125)
    S.write_grid(tmp_path / "g.csv", rho)
    back = S.read_grid(tmp_path / "g.csv")
    np.testing.assert_array_equal(back.values, rho.values)
    np.testing.assert_array_equal(back.origin, rho.origin)
    assert S.read_json(tmp_path / "g.json")["mass"] == rho.mass


def test_csv_floats_are_exact(tmp_path):
    S.write_csv(tmp_path / "t.csv", ["a", "b"], [(0.1 + 0.2, "x"), (np.float64(1 / 3), "y")])
    rows = S.read_csv(tmp_path / "t.csv")
    assert float(rows[0]["a"]) == 0.1 + 0.2 and float(rows[1]["a"]) == 1 / 3
