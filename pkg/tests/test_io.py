import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wgmkit.errors import ValidationError
from wgmkit.io import atomic_write_text, dumps_report, format_csv_table, load_json, parse_trace_csv, write_trace_csv
from wgmkit.lineshape import FanoParams, FrequencyTrace, TraceMeta, synth_trace

P = FanoParams(13.869e9, 46.23, 0.3, 1.0, 0.01)


def test_complex_file(tmp_path):
    path = tmp_path / "t.csv"
    rows = "\n".join(f"{1e9 + i},{0.5 + i * 1e-3},{-0.25}" for i in range(10))
    path.write_text(f"# source_dbm=-20\n# temperature_mk=27\n# mode=WGH20\n# a free comment\nfreq_hz,s21_re,s21_im\n{rows}\n")
    t = parse_trace_csv(path)
    assert len(t) == 10 and t.complex_data
    assert t.meta == TraceMeta(-20.0, 27.0, "WGH20")
    assert t.magnitude[0] == pytest.approx(math.hypot(0.5, 0.25))


def test_decreasing_frequency_names_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("freq_hz,s21_mag\n1,0.1\n2,0.1\n3,0.1\n2.5,0.1\n")
    with pytest.raises(ValidationError, match=r"bad\.csv:5"):
        parse_trace_csv(path)


@pytest.mark.parametrize(
    "body, pattern",
    [
        ("freq_hz,s21_mag\n1,abc\n", ":2: malformed"),
        ("freq_hz,s21_mag\n1,0.1,0.2\n", ":2: expected 2 columns"),
        ("freq,mag\n1,0.1\n", ":1: unrecognised header"),
        ("# source_dbm=loud\nfreq_hz,s21_mag\n", ":1: bad metadata"),
        ("freq_hz,s21_mag\n1,nan\n", ":2: non-finite"),
        ("# only comments\n", "no header"),
        ("freq_hz,s21_mag\n1,0.1\n2,0.2\n", "at least 8"),
    ],
)
def test_malformed_files(tmp_path, body, pattern):
    path = tmp_path / "x.csv"
    path.write_text(body)
    with pytest.raises(ValidationError, match=pattern):
        parse_trace_csv(path)


def test_missing_file(tmp_path):
    with pytest.raises(ValidationError, match="nope.csv"):
        parse_trace_csv(tmp_path / "nope.csv")


def test_round_trip_magnitude(tmp_path):
    t = synth_trace(P, 301, 900.0, 7.0, 3, TraceMeta(-12.5, 200.0, "WGH19"))
    write_trace_csv(tmp_path / "r.csv", t)
    back = parse_trace_csv(tmp_path / "r.csv")
    np.testing.assert_array_equal(back.freq, t.freq)
    np.testing.assert_array_equal(back.magnitude, t.magnitude)
    assert back.meta == t.meta and not back.complex_data


@given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=8, max_size=30))
def test_round_trip_complex(tmp_path_factory, vals):
    f = 1e9 + np.arange(len(vals)) * 0.37
    r = np.array([complex(a, b) for a, b in vals])
    t = FrequencyTrace(f, r, complex_data=True)
    path = tmp_path_factory.mktemp("rt") / "c.csv"
    write_trace_csv(path, t)
    back = parse_trace_csv(path)
    np.testing.assert_array_equal(back.response, t.response)


def test_dumps_report_format():
    text = dumps_report({"b": 0.1, "a": [1, 2.5, float("nan")], "c": {"z": True, "y": None}, "d": np.float64(1 / 3)})
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')
    assert "0.10000000000000001" in text and "0.33333333333333331" in text
    data = json.loads(text)
    assert data["a"] == [1, 2.5, None] and data["c"] == {"y": None, "z": True}
    assert dumps_report({"x": 1}) == dumps_report({"x": 1})


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_dumps_float_round_trip(x):
    assert json.loads(dumps_report({"v": x}))["v"] == x


def test_csv_table():
    assert format_csv_table(("a", "b"), [(1, 0.5), (2.0, 1 / 3)]) == "a,b\n1,0.5\n2,0.33333333333333331\n"


def test_atomic_write(tmp_path):
    path = tmp_path / "out.txt"
    atomic_write_text(path, "one\n")
    atomic_write_text(path, "two\n")
    assert path.read_text() == "two\n"
    assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]
    with pytest.raises(ValidationError):
        atomic_write_text(tmp_path / "missing" / "x.txt", "z")


def test_load_json_errors(tmp_path):
    with pytest.raises(ValidationError, match="not found"):
        load_json(tmp_path / "none.json")
    (tmp_path / "bad.json").write_text("{nope")
    with pytest.raises(ValidationError, match="invalid JSON"):
        load_json(tmp_path / "bad.json")
