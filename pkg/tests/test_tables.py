import json
import math
import os

import numpy as np
import pytest
from hypothesis import given, strategies as st

from baxxz.tables import (atomic_write, emit_table, format_value, parse_value, read_table,
                          render_table)

COLS = ["N", "delta", "sign", "note"]

finite = st.floats(allow_nan=False, allow_infinity=False)


def test_sign_fields_parse_back_exactly():
    row = "3.000e0,-1".split(",")
    assert [parse_value(x) for x in row] == [3.0, -1]
    assert isinstance(parse_value("-1"), int) and isinstance(parse_value("3.000e0"), float)


@pytest.mark.parametrize("v, s", [(3, "3"), (-1, "-1"), (True, "1"), (0.1, "1.0000000000000001e-01"),
                                  (math.nan, "nan"), (-math.inf, "-inf"), (None, ""),
                                  (np.int64(4), "4"), ("x", "x")])
def test_format_value(v, s):
    assert format_value(v) == s


@given(x=finite)
def test_float_round_trip_is_bit_exact(x):
    assert parse_value(format_value(x)) == x
    assert math.copysign(1, parse_value(format_value(x))) == math.copysign(1, x)


def test_empty_table_is_header_only():
    assert render_table([], COLS) == "N,delta,sign,note\n"
    assert render_table([], COLS, "json") == "[]\n"


@given(rows=st.lists(st.fixed_dictionaries({
    "N": st.integers(-10**6, 10**6), "delta": finite, "sign": st.sampled_from([-1, 0, 1]),
    "note": st.sampled_from(["", "ok", "a,b", 'say "hi"'])}), max_size=10))
def test_csv_and_json_round_trip(tmp_path_factory, rows):
    d = tmp_path_factory.mktemp("t")
    back = read_table(emit_table(rows, COLS, d / "t.csv"))
    assert len(back) == len(rows)
    for r, b in zip(rows, back):
        assert b["N"] == r["N"] and b["sign"] == r["sign"] and b["delta"] == r["delta"]
        assert (b["note"] or "") == r["note"]
    assert read_table(emit_table(rows, COLS, d / "t.json", "json")) == rows


def test_non_finite_values_in_both_formats(tmp_path):
    rows = [{"a": math.nan, "b": math.inf, "c": -math.inf}]
    for fmt in ("csv", "json"):
        back = read_table(emit_table(rows, ["a", "b", "c"], tmp_path / f"x.{fmt}", fmt))[0]
        assert math.isnan(back["a"]) and back["b"] == math.inf and back["c"] == -math.inf


def test_json_keys_follow_column_order():
    text = render_table([{"b": 1, "a": 2.5}], ["b", "a"], "json")
    assert list(json.loads(text)[0]) == ["b", "a"]
    assert text.index('"b"') < text.index('"a"')


def test_inhomogeneous_rows_rejected():
    with pytest.raises(ValueError, match="inhomogeneous"):
        render_table([{"N": 1}], COLS)
    with pytest.raises(ValueError):
        render_table([], COLS, "xml")


def test_rendering_is_deterministic():
    rows = [{"N": 8, "delta": 0.3, "sign": -1, "note": ""}]
    assert render_table(rows, COLS) == render_table([dict(reversed(rows[0].items()))], COLS)


def test_atomic_write_leaves_no_temporaries(tmp_path):
    p = atomic_write(tmp_path / "sub" / "f.txt", "one")
    atomic_write(p, "two")
    assert p.read_text() == "two"
    assert os.listdir(p.parent) == ["f.txt"]


def test_failed_write_keeps_previous_file(tmp_path):
    p = atomic_write(tmp_path / "f.txt", "old")
    with pytest.raises(TypeError):
        atomic_write(p, None)
    assert p.read_text() == "old" and os.listdir(tmp_path) == ["f.txt"]
