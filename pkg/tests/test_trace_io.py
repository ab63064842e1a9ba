import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinslosh import Event, EventKind, Trace, ValidationError, read_trace_csv, write_trace_csv
from spinslosh.trace import COLUMNS, HEADER


def synthetic(n, rng):
    cols = {c: rng.standard_normal(n) * 10.0 ** rng.integers(-12, 6) for c in COLUMNS}
    cols["t"] = np.cumsum(rng.uniform(1e-3, 1.0, n))
    cols["mode"] = rng.integers(0, 2, n).astype(float)
    return Trace(cols, [Event(EventKind.COLLISION, 0.5), Event(EventKind.SEPARATION, 1.0 / 3.0)], {"kind": "x"})


def test_round_trip_is_bitwise(tmp_path, rng):
    tr = synthetic(10, rng)
    p = tmp_path / "a.csv"
    write_trace_csv(tr, p)
    back = read_trace_csv(p)
    assert list(back.columns) == list(COLUMNS)
    for c in COLUMNS:
        assert np.array_equal(back[c], tr[c])
    assert back.events == tr.events
    assert back.meta == tr.meta


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=20))
def test_round_trip_any_finite_value(tmp_path_factory, values):
    n = len(values)
    tr = Trace({"t": np.arange(n, dtype=float), "Fx": np.array(values)})
    p = tmp_path_factory.mktemp("rt") / "t.csv"
    write_trace_csv(tr, p)
    assert np.array_equal(read_trace_csv(p)["Fx"], tr["Fx"])


def test_layout(tmp_path, rng):
    p = tmp_path / "a.csv"
    write_trace_csv(synthetic(3, rng), p)
    raw = p.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().split("\n")
    assert lines[0] == HEADER
    header = next(line for line in lines if not line.startswith("#"))
    assert header == ",".join(COLUMNS)
    row = lines[lines.index(header) + 1].split(",")
    assert len(row) == len(COLUMNS)
    assert all("e" in f for f in row)


def test_empty_trace(tmp_path):
    tr = Trace({c: np.zeros(0) for c in COLUMNS})
    p = tmp_path / "e.csv"
    write_trace_csv(tr, p)
    assert [line for line in p.read_text().splitlines() if not line.startswith("#")] == [",".join(COLUMNS)]
    back = read_trace_csv(p)
    assert len(back) == 0
    assert set(back.columns) == set(COLUMNS)


def test_partial_columns(tmp_path):
    p = tmp_path / "cfd.csv"
    p.write_text("t,Fx,Fy,Fz\n0,1,2,3\n0.5,1.5,2.5,3.5\n")
    tr = read_trace_csv(p)
    assert len(tr) == 2
    assert "Tz" not in tr
    assert tr.F.shape == (2, 3)
    with pytest.raises(AttributeError):
        tr.T


@pytest.mark.parametrize("body, line", [
    ("t,Fx\n0,1\n1,x\n", 3),
    ("t,Fx\n0,1\n1,2,3\n", 3),
    ("# c\nt,Fx\n0,1\n1,nan\n", 4),
    ("t,Fx\n0,1\n2,1\n1,1\n", 4),
])
def test_malformed_rows_name_the_line(tmp_path, body, line):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(ValidationError, match=rf"bad.csv:{line}:"):
        read_trace_csv(p)


def test_missing_time_column(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("Fx,Fy\n1,2\n")
    with pytest.raises(ValidationError):
        read_trace_csv(p)


def test_trace_rejects_ragged_and_unordered():
    with pytest.raises(ValidationError):
        Trace({"t": [0.0, 1.0], "Fx": [1.0]})
    with pytest.raises(ValidationError):
        Trace({"t": [0.0, 0.0]})


def test_simulated_trace_round_trip(tmp_path, closed_trace):
    p = tmp_path / "c.csv"
    write_trace_csv(closed_trace, p)
    back = read_trace_csv(p)
    for c in COLUMNS:
        assert np.array_equal(back[c], closed_trace[c])
    assert back.events == closed_trace.events
    assert back.count("collision") == 1
