import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evpipe.events import (Event, EventStream, ParameterError, SensorGeometry, TimeWindow,
                           slice_window, validate_stream)

from conftest import random_stream

G = SensorGeometry(346, 260)


def stream_of(ts, geometry=G):
    return EventStream.from_events([(t, 0, 0, 1) for t in ts], geometry)


def test_default_geometry_is_davis346():
    assert SensorGeometry() == SensorGeometry(346, 260)


@pytest.mark.parametrize("w,h", [(0, 1), (1, 0), (-3, 5)])
def test_geometry_rejects_empty(w, h):
    with pytest.raises(ParameterError):
        SensorGeometry(w, h)


def test_geometry_parse():
    assert SensorGeometry.parse("64x48") == SensorGeometry(64, 48)
    with pytest.raises(ParameterError):
        SensorGeometry.parse("0x0")
    with pytest.raises(ParameterError):
        SensorGeometry.parse("big")


def test_streams_are_read_only():
    s = stream_of([1, 2])
    with pytest.raises(ValueError):
        s.t[0] = 5


def test_iteration_yields_events():
    s = EventStream.from_events([(10, 5, 7, 1), (11, 6, 8, -1)], G)
    assert list(s) == [Event(10, 5, 7, 1), Event(11, 6, 8, -1)]
    assert s[1] == Event(11, 6, 8, -1)


class TestValidate:
    def test_empty_ok(self):
        assert validate_stream(EventStream(G)).ok

    def test_out_of_order(self):
        report = validate_stream(stream_of([5, 3]))
        assert not report.ok
        assert [(v.index, v.kind) for v in report.violations] == [(1, "out-of-order")]

    def test_out_of_bounds_is_exclusive(self):
        s = EventStream.from_events([(0, 346, 0, 1)], G)
        assert [(v.index, v.kind) for v in validate_stream(s).violations] == [(0, "out-of-bounds")]
        assert validate_stream(EventStream.from_events([(0, 345, 259, 1)], G)).ok

    def test_bad_polarity(self):
        s = EventStream.from_events([(0, 1, 1, 0)], G)
        assert validate_stream(s).violations[0].kind == "bad-polarity"

    def test_ties_allowed(self):
        assert validate_stream(stream_of([4, 4, 4])).ok

    def test_reports_every_violation(self):
        s = EventStream.from_events([(5, 0, 0, 1), (3, 400, 0, 1), (1, 0, 0, 2)], G)
        kinds = [(v.index, v.kind) for v in validate_stream(s).violations]
        assert kinds == [(1, "out-of-bounds"), (1, "out-of-order"), (2, "bad-polarity"), (2, "out-of-order")]


class TestSliceWindow:
    def test_half_open(self):
        out = slice_window(stream_of([0, 10, 20]), TimeWindow(0, 20))
        assert out.t.tolist() == [0, 10]

    def test_empty_interval(self):
        assert len(slice_window(stream_of([0, 5, 10]), TimeWindow(5, 5))) == 0

    def test_geometry_copied(self):
        g = SensorGeometry(8, 8)
        assert slice_window(stream_of([1], g), TimeWindow(0, 5)).geometry == g

    def test_invalid_window(self):
        with pytest.raises(ParameterError):
            TimeWindow(5, 4)
        with pytest.raises(ParameterError):
            slice_window(stream_of([1]), (5, 4))

    def test_against_linear_scan(self):
        s = stream_of(range(1, 1001))
        out = slice_window(s, TimeWindow(100, 200))
        expected = [t for t in s.t.tolist() if 100 <= t < 200]
        assert len(expected) == 100
        assert out.t.tolist() == expected == list(range(100, 200))

    def test_ties_preserve_order(self):
        s = EventStream.from_events([(1, 0, 0, 1), (2, 1, 0, 1), (2, 2, 0, -1), (2, 3, 0, 1), (3, 4, 0, 1)], G)
        out = slice_window(s, TimeWindow(2, 3))
        assert out.x.tolist() == [1, 2, 3]


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(0, 300),
       a=st.integers(-10, 1100), b=st.integers(-10, 1100))
def test_slice_matches_filter_and_is_idempotent(seed, n, a, b):
    lo, hi = min(a, b), max(a, b)
    s = random_stream(np.random.default_rng(seed), 8, 8, n)
    w = TimeWindow(lo, hi)
    out = slice_window(s, w)
    mask = (s.t >= lo) & (s.t < hi)
    assert out == s.take(mask)
    assert slice_window(out, w) == out


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), cuts=st.lists(st.integers(0, 1000), max_size=8))
def test_partition_slices_concatenate_to_original(seed, cuts):
    s = random_stream(np.random.default_rng(seed), 5, 5, 200)
    t_min, t_max = int(s.t.min()), int(s.t.max())
    edges = sorted({t_min, t_max + 1, *[c for c in cuts if t_min < c <= t_max]})
    parts = [slice_window(s, TimeWindow(a, b)) for a, b in zip(edges, edges[1:])]
    assert sum(len(p) for p in parts) == len(s)
    assert np.concatenate([p.t for p in parts]).tolist() == s.t.tolist()
    assert np.concatenate([p.x for p in parts]).tolist() == s.x.tolist()
