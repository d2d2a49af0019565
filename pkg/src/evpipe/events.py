"""Event data model: sensor geometry, event streams, time windows and frames.

Streams are stored column-wise (one numpy array per field) and are read-only
after construction, so they can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, List, NamedTuple

import numpy as np

ON = 1
OFF = -1

DEFAULT_WIDTH = 346
DEFAULT_HEIGHT = 260


class ParameterError(ValueError):
    """A caller passed an invalid parameter (bad window, fps, sigma, ...)."""


@dataclass(frozen=True)
class SensorGeometry:
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT

    def __post_init__(self):
        if int(self.width) < 1 or int(self.height) < 1:
            raise ParameterError(f"geometry must be at least 1x1, got {self.width}x{self.height}")
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))

    @property
    def shape(self):
        """Numpy (rows, cols) shape of a frame with this geometry."""
        return (self.height, self.width)

    @property
    def n_pixels(self) -> int:
        return self.width * self.height

    @classmethod
    def parse(cls, text: str) -> "SensorGeometry":
        """Parse ``"WxH"`` (e.g. ``"346x260"``)."""
        try:
            w, h = text.lower().split("x")
            return cls(int(w), int(h))
        except (ValueError, AttributeError) as exc:
            raise ParameterError(f"invalid geometry {text!r}, expected WxH") from exc

    def __str__(self):
        return f"{self.width}x{self.height}"


class Event(NamedTuple):
    t: int
    x: int
    y: int
    p: int


@dataclass(frozen=True)
class TimeWindow:
    """Half-open interval ``[t_start, t_end)`` in microseconds."""

    t_start: int
    t_end: int

    def __post_init__(self):
        if self.t_start > self.t_end:
            raise ParameterError(f"invalid window: t_start {self.t_start} > t_end {self.t_end}")

    @property
    def length(self) -> int:
        return self.t_end - self.t_start

    def shifted(self, delta: int) -> "TimeWindow":
        return TimeWindow(self.t_start + delta, self.t_end + delta)


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True).reshape(-1)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class EventStream:
    """Time-ordered events plus the geometry of the sensor that produced them.

    Construction does not check the ordering/bounds invariants; use
    :func:`validate_stream` for that (the parsers always do).
    """

    geometry: SensorGeometry
    t: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    x: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int32))
    y: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int32))
    p: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int8))

    def __post_init__(self):
        object.__setattr__(self, "t", _frozen(self.t, np.int64))
        object.__setattr__(self, "x", _frozen(self.x, np.int32))
        object.__setattr__(self, "y", _frozen(self.y, np.int32))
        object.__setattr__(self, "p", _frozen(self.p, np.int8))
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.p) == n):
            raise ValueError("event columns must have equal length")

    @classmethod
    def from_events(cls, events: Iterable, geometry: SensorGeometry) -> "EventStream":
        rows = [tuple(e) for e in events]
        if not rows:
            return cls(geometry)
        t, x, y, p = zip(*rows)
        return cls(geometry, t, x, y, p)

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self) -> Iterator[Event]:
        for row in zip(self.t.tolist(), self.x.tolist(), self.y.tolist(), self.p.tolist()):
            yield Event(*row)

    def __getitem__(self, idx) -> Event:
        return Event(int(self.t[idx]), int(self.x[idx]), int(self.y[idx]), int(self.p[idx]))

    def __eq__(self, other):
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.geometry == other.geometry
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.p, other.p)
        )

    def __repr__(self):
        return f"EventStream({self.geometry}, n={len(self)})"

    def take(self, index) -> "EventStream":
        """New stream made of the events selected by ``index`` (slice, mask or int array)."""
        return EventStream(self.geometry, self.t[index], self.x[index], self.y[index], self.p[index])

    def with_polarity_flipped(self) -> "EventStream":
        return EventStream(self.geometry, self.t, self.x, self.y, -self.p)

    def shifted(self, delta: int) -> "EventStream":
        return EventStream(self.geometry, self.t + delta, self.x, self.y, self.p)

    def time_range(self) -> TimeWindow:
        """Smallest half-open window holding every event (``[0, 0)`` when empty)."""
        if len(self) == 0:
            return TimeWindow(0, 0)
        return TimeWindow(int(self.t[0]), int(self.t[-1]) + 1)


def new_frame(geometry: SensorGeometry) -> np.ndarray:
    """All-zero 8-bit frame, shape ``(height, width)``, row-major."""
    return np.zeros(geometry.shape, dtype=np.uint8)


class Violation(NamedTuple):
    index: int
    kind: str  # "out-of-order" | "out-of-bounds" | "bad-polarity"


@dataclass(frozen=True)
class ValidationReport:
    violations: List[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate_stream(stream: EventStream) -> ValidationReport:
    """Report every ordering, bounds and polarity violation, sorted by index."""
    g = stream.geometry
    found = []
    if len(stream) > 1:
        for i in np.flatnonzero(np.diff(stream.t) < 0) + 1:
            found.append(Violation(int(i), "out-of-order"))
    oob = (stream.x < 0) | (stream.x >= g.width) | (stream.y < 0) | (stream.y >= g.height)
    for i in np.flatnonzero(oob | (stream.t < 0)):
        found.append(Violation(int(i), "out-of-bounds"))
    for i in np.flatnonzero((stream.p != ON) & (stream.p != OFF)):
        found.append(Violation(int(i), "bad-polarity"))
    found.sort(key=lambda v: (v.index, v.kind))
    return ValidationReport(found)


def slice_window(stream: EventStream, window: TimeWindow) -> EventStream:
    """Events with ``t_start <= t < t_end``, order preserved (binary search)."""
    if not isinstance(window, TimeWindow):
        window = TimeWindow(*window)
    lo = np.searchsorted(stream.t, window.t_start, side="left")
    hi = np.searchsorted(stream.t, window.t_end, side="left")
    return stream.take(slice(lo, max(lo, hi)))
