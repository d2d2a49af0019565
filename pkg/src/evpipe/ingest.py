"""Event file formats, the combined 12-class taxonomy, and dataset manifests.

Text format: UTF-8 lines ``t x y p`` (``p`` 1 = ON, 0 = OFF), ``#`` comments.
Binary format: ``b"EVT1"`` then packed 13-byte little-endian records
(u64 t, u16 x, u16 y, u8 p).
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, NamedTuple, Union

import numpy as np

from .events import EventStream, SensorGeometry, validate_stream

MAGIC = b"EVT1"
RECORD_DTYPE = np.dtype([("t", "<u8"), ("x", "<u2"), ("y", "<u2"), ("p", "u1")])
assert RECORD_DTYPE.itemsize == 13

SPLITS = ("train", "validation", "test")


class EventFormatError(ValueError):
    """Malformed event data. ``line`` (text) or ``offset`` (binary) locate it."""

    def __init__(self, message, *, line=None, offset=None, kind="malformed", source=None):
        self.line = line
        self.offset = offset
        self.kind = kind
        self.source = source
        super().__init__(message)

    def __str__(self):
        where = self.source or "<input>"
        if self.line is not None:
            where = f"{where}:{self.line}"
        elif self.offset is not None:
            where = f"{where}: byte offset {self.offset}"
        return f"{where}: {self.args[0]}"


class ManifestError(ValueError):
    pass


class ClassLabel(NamedTuple):
    id: int
    name: str


# Union of the fall-detection and action-recognition class lists; the two
# shared classes (picking-up, sit-down) appear once. Ids follow alphabetical order.
CLASS_NAMES = (
    "arm-crossing",
    "falling-down",
    "getting-up",
    "jumping",
    "kicking",
    "picking-up",
    "sit-down",
    "throwing",
    "turning-around",
    "tying-shoes",
    "walking",
    "waving",
)
CLASSES = tuple(ClassLabel(i, n) for i, n in enumerate(CLASS_NAMES))
NUM_CLASSES = len(CLASSES)
_BY_NAME = {c.name: c for c in CLASSES}


def label_from_name(name: str) -> ClassLabel:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise ManifestError(f"unknown class {name!r}") from None


def label_from_id(class_id: int) -> ClassLabel:
    if not 0 <= int(class_id) < NUM_CLASSES:
        raise ValueError(f"label out of range: {class_id}")
    return CLASSES[int(class_id)]


# -- event streams -----------------------------------------------------------


def _check(stream: EventStream, locate, source) -> EventStream:
    report = validate_stream(stream)
    if report.ok:
        return stream
    first = report.violations[0]
    kind = "unsorted" if first.kind == "out-of-order" else first.kind
    msg = {
        "unsorted": "timestamps not monotone (unsorted)",
        "out-of-bounds": f"coordinate out of bounds for geometry {stream.geometry}",
        "bad-polarity": "polarity must be 0 or 1",
    }[kind]
    raise EventFormatError(msg, kind=kind, source=source, **locate(first.index))


def _stable_sort(stream: EventStream):
    order = np.argsort(stream.t, kind="stable")
    return stream.take(order), order


def parse_text_events(data: Union[bytes, str], geometry: SensorGeometry, *, sort: bool = False,
                      source: str = None) -> EventStream:
    """Parse the text event format into a validated stream.

    With ``sort=True`` out-of-order input is stably re-sorted instead of rejected.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EventFormatError(f"not UTF-8: {exc}", offset=exc.start, source=source) from None
    rows = []
    line_nos = []
    for no, line in enumerate(data.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) != 4 or not all(s.isascii() and s.isdigit() for s in parts):
            raise EventFormatError(f"malformed line {line!r}, expected 't x y p'", line=no, source=source)
        t, x, y, p = (int(s) for s in parts)
        if p not in (0, 1):
            raise EventFormatError(f"polarity must be 0 or 1, got {p}", line=no, kind="bad-polarity",
                                   source=source)
        if t >= 2**63:
            raise EventFormatError(f"timestamp {t} too large", line=no, source=source)
        if x >= geometry.width or y >= geometry.height:
            raise EventFormatError(f"coordinate out of bounds for geometry {geometry}", line=no,
                                   kind="out-of-bounds", source=source)
        rows.append((t, x, y, p))
        line_nos.append(no)

    if rows:
        arr = np.array(rows, dtype=np.int64)
        stream = EventStream(geometry, arr[:, 0], arr[:, 1], arr[:, 2], 2 * arr[:, 3] - 1)
    else:
        stream = EventStream(geometry)
    order = np.arange(len(stream))
    if sort:
        stream, order = _stable_sort(stream)
    return _check(stream, lambda i: {"line": line_nos[order[i]]}, source)


def write_text_events(stream: EventStream) -> bytes:
    """Canonical text: single spaces, ``\\n`` terminated, no comments."""
    if len(stream) == 0:
        return b""
    cols = np.stack([stream.t, stream.x, stream.y, (stream.p > 0).astype(np.int64)], axis=1)
    lines = [f"{t} {x} {y} {p}\n" for t, x, y, p in cols.tolist()]
    return "".join(lines).encode("utf-8")


def parse_binary_events(data: bytes, geometry: SensorGeometry, *, sort: bool = False,
                        source: str = None) -> EventStream:
    if data[:4] != MAGIC:
        raise EventFormatError(f"bad magic {bytes(data[:4])!r}, expected {MAGIC!r}", offset=0,
                               kind="bad-magic", source=source)
    body = memoryview(data)[4:]
    n, rem = divmod(len(body), RECORD_DTYPE.itemsize)
    if rem:
        raise EventFormatError(f"truncated record ({rem} trailing bytes)",
                               offset=4 + n * RECORD_DTYPE.itemsize, kind="truncated", source=source)
    rec = np.frombuffer(body, dtype=RECORD_DTYPE, count=n)
    if n and rec["t"].max() >= 2**63:
        i = int(np.argmax(rec["t"] >= 2**63))
        raise EventFormatError("timestamp too large", offset=4 + 13 * i, source=source)
    bad_p = np.flatnonzero(rec["p"] > 1)
    if len(bad_p):
        raise EventFormatError("polarity must be 0 or 1", offset=4 + 13 * int(bad_p[0]),
                               kind="bad-polarity", source=source)
    stream = EventStream(geometry, rec["t"].astype(np.int64), rec["x"], rec["y"],
                         2 * rec["p"].astype(np.int8) - 1)
    order = np.arange(n)
    if sort:
        stream, order = _stable_sort(stream)
    return _check(stream, lambda i: {"offset": 4 + 13 * int(order[i])}, source)


def write_binary_events(stream: EventStream) -> bytes:
    g = stream.geometry
    if g.width > 65536 or g.height > 65536:
        raise ValueError(f"geometry {g} does not fit the 16-bit binary coordinates")
    rec = np.empty(len(stream), dtype=RECORD_DTYPE)
    rec["t"] = stream.t
    rec["x"] = stream.x
    rec["y"] = stream.y
    rec["p"] = stream.p > 0
    return MAGIC + rec.tobytes()


def sniff_format(data: bytes) -> str:
    return "binary" if data[:4] == MAGIC else "text"


def parse_events(data: bytes, geometry: SensorGeometry, fmt: str = None, **kw) -> EventStream:
    fmt = fmt or sniff_format(data)
    if fmt == "binary":
        return parse_binary_events(data, geometry, **kw)
    if fmt == "text":
        return parse_text_events(data, geometry, **kw)
    raise ValueError(f"unknown event format {fmt!r}")


def write_events(stream: EventStream, fmt: str) -> bytes:
    if fmt == "binary":
        return write_binary_events(stream)
    if fmt == "text":
        return write_text_events(stream)
    raise ValueError(f"unknown event format {fmt!r}")


def read_events(path, geometry: SensorGeometry, fmt: str = None, **kw) -> EventStream:
    path = Path(path)
    return parse_events(path.read_bytes(), geometry, fmt, source=str(path), **kw)


# -- manifests ---------------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: ClassLabel
    split: str
    duration_us: int

    def to_json(self) -> dict:
        return {"path": self.path, "class": self.label.name, "split": self.split,
                "duration_us": self.duration_us}


def load_manifest(data: Union[bytes, str]) -> List[ManifestEntry]:
    """Parse a JSON manifest, rejecting unknown classes, bad splits and duplicate paths."""
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}") from None
    if not isinstance(raw, list):
        raise ManifestError("manifest must be a JSON array")
    entries = []
    seen = set()
    for i, obj in enumerate(raw):
        if not isinstance(obj, dict):
            raise ManifestError(f"entry {i}: expected an object")
        missing = [k for k in ("path", "class", "split", "duration_us") if k not in obj]
        if missing:
            raise ManifestError(f"entry {i}: missing field(s) {', '.join(missing)}")
        path = obj["path"]
        if not isinstance(path, str) or not path:
            raise ManifestError(f"entry {i}: path must be a non-empty string")
        if obj["split"] not in SPLITS:
            raise ManifestError(f"entry {i}: split must be one of {SPLITS}, got {obj['split']!r}")
        dur = obj["duration_us"]
        if isinstance(dur, bool) or not isinstance(dur, int) or dur < 0:
            raise ManifestError(f"entry {i}: duration_us must be a non-negative integer")
        if path in seen:
            raise ManifestError(f"duplicate path {path!r}")
        seen.add(path)
        try:
            label = label_from_name(obj["class"])
        except ManifestError as exc:
            raise ManifestError(f"entry {i}: {exc}") from None
        entries.append(ManifestEntry(path, label, obj["split"], dur))
    return entries


def dump_manifest(entries) -> str:
    return json.dumps([e.to_json() for e in entries], indent=2) + "\n"


def class_histogram(entries) -> Dict[str, int]:
    counts = Counter(e.label.name for e in entries)
    return {name: counts.get(name, 0) for name in CLASS_NAMES}
