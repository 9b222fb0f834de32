"""Readers and writers for MOT-style box files, sales CSVs and CMC transforms.

All parsers accept either a string or a text stream, tolerate LF and CRLF line
endings, and skip blank lines. Every other line is either parsed or raises a
:class:`~storesight.errors.DataError` carrying its 1-based line number.
"""

from __future__ import annotations

import datetime as dt
import io
from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO, Union

import numpy as np

from .errors import (
    BadDate,
    DataError,
    DuplicateKey,
    MalformedLine,
    NonPositiveBox,
    NonPositiveId,
    ScoreOutOfRange,
    SingularTransform,
    UnsortedInput,
)
from .geometry import PERSON_CLASS, BBox, Detection
from .kalman import AffineTransform

TextSource = Union[str, TextIO]

SALES_HEADER = ("date", "store", "item", "sales")


@dataclass(frozen=True)
class GroundTruthEntry:
    frame: int
    track_id: int
    bbox: BBox
    active: bool = True
    class_id: int = PERSON_CLASS
    visibility: float = 1.0


@dataclass(frozen=True)
class TrackRecord:
    frame: int
    track_id: int
    bbox: BBox
    score: float


@dataclass(frozen=True)
class SalesRecord:
    date: dt.date
    store: int
    item: int
    sales: int


def _lines(src: TextSource) -> Iterator[tuple[int, str]]:
    text = src if isinstance(src, str) else src.read()
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if line:
            yield n, line


def _int_field(raw: str) -> int:
    value = float(raw)
    if not value.is_integer():
        raise ValueError(f"expected an integer, got {raw!r}")
    return int(value)


def _box_fields(fields: list[str], line_no: int, line: str) -> BBox:
    try:
        left, top, width, height = (float(v) for v in fields[2:6])
    except ValueError:
        raise MalformedLine("non-numeric box field", line_no, line) from None
    if not all(np.isfinite((left, top, width, height))):
        raise MalformedLine("non-finite box field", line_no, line)
    if width <= 0 or height <= 0:
        raise NonPositiveBox("box width and height must be positive", line_no, line)
    return BBox(left, top, width, height)


def _frame_and_id(fields: list[str], line_no: int, line: str) -> tuple[int, int]:
    try:
        frame = _int_field(fields[0])
        ident = _int_field(fields[1])
    except ValueError:
        raise MalformedLine("frame and id must be integers", line_no, line) from None
    if frame < 1:
        raise MalformedLine("frame index must be >= 1", line_no, line)
    return frame, ident


def _split(line: str, line_no: int, min_fields: int) -> list[str]:
    fields = [f.strip() for f in line.split(",")]
    if len(fields) < min_fields:
        raise MalformedLine(f"expected at least {min_fields} fields, got {len(fields)}", line_no, line)
    return fields


def parse_detections(src: TextSource) -> list[Detection]:
    """Parse ``frame,id,left,top,width,height,score[,...]`` detector output.

    The id column is ignored (detectors write -1).
    """
    out = []
    for line_no, line in _lines(src):
        fields = _split(line, line_no, 7)
        frame, _ = _frame_and_id(fields, line_no, line)
        bbox = _box_fields(fields, line_no, line)
        try:
            score = float(fields[6])
        except ValueError:
            raise MalformedLine("non-numeric score", line_no, line) from None
        if not 0.0 <= score <= 1.0:
            raise ScoreOutOfRange(f"score {score} outside [0, 1]", line_no, line)
        out.append(Detection(frame, bbox, score))
    return out


def parse_ground_truth(src: TextSource) -> list[GroundTruthEntry]:
    """Parse ``frame,id,left,top,width,height,active[,class,visibility]``.

    Inactive rows (``active == 0``) are kept and flagged; evaluation skips them.
    """
    out = []
    for line_no, line in _lines(src):
        fields = _split(line, line_no, 7)
        frame, ident = _frame_and_id(fields, line_no, line)
        if ident < 1:
            raise NonPositiveId(f"ground-truth id must be >= 1, got {ident}", line_no, line)
        bbox = _box_fields(fields, line_no, line)
        try:
            active = _int_field(fields[6]) != 0
            class_id = _int_field(fields[7]) if len(fields) > 7 else PERSON_CLASS
            visibility = float(fields[8]) if len(fields) > 8 else 1.0
        except ValueError:
            raise MalformedLine("bad active/class/visibility field", line_no, line) from None
        out.append(GroundTruthEntry(frame, ident, bbox, active, class_id, visibility))
    return out


def parse_tracks(src: TextSource) -> list[TrackRecord]:
    """Parse tracker output written by :func:`write_tracks`."""
    out = []
    seen = set()
    for line_no, line in _lines(src):
        fields = _split(line, line_no, 7)
        frame, ident = _frame_and_id(fields, line_no, line)
        if ident < 1:
            raise NonPositiveId(f"track id must be >= 1, got {ident}", line_no, line)
        if (frame, ident) in seen:
            raise DuplicateKey(f"duplicate (frame, id) = ({frame}, {ident})", line_no, line)
        seen.add((frame, ident))
        bbox = _box_fields(fields, line_no, line)
        try:
            score = float(fields[6])
        except ValueError:
            raise MalformedLine("non-numeric score", line_no, line) from None
        out.append(TrackRecord(frame, ident, bbox, score))
    return out


def _fmt_real(x: float) -> str:
    # shortest text that parses back to the same double; integral values print bare
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def write_tracks(records: Iterable[TrackRecord]) -> str:
    """Serialise track records, one MOT line each. Records must be sorted by (frame, id)."""
    lines = []
    prev = None
    for r in records:
        key = (r.frame, r.track_id)
        if prev is not None and key <= prev:
            raise UnsortedInput(f"records not strictly sorted by (frame, id) at {key} after {prev}")
        prev = key
        b = r.bbox
        lines.append(
            f"{r.frame},{r.track_id},{_fmt_real(b.left)},{_fmt_real(b.top)},"
            f"{_fmt_real(b.width)},{_fmt_real(b.height)},{r.score:.6f},-1,-1,-1\n"
        )
    return "".join(lines)


def write_ground_truth(entries: Iterable[GroundTruthEntry]) -> str:
    lines = []
    for e in entries:
        b = e.bbox
        lines.append(
            f"{e.frame},{e.track_id},{_fmt_real(b.left)},{_fmt_real(b.top)},"
            f"{_fmt_real(b.width)},{_fmt_real(b.height)},{int(e.active)},{e.class_id},{_fmt_real(e.visibility)}\n"
        )
    return "".join(lines)


def write_detections(dets: Iterable[Detection]) -> str:
    lines = []
    for d in dets:
        b = d.bbox
        lines.append(
            f"{d.frame},-1,{_fmt_real(b.left)},{_fmt_real(b.top)},"
            f"{_fmt_real(b.width)},{_fmt_real(b.height)},{_fmt_real(d.score)},-1,-1,-1\n"
        )
    return "".join(lines)


def parse_date(raw: str) -> dt.date:
    """Accept ``YYYY-MM-DD`` or month-first ``M/D/YYYY``."""
    fmt = "%m/%d/%Y" if "/" in raw else "%Y-%m-%d"
    return dt.datetime.strptime(raw, fmt).date()


def _header(src: TextSource, expected: tuple[str, ...]) -> tuple[list[str], Iterator[tuple[int, str]]]:
    rows = _lines(src)
    try:
        line_no, line = next(rows)
    except StopIteration:
        raise MalformedLine("missing header row") from None
    cols = [c.strip().lower() for c in line.split(",")]
    if tuple(cols[: len(expected)]) != expected:
        raise MalformedLine(f"header must start with {','.join(expected)}", line_no, line)
    return cols, rows


def _key_fields(fields: list[str], line_no: int, line: str) -> tuple[dt.date, int, int]:
    try:
        date = parse_date(fields[0])
    except ValueError:
        raise BadDate(f"invalid date {fields[0]!r}", line_no, line) from None
    try:
        store = _int_field(fields[1])
        item = _int_field(fields[2])
    except ValueError:
        raise MalformedLine("store and item must be integers", line_no, line) from None
    return date, store, item


def parse_sales_csv(src: TextSource) -> list[SalesRecord]:
    """Parse a ``date,store,item,sales`` CSV. Extra trailing columns are ignored."""
    cols, rows = _header(src, SALES_HEADER)
    out = []
    seen = set()
    for line_no, line in rows:
        fields = _split(line, line_no, 4)
        date, store, item = _key_fields(fields, line_no, line)
        try:
            sales = _int_field(fields[3])
        except ValueError:
            raise MalformedLine("sales must be an integer", line_no, line) from None
        if sales < 0:
            raise MalformedLine("sales must be non-negative", line_no, line)
        key = (date, store, item)
        if key in seen:
            raise DuplicateKey(f"duplicate (date, store, item) {key}", line_no, line)
        seen.add(key)
        out.append(SalesRecord(date, store, item, sales))
    return out


def write_sales_csv(records: Iterable[SalesRecord]) -> str:
    buf = io.StringIO()
    buf.write(",".join(SALES_HEADER) + "\n")
    for r in records:
        buf.write(f"{r.date.isoformat()},{r.store},{r.item},{r.sales}\n")
    return buf.getvalue()


def parse_value_csv(src: TextSource) -> dict[tuple[dt.date, int, int], float]:
    """Read ``date,store,item,<value>`` where value is ``sales`` or ``predicted_sales``."""
    rows = _lines(src)
    try:
        line_no, line = next(rows)
    except StopIteration:
        raise MalformedLine("missing header row") from None
    cols = [c.strip().lower() for c in line.split(",")]
    if tuple(cols[:3]) != ("date", "store", "item") or len(cols) < 4 or cols[3] not in ("sales", "predicted_sales"):
        raise MalformedLine("header must be date,store,item,sales|predicted_sales", line_no, line)
    out = {}
    for line_no, line in rows:
        fields = _split(line, line_no, 4)
        key = _key_fields(fields, line_no, line)
        try:
            value = float(fields[3])
        except ValueError:
            raise MalformedLine("non-numeric value", line_no, line) from None
        if key in out:
            raise DuplicateKey(f"duplicate (date, store, item) {key}", line_no, line)
        out[key] = value
    return out


def write_forecast_csv(rows: Iterable[tuple[dt.date, int, int, float]]) -> str:
    buf = io.StringIO()
    buf.write("date,store,item,predicted_sales\n")
    for date, store, item, value in rows:
        buf.write(f"{date.isoformat()},{store},{item},{value:.6f}\n")
    return buf.getvalue()


def parse_cmc(src: TextSource) -> dict[int, AffineTransform]:
    """Parse ``frame,a11,a12,a21,a22,tx,ty`` rows. Frames absent from the file mean identity."""
    out = {}
    for line_no, line in _lines(src):
        if line_no == 1 and line.lower().startswith("frame"):
            continue
        fields = _split(line, line_no, 7)
        try:
            frame = _int_field(fields[0])
            a11, a12, a21, a22, tx, ty = (float(v) for v in fields[1:7])
        except ValueError:
            raise MalformedLine("non-numeric CMC field", line_no, line) from None
        if frame in out:
            raise DuplicateKey(f"duplicate CMC frame {frame}", line_no, line)
        try:
            out[frame] = AffineTransform(np.array([[a11, a12], [a21, a22]]), np.array([tx, ty]))
        except SingularTransform as exc:
            raise SingularTransform(str(exc), line_no, line) from None
    return out


def write_cmc(transforms: dict[int, AffineTransform]) -> str:
    lines = ["frame,a11,a12,a21,a22,tx,ty\n"]
    for frame in sorted(transforms):
        t = transforms[frame]
        vals = [*t.linear.ravel(), *t.translation]
        lines.append(f"{frame}," + ",".join(_fmt_real(v) for v in vals) + "\n")
    return "".join(lines)


def read_text(path) -> str:
    with open(path, encoding="utf-8", newline="") as fh:
        return fh.read()


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


__all__ = [
    "DataError",
    "GroundTruthEntry",
    "SalesRecord",
    "TrackRecord",
    "parse_cmc",
    "parse_date",
    "parse_detections",
    "parse_ground_truth",
    "parse_sales_csv",
    "parse_tracks",
    "parse_value_csv",
    "write_cmc",
    "write_detections",
    "write_forecast_csv",
    "write_ground_truth",
    "write_sales_csv",
    "write_tracks",
]
