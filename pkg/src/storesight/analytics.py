"""Retail insights derived from track records: heat maps and visitor counts."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyHeatMap, UnsortedRecords, UsageError
from .io_formats import TrackRecord


@dataclass
class HeatMap:
    grid_cols: int
    grid_rows: int
    frame_width: float
    frame_height: float
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def normalized(self) -> np.ndarray:
        total = self.counts.sum()
        if total == 0:
            raise EmptyHeatMap("cannot normalise an all-zero heat map")
        return self.counts / total

    def merge(self, other: "HeatMap") -> "HeatMap":
        if (self.grid_cols, self.grid_rows, self.frame_width, self.frame_height) != (
            other.grid_cols,
            other.grid_rows,
            other.frame_width,
            other.frame_height,
        ):
            raise ValueError("heat maps have different geometry")
        return HeatMap(self.grid_cols, self.grid_rows, self.frame_width, self.frame_height, self.counts + other.counts)

    def to_csv(self, normalized: bool = False) -> str:
        if normalized:
            rows = self.normalized()
            return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in rows)
        return "".join(",".join(str(int(v)) for v in row) + "\n" for row in self.counts)

    def to_pgm(self) -> str:
        """Plain P2 greyscale, max count mapped to 255."""
        peak = int(self.counts.max()) if self.counts.size else 0
        if peak == 0:
            pixels = np.zeros_like(self.counts, dtype=int)
        else:
            pixels = np.floor(self.counts * 255 / peak + 0.5).astype(int)
        lines = ["P2", f"{self.grid_cols} {self.grid_rows}", "255"]
        lines += [" ".join(str(v) for v in row) for row in pixels]
        return "\n".join(lines) + "\n"


def empty_heatmap(grid: tuple[int, int], frame_size: tuple[float, float]) -> HeatMap:
    cols, rows = grid
    w, h = frame_size
    if cols <= 0 or rows <= 0:
        raise UsageError(f"grid must be positive, got {cols}x{rows}")
    if not (w > 0 and h > 0):
        raise UsageError(f"frame size must be positive, got {w}x{h}")
    return HeatMap(cols, rows, w, h, np.zeros((rows, cols), dtype=np.int64))


def foot_cell(x: float, y: float, hm: HeatMap) -> tuple[int, int]:
    col = math.floor(x / (hm.frame_width / hm.grid_cols))
    row = math.floor(y / (hm.frame_height / hm.grid_rows))
    return min(max(col, 0), hm.grid_cols - 1), min(max(row, 0), hm.grid_rows - 1)


def accumulate_heatmap(
    records: Iterable[TrackRecord], grid: tuple[int, int], frame_size: tuple[float, float]
) -> HeatMap:
    """Bin each record's foot-point into a ``rows x cols`` occupancy grid."""
    hm = empty_heatmap(grid, frame_size)
    for r in records:
        col, row = foot_cell(*r.bbox.foot_point, hm)
        hm.counts[row, col] += 1
    return hm


@dataclass(frozen=True)
class CountingLine:
    p1: tuple[float, float]
    p2: tuple[float, float]
    label: str = "line"

    def __post_init__(self):
        if tuple(self.p1) == tuple(self.p2):
            raise UsageError("counting line endpoints must differ")

    def side(self, x: float, y: float) -> int:
        """Sign of ``(p2 - p1) x (q - p1)``: +1, -1 or 0 when on the line."""
        (x1, y1), (x2, y2) = self.p1, self.p2
        cross = float((x2 - x1) * (y - y1) - (y2 - y1) * (x - x1))
        return (cross > 0) - (cross < 0)


@dataclass(frozen=True)
class CrossingEvent:
    track_id: int
    frame: int
    direction: str  # "positive" (side - to +) or "negative" (+ to -)


@dataclass
class CrossingReport:
    label: str
    positive_crossings: int = 0
    negative_crossings: int = 0
    events: list[CrossingEvent] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "positive": self.positive_crossings,
            "negative": self.negative_crossings,
            "events": [{"track": e.track_id, "frame": e.frame, "direction": e.direction} for e in self.events],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _by_track(records: Iterable[TrackRecord]) -> dict[int, list[TrackRecord]]:
    tracks: dict[int, list[TrackRecord]] = {}
    for r in records:
        seq = tracks.setdefault(r.track_id, [])
        if seq and r.frame <= seq[-1].frame:
            raise UnsortedRecords(f"track {r.track_id}: frame {r.frame} after frame {seq[-1].frame}")
        seq.append(r)
    return tracks


def count_line_crossings(records: Sequence[TrackRecord], line: CountingLine) -> CrossingReport:
    """Count sign changes of each track's foot-point relative to ``line``.

    Consecutive observed frames are compared directly, with no interpolation
    across gaps. Frames exactly on the line keep the previous side.
    """
    report = CrossingReport(line.label)
    for tid, seq in sorted(_by_track(records).items()):
        prev = 0
        for r in seq:
            s = line.side(*r.bbox.foot_point)
            if s == 0:
                continue
            if prev and s != prev:
                direction = "positive" if s > 0 else "negative"
                report.events.append(CrossingEvent(tid, r.frame, direction))
                if s > 0:
                    report.positive_crossings += 1
                else:
                    report.negative_crossings += 1
            prev = s
    return report


def unique_visitors(records: Iterable[TrackRecord]) -> int:
    return len({r.track_id for r in records})
