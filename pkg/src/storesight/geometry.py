"""Bounding boxes, detections and overlap measures.

Boxes are continuous regions in pixel coordinates stored as
``(left, top, width, height)``. Area is ``width * height``; there is no
``+1`` pixel convention, so IoU is invariant to scaling the coordinate frame.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NonPositiveBox, ScoreOutOfRange

PERSON_CLASS = 1


@dataclass(frozen=True)
class BBox:
    left: float
    top: float
    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise NonPositiveBox(f"box must have positive size, got w={self.width} h={self.height}")

    @classmethod
    def from_cxcywh(cls, cx, cy, w, h) -> "BBox":
        return cls(cx - w / 2.0, cy - h / 2.0, w, h)

    @classmethod
    def from_xyxy(cls, x1, y1, x2, y2) -> "BBox":
        return cls(x1, y1, x2 - x1, y2 - y1)

    def to_cxcywh(self) -> tuple[float, float, float, float]:
        return (self.left + self.width / 2.0, self.top + self.height / 2.0, self.width, self.height)

    def to_xyxy(self) -> tuple[float, float, float, float]:
        return (self.left, self.top, self.right, self.bottom)

    @property
    def right(self) -> float:
        return self.left + self.width

    @property
    def bottom(self) -> float:
        return self.top + self.height

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def foot_point(self) -> tuple[float, float]:
        """Bottom-centre of the box, used as the floor position of a person."""
        return (self.left + self.width / 2.0, self.top + self.height)

    def translated(self, dx: float, dy: float) -> "BBox":
        return BBox(self.left + dx, self.top + dy, self.width, self.height)


def to_cxcywh(b: BBox) -> tuple[float, float, float, float]:
    return b.to_cxcywh()


def from_cxcywh(z: Sequence[float]) -> BBox:
    cx, cy, w, h = z
    return BBox.from_cxcywh(float(cx), float(cy), float(w), float(h))


@dataclass(frozen=True)
class Detection:
    frame: int
    bbox: BBox
    score: float
    class_id: int = PERSON_CLASS

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ScoreOutOfRange(f"score {self.score} outside [0, 1]")
        if self.frame < 1:
            raise ValueError(f"frame index must be >= 1, got {self.frame}")


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes; 0.0 when they do not overlap."""
    ax1, ay1, ax2, ay2 = a.left, a.top, a.left + a.width, a.top + a.height
    bx1, by1, bx2, by2 = b.left, b.top, b.left + b.width, b.top + b.height
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    # areas from the same corners as the intersection, so iou(a, a) == 1 exactly
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    return min(1.0, inter / union)


def _as_array(boxes: Sequence[BBox]) -> np.ndarray:
    if len(boxes) == 0:
        return np.zeros((0, 4))
    return np.array([(b.left, b.top, b.width, b.height) for b in boxes], dtype=float)


def iou_matrix(rows: Sequence[BBox], cols: Sequence[BBox]) -> np.ndarray:
    """Pairwise IoU, shape ``(len(rows), len(cols))``."""
    a = _as_array(rows)
    b = _as_array(cols)
    if len(a) == 0 or len(b) == 0:
        return np.zeros((len(a), len(b)))
    ax2 = a[:, 0] + a[:, 2]
    ay2 = a[:, 1] + a[:, 3]
    bx2 = b[:, 0] + b[:, 2]
    by2 = b[:, 1] + b[:, 3]
    iw = np.minimum(ax2[:, None], bx2[None, :]) - np.maximum(a[:, None, 0], b[None, :, 0])
    ih = np.minimum(ay2[:, None], by2[None, :]) - np.maximum(a[:, None, 1], b[None, :, 1])
    inter = np.where((iw > 0) & (ih > 0), iw * ih, 0.0)
    area_a = (ax2 - a[:, 0]) * (ay2 - a[:, 1])
    area_b = (bx2 - b[:, 0]) * (by2 - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    return np.minimum(1.0, inter / union)


def iou_distance_matrix(rows: Sequence[BBox], cols: Sequence[BBox]) -> np.ndarray:
    """Cost matrix ``1 - iou`` used for association."""
    return 1.0 - iou_matrix(rows, cols)
