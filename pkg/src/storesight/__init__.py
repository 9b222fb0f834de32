"""Shopper tracking, footfall analytics and demand forecasting from detection files."""

from .geometry import BBox, Detection, iou, iou_distance_matrix, to_cxcywh
from .io_formats import GroundTruthEntry, SalesRecord, TrackRecord
from .tracker import Tracker, TrackerConfig, run_sequence

__version__ = "0.1.0"
