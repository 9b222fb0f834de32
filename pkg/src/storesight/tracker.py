"""Tracking-by-detection state machine.

Both variants share one pipeline: Kalman prediction, two-stage association
(high-score detections first, then low-score detections rescue tracks that are
still ``Tracked``), and the New -> Tracked -> Lost -> Removed lifecycle. The
``botsort`` variant additionally moves every predicted state through the
frame's camera-motion transform; ``bytetrack`` ignores it.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import time
from dataclasses import dataclass, field
from itertools import groupby
from typing import Iterable, Mapping, Optional, Sequence

from .assignment import associate, partition_by_score
from .errors import InvalidThresholds, NonMonotonicFrame, UsageError
from .geometry import Detection, from_cxcywh
from .io_formats import TrackRecord
from .kalman import STD_POSITION, STD_VELOCITY, AffineTransform, KalmanFilter, KalmanState


class TrackLifecycle(enum.Enum):
    NEW = "new"
    TRACKED = "tracked"
    LOST = "lost"
    REMOVED = "removed"


LEGAL_TRANSITIONS = {
    TrackLifecycle.NEW: {TrackLifecycle.TRACKED, TrackLifecycle.REMOVED},
    TrackLifecycle.TRACKED: {TrackLifecycle.TRACKED, TrackLifecycle.LOST},
    TrackLifecycle.LOST: {TrackLifecycle.TRACKED, TrackLifecycle.REMOVED},
    TrackLifecycle.REMOVED: set(),
}


@dataclass
class TrackerConfig:
    variant: str = "botsort"
    tau_high: float = 0.6
    tau_low: float = 0.1
    match_cost_stage1: float = 0.8
    match_cost_stage2: float = 0.5
    new_track_score: float = 0.7
    max_lost_frames: int = 30
    std_position: float = STD_POSITION
    std_velocity: float = STD_VELOCITY
    stage2: bool = True

    def __post_init__(self):
        if self.variant not in ("botsort", "bytetrack"):
            raise UsageError(f"unknown tracker variant {self.variant!r}")
        if not 0.0 <= self.tau_low <= self.tau_high <= 1.0:
            raise InvalidThresholds(f"need 0 <= tau_low <= tau_high <= 1, got {self.tau_low}, {self.tau_high}")
        if self.max_lost_frames < 0:
            raise UsageError("max_lost_frames must be >= 0")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: Mapping, **overrides) -> "TrackerConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown tracker config keys: {sorted(unknown)}")
        return cls(**{**data, **overrides})


@dataclass
class Track:
    id: int
    lifecycle: TrackLifecycle
    kstate: KalmanState
    last_score: float
    start_frame: int
    frames_since_update: int = 0

    @property
    def bbox(self):
        return from_cxcywh(self.kstate.mean[:4])


@dataclass
class SequenceRunReport:
    frames_processed: int = 0
    tracks_created: int = 0
    wall_time: float = 0.0
    throughput: float = 0.0

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class Transition:
    frame: int
    track_id: int
    src: Optional[TrackLifecycle]
    dst: TrackLifecycle


class Tracker:
    """One tracker instance per sequence; :meth:`step` calls must be sequential."""

    def __init__(self, config: Optional[TrackerConfig] = None):
        self.config = config or TrackerConfig()
        self.kf = KalmanFilter(self.config.std_position, self.config.std_velocity)
        self.tracks: list[Track] = []
        self.transitions: list[Transition] = []
        self.last_frame: Optional[int] = None
        self._next_id = 1

    @property
    def tracks_created(self) -> int:
        return self._next_id - 1

    def _move(self, track: Track, dst: TrackLifecycle, frame: int) -> None:
        self.transitions.append(Transition(frame, track.id, track.lifecycle, dst))
        track.lifecycle = dst

    def _match(self, pool: list[Track], dets: list[Detection], max_cost: float):
        res = associate([t.bbox for t in pool], [d.bbox for d in dets], max_cost)
        return res.matches, [pool[i] for i in res.unmatched_rows], [dets[j] for j in res.unmatched_cols]

    def step(
        self,
        frame: int,
        frame_dets: Sequence[Detection],
        cmc: AffineTransform | Sequence[Optional[AffineTransform]] | None = None,
    ) -> list[TrackRecord]:
        """Advance to ``frame`` and return records for every confirmed track.

        When frames were skipped since the previous call, states are predicted
        once per elapsed frame. ``cmc`` is either the transform into ``frame`` or
        one transform (or None) per elapsed frame, oldest first.
        """
        cfg = self.config
        if self.last_frame is not None and frame <= self.last_frame:
            raise NonMonotonicFrame(f"frame {frame} does not follow frame {self.last_frame}")
        elapsed = 1 if self.last_frame is None else frame - self.last_frame
        self.last_frame = frame
        if cmc is None or isinstance(cmc, AffineTransform):
            cmc = [None] * (elapsed - 1) + [cmc]
        elif len(cmc) != elapsed:
            raise ValueError(f"expected {elapsed} CMC transforms, got {len(cmc)}")

        for t in self.tracks:
            for transform in cmc:
                t.kstate = self.kf.predict(t.kstate)
                if transform is not None and cfg.variant == "botsort":
                    t.kstate = self.kf.apply_cmc(t.kstate, transform)

        high, low, _ = partition_by_score(frame_dets, cfg.tau_high, cfg.tau_low)
        new = [t for t in self.tracks if t.lifecycle is TrackLifecycle.NEW]
        pool = [t for t in self.tracks if t.lifecycle in (TrackLifecycle.TRACKED, TrackLifecycle.LOST)]
        matched: list[tuple[Track, Detection]] = []

        pairs, rest, high_left = self._match(pool, high, cfg.match_cost_stage1)
        matched += [(pool[i], high[j]) for i, j in pairs]

        rest_tracked = [t for t in rest if t.lifecycle is TrackLifecycle.TRACKED]
        unmatched = [t for t in rest if t.lifecycle is not TrackLifecycle.TRACKED]
        if cfg.stage2 and low:
            pairs, leftover, _ = self._match(rest_tracked, low, cfg.match_cost_stage2)
            matched += [(rest_tracked[i], low[j]) for i, j in pairs]
            unmatched += leftover
        else:
            unmatched += rest_tracked

        # unconfirmed tracks get one chance at the high-score leftovers
        pairs, new_left, spawn = self._match(new, high_left, cfg.match_cost_stage1)
        matched += [(new[i], high_left[j]) for i, j in pairs]

        for t, d in matched:
            t.kstate = self.kf.update(t.kstate, d.bbox.to_cxcywh())
            t.last_score = d.score
            t.frames_since_update = 0
            self._move(t, TrackLifecycle.TRACKED, frame)

        for t in new_left:
            self._move(t, TrackLifecycle.REMOVED, frame)
        for t in unmatched:
            t.frames_since_update += elapsed
            if t.lifecycle is TrackLifecycle.TRACKED:
                self._move(t, TrackLifecycle.LOST, frame)
            elif t.frames_since_update > cfg.max_lost_frames:
                self._move(t, TrackLifecycle.REMOVED, frame)

        self.tracks = [t for t in self.tracks if t.lifecycle is not TrackLifecycle.REMOVED]

        for d in spawn:
            if d.score >= cfg.new_track_score:
                t = Track(self._next_id, TrackLifecycle.NEW, self.kf.initiate(d.bbox.to_cxcywh()), d.score, frame)
                self._next_id += 1
                self.transitions.append(Transition(frame, t.id, None, TrackLifecycle.NEW))
                self.tracks.append(t)

        out = [
            TrackRecord(frame, t.id, t.bbox, t.last_score)
            for t in self.tracks
            if t.lifecycle is TrackLifecycle.TRACKED
        ]
        out.sort(key=lambda r: r.track_id)
        return out


def group_by_frame(dets: Iterable[Detection]) -> dict[int, list[Detection]]:
    dets = sorted(dets, key=lambda d: d.frame)
    return {f: list(g) for f, g in groupby(dets, key=lambda d: d.frame)}


def run_sequence(
    dets: Iterable[Detection] | Mapping[int, Sequence[Detection]],
    config: Optional[TrackerConfig] = None,
    cmc_by_frame: Optional[Mapping[int, AffineTransform]] = None,
    tracker: Optional[Tracker] = None,
) -> tuple[list[TrackRecord], SequenceRunReport]:
    """Fold :meth:`Tracker.step` over the frames present in ``dets``.

    Frame indices absent from the stream (dropped frames) are bridged by
    prediction inside ``step``; their CMC transforms are still applied.
    """
    by_frame = dict(dets) if isinstance(dets, Mapping) else group_by_frame(dets)
    tracker = tracker or Tracker(config)
    cmc_by_frame = cmc_by_frame or {}
    records: list[TrackRecord] = []
    report = SequenceRunReport()
    if not by_frame:
        return records, report
    start = time.perf_counter()
    prev = None
    for frame in sorted(by_frame):
        first = frame if prev is None else prev + 1
        transforms = [cmc_by_frame.get(f) for f in range(first, frame + 1)]
        records.extend(tracker.step(frame, by_frame[frame], transforms))
        report.frames_processed += 1
        prev = frame
    report.wall_time = time.perf_counter() - start
    report.tracks_created = tracker.tracks_created
    if report.wall_time > 0:
        report.throughput = report.frames_processed / report.wall_time
    return records, report
