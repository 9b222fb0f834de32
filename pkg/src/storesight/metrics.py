"""Detection (AP/mAP), tracking (CLEAR-MOT MOTA) and forecasting metrics."""

from __future__ import annotations

import dataclasses
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .assignment import solve_assignment
from .errors import (
    ConstantActualInR2,
    EmptyGroundTruth,
    LengthMismatch,
    NoGroundTruth,
    ZeroActualInMAPE,
    ZeroBaseline,
)
from .geometry import Detection, iou, iou_matrix
from .io_formats import GroundTruthEntry, TrackRecord

# 0.50, 0.55, ..., 0.95 as the nearest doubles to the decimal values
COCO_IOU_THRESHOLDS = tuple(round(0.5 + 0.05 * k, 2) for k in range(10))


@dataclass
class MatchResult:
    """Detections labelled TP/FP, highest score first."""

    scores: list[float]
    is_tp: list[bool]
    num_fn: int
    total_gt: int


def match_detections(dets: Sequence[Detection], gts: Sequence[GroundTruthEntry], iou_thr: float) -> MatchResult:
    """Greedy per-frame matching in descending score order.

    Each detection takes the unmatched active ground-truth box it overlaps most;
    it is a true positive when that overlap reaches ``iou_thr``.
    """
    gt_by_frame: dict[int, list[GroundTruthEntry]] = defaultdict(list)
    for g in gts:
        if g.active:
            gt_by_frame[g.frame].append(g)
    total_gt = sum(len(v) for v in gt_by_frame.values())
    taken = {f: [False] * len(v) for f, v in gt_by_frame.items()}

    order = sorted(range(len(dets)), key=lambda k: -dets[k].score)
    scores, labels = [], []
    n_tp = 0
    for k in order:
        d = dets[k]
        cands = gt_by_frame.get(d.frame, [])
        best, best_iou = -1, -1.0
        for gi, g in enumerate(cands):
            if taken[d.frame][gi]:
                continue
            o = iou(d.bbox, g.bbox)
            if o > best_iou:
                best, best_iou = gi, o
        hit = best >= 0 and best_iou >= iou_thr
        if hit:
            taken[d.frame][best] = True
            n_tp += 1
        scores.append(d.score)
        labels.append(hit)
    return MatchResult(scores, labels, total_gt - n_tp, total_gt)


def precision_recall(scores: Sequence[float], is_tp: Sequence[bool], total_gt: int) -> tuple[np.ndarray, np.ndarray]:
    """Precision and recall at every distinct score cutoff, highest cutoff first."""
    if total_gt < 1:
        raise NoGroundTruth("average precision needs at least one ground-truth box")
    if len(scores) == 0:
        return np.zeros(0), np.zeros(0)
    s = np.asarray(scores, dtype=float)
    order = np.argsort(-s, kind="stable")
    s = s[order]
    tp = np.cumsum(np.asarray(is_tp, dtype=float)[order])
    n = np.arange(1, len(s) + 1)
    # keep the last index of each run of tied scores
    last = np.r_[s[1:] != s[:-1], True]
    return tp[last] / n[last], tp[last] / total_gt


def average_precision(scores: Sequence[float], is_tp: Sequence[bool], total_gt: int) -> float:
    """All-point interpolated area under the precision-recall curve."""
    precision, recall = precision_recall(scores, is_tp, total_gt)
    if len(precision) == 0:
        return 0.0
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    steps = np.diff(np.r_[0.0, recall])
    return float(np.sum(steps * envelope))


@dataclass
class DetectionEvalReport:
    precision: dict[float, list[float]] = field(default_factory=dict)
    recall: dict[float, list[float]] = field(default_factory=dict)
    ap_per_threshold: dict[float, float] = field(default_factory=dict)
    ap50: float = 0.0
    map50: float = 0.0
    map50_95: float = 0.0

    def to_dict(self) -> dict:
        return {
            "ap50": self.ap50,
            "map50": self.map50,
            "map50_95": self.map50_95,
            "ap_per_threshold": {f"{k:.2f}": v for k, v in self.ap_per_threshold.items()},
            "precision": {f"{k:.2f}": v for k, v in self.precision.items()},
            "recall": {f"{k:.2f}": v for k, v in self.recall.items()},
        }


def map_suite(dets: Sequence[Detection], gts: Sequence[GroundTruthEntry]) -> DetectionEvalReport:
    """AP at IoU 0.5 and the mean over IoU 0.50:0.05:0.95 for the person class."""
    report = DetectionEvalReport()
    for thr in COCO_IOU_THRESHOLDS:
        m = match_detections(dets, gts, thr)
        p, r = precision_recall(m.scores, m.is_tp, m.total_gt)
        report.precision[thr] = p.tolist()
        report.recall[thr] = r.tolist()
        report.ap_per_threshold[thr] = average_precision(m.scores, m.is_tp, m.total_gt)
    report.ap50 = report.ap_per_threshold[0.5]
    report.map50 = report.ap50
    report.map50_95 = float(np.mean(list(report.ap_per_threshold.values())))
    return report


@dataclass
class TrackingEvalReport:
    mota: float
    false_positives: int
    false_negatives: int
    id_switches: int
    gt_total: int
    matches: int = 0

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def mota(gts: Sequence[GroundTruthEntry], tracks: Sequence[TrackRecord], iou_thr: float = 0.5) -> TrackingEvalReport:
    """CLEAR-MOT accuracy.

    Per frame, ground-truth/track pairs matched in the previous frame are kept
    while their IoU stays at or above ``iou_thr``; the rest are assigned
    optimally on IoU distance. An identity switch is counted when a ground-truth
    object is matched to a different track id than the one it last matched.
    """
    gt_by_frame: dict[int, list[GroundTruthEntry]] = defaultdict(list)
    for g in gts:
        if g.active:
            gt_by_frame[g.frame].append(g)
    tr_by_frame: dict[int, list[TrackRecord]] = defaultdict(list)
    for t in tracks:
        tr_by_frame[t.frame].append(t)
    gt_total = sum(len(v) for v in gt_by_frame.values())
    if gt_total == 0:
        raise EmptyGroundTruth("no active ground-truth entries")

    fp = fn = idsw = n_match = 0
    prev_pairs: dict[int, int] = {}  # gt id -> track id, previous frame
    last_match: dict[int, int] = {}  # gt id -> most recent track id
    for frame in sorted(set(gt_by_frame) | set(tr_by_frame)):
        fg = gt_by_frame.get(frame, [])
        ft = tr_by_frame.get(frame, [])
        overlap = iou_matrix([g.bbox for g in fg], [t.bbox for t in ft])
        gt_idx = {g.track_id: i for i, g in enumerate(fg)}
        tr_idx = {t.track_id: j for j, t in enumerate(ft)}

        pairs: list[tuple[int, int]] = []
        for gid, tid in prev_pairs.items():
            i, j = gt_idx.get(gid), tr_idx.get(tid)
            if i is not None and j is not None and overlap[i, j] >= iou_thr:
                pairs.append((i, j))
        used_g = {i for i, _ in pairs}
        used_t = {j for _, j in pairs}
        free_g = [i for i in range(len(fg)) if i not in used_g]
        free_t = [j for j in range(len(ft)) if j not in used_t]
        if free_g and free_t:
            sub = overlap[np.ix_(free_g, free_t)]
            # infeasible pairs get a cost larger than any feasible total
            cost = np.where(sub >= iou_thr, 1.0 - sub, len(fg) + len(ft) + 1.0)
            for a, b in solve_assignment(cost).matches:
                if sub[a, b] >= iou_thr:
                    pairs.append((free_g[a], free_t[b]))

        cur: dict[int, int] = {}
        for i, j in pairs:
            gid, tid = fg[i].track_id, ft[j].track_id
            if gid in last_match and last_match[gid] != tid:
                idsw += 1
            last_match[gid] = tid
            cur[gid] = tid
        n_match += len(pairs)
        fn += len(fg) - len(pairs)
        fp += len(ft) - len(pairs)
        prev_pairs = cur

    score = 1.0 - (fp + fn + idsw) / gt_total
    return TrackingEvalReport(score, fp, fn, idsw, gt_total, n_match)


@dataclass
class MetricsReport:
    rmse: float
    mse: float
    mae: float
    mape: float
    r2: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def forecast_metrics(predicted, actual) -> MetricsReport:
    """RMSE, MSE, MAE, MAPE (as a fraction) and R^2 of a forecast."""
    p = np.asarray(predicted, dtype=float).ravel()
    a = np.asarray(actual, dtype=float).ravel()
    if len(p) != len(a) or len(a) == 0:
        raise LengthMismatch(f"predicted has {len(p)} values, actual has {len(a)}")
    if np.any(a == 0):
        raise ZeroActualInMAPE("MAPE is undefined when an actual value is zero")
    err = p - a
    ss_tot = float(np.sum((a - a.mean()) ** 2))
    if ss_tot == 0.0:
        raise ConstantActualInR2("R^2 is undefined for a constant actual series")
    mse = float(np.mean(err**2))
    return MetricsReport(
        rmse=math.sqrt(mse),
        mse=mse,
        mae=float(np.mean(np.abs(err))),
        mape=float(np.mean(np.abs(err) / np.abs(a))),
        r2=1.0 - float(np.sum(err**2)) / ss_tot,
    )


def improvement_rate(baseline: float, proposed: float) -> float:
    """Relative change from ``baseline`` to ``proposed`` in percent."""
    if baseline == 0:
        raise ZeroBaseline("improvement rate needs a non-zero baseline")
    return abs(proposed - baseline) / abs(baseline) * 100.0


def rmse_consistent(rmse: float, mse: float, tol: float = 1e-3) -> bool:
    """Whether a reported RMSE equals the square root of the reported MSE within ``tol``."""
    return abs(math.sqrt(mse) - rmse) <= tol


TABLE_ROWS = (("RMSE", "rmse"), ("R2-score", "r2"), ("MAPE", "mape"), ("MAE", "mae"), ("MSE", "mse"))


def comparison_table(reports: Mapping[str, MetricsReport], proposed: str) -> str:
    """Text table of metrics per model, with the proposed model's improvement rates."""
    names = list(reports)
    width = max(12, *(len(n) + 2 for n in names))
    lines = ["Metric".ljust(12) + "".join(n.rjust(width) for n in names)]
    for label, attr in TABLE_ROWS:
        lines.append(label.ljust(12) + "".join(f"{getattr(reports[n], attr):.3f}".rjust(width) for n in names))
    lines.append("")
    others = [n for n in names if n != proposed]
    if others:
        lines.append(f"Improvement rate of {proposed} (%)")
        lines.append("Metric".ljust(12) + "".join(n.rjust(width) for n in others))
        for label, attr in (("R2-score", "r2"), ("MAPE", "mape"), ("RMSE", "rmse")):
            cells = []
            for n in others:
                try:
                    cells.append(f"{improvement_rate(getattr(reports[n], attr), getattr(reports[proposed], attr)):.3f}")
                except ZeroBaseline:
                    cells.append("n/a")
            lines.append(label.ljust(12) + "".join(c.rjust(width) for c in cells))
    return "\n".join(lines) + "\n"
