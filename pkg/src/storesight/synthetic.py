"""Seeded synthetic fixtures: walking-shopper scenes and seasonal sales data."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from .geometry import BBox, Detection
from .io_formats import GroundTruthEntry, SalesRecord
from .kalman import AffineTransform


@dataclass
class Scene:
    detections: list[Detection]
    ground_truth: list[GroundTruthEntry]
    cmc: dict[int, AffineTransform] = field(default_factory=dict)
    frame_size: tuple[int, int] = (1920, 1080)


def walking_scene(
    n_agents: int = 4,
    n_frames: int = 100,
    seed: int = 0,
    noise: float = 2.0,
    drop_rate: float = 0.05,
    occlusion: tuple[int, int] | None = None,
    occluded_score: float = 0.3,
    box_size: tuple[float, float] = (40.0, 100.0),
    frame_size: tuple[int, int] = (1920, 1080),
) -> Scene:
    """Well-separated agents walking at constant velocity in horizontal lanes.

    A fraction ``drop_rate`` of frames is dropped entirely (no detections and no
    ground truth, as when a video pipeline skips frames). Frames 1 and
    ``n_frames`` are never dropped. During ``occlusion = (first, last)`` every
    agent's detection score falls to ``occluded_score``.
    """
    rng = np.random.default_rng(seed)
    w, h = box_size
    W, H = frame_size
    lane = H / max(n_agents, 1)
    x0 = rng.uniform(100, 400, size=n_agents)
    vx = rng.uniform(2.0, 6.0, size=n_agents) * rng.choice([-1.0, 1.0], size=n_agents)
    x0 = np.where(vx < 0, W - x0 - w, x0)
    y0 = lane * np.arange(n_agents) + (lane - h) / 2
    vy = rng.uniform(-0.3, 0.3, size=n_agents)

    dropped = set()
    if drop_rate > 0 and n_frames > 2:
        inner = np.arange(2, n_frames)
        k = int(round(drop_rate * n_frames))
        dropped = set(rng.choice(inner, size=min(k, len(inner)), replace=False).tolist())

    dets, gts = [], []
    for f in range(1, n_frames + 1):
        if f in dropped:
            continue
        for a in range(n_agents):
            left = x0[a] + vx[a] * (f - 1)
            top = y0[a] + vy[a] * (f - 1)
            gts.append(GroundTruthEntry(f, a + 1, BBox(left, top, w, h)))
            jitter = rng.normal(0.0, noise, size=4)
            score = float(np.clip(rng.uniform(0.8, 0.95), 0, 1))
            if occlusion and occlusion[0] <= f <= occlusion[1]:
                score = occluded_score
            dets.append(
                Detection(f, BBox(left + jitter[0], top + jitter[1], max(w + jitter[2], 1.0), max(h + jitter[3], 1.0)), score)
            )
    return Scene(dets, gts, frame_size=frame_size)


def pan_scene(scene: Scene, step: tuple[float, float]) -> Scene:
    """Apply a camera pan of ``step`` pixels per frame to every box, with matching CMC transforms."""
    dx, dy = step
    frames = sorted({d.frame for d in scene.detections} | {g.frame for g in scene.ground_truth})
    shift = {f: ((f - 1) * dx, (f - 1) * dy) for f in frames}
    dets = [Detection(d.frame, d.bbox.translated(*shift[d.frame]), d.score, d.class_id) for d in scene.detections]
    gts = [
        GroundTruthEntry(g.frame, g.track_id, g.bbox.translated(*shift[g.frame]), g.active, g.class_id, g.visibility)
        for g in scene.ground_truth
    ]
    cmc = {f: AffineTransform.from_translation(dx, dy) for f in range(2, max(frames) + 1)} if frames else {}
    return Scene(dets, gts, cmc, scene.frame_size)


def seasonal_sales(
    n_series: int = 10,
    start: dt.date = dt.date(2015, 1, 1),
    days: int = 3 * 365,
    seed: int = 0,
    noise_ar: float = 0.9,
    noise_scale: float = 0.12,
) -> list[SalesRecord]:
    """Daily unit sales with trend, weekly and annual seasonality and AR(1) noise.

    Seasonality and noise act multiplicatively on a growing base level, as in
    retail data where busy stores swing harder.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(days)
    dates = [start + dt.timedelta(days=int(k)) for k in t]
    weekday = np.array([d.weekday() for d in dates])
    doy = np.array([d.timetuple().tm_yday for d in dates])
    records = []
    for k in range(n_series):
        store, item = k // 5 + 1, k % 5 + 1
        base = rng.uniform(20, 120)
        growth = rng.uniform(0.05, 0.25)
        weekly = rng.uniform(0.1, 0.3) * np.array([-0.6, -0.4, -0.2, 0.0, 0.3, 0.8, 0.6])[weekday]
        annual = rng.uniform(0.15, 0.35) * np.sin(2 * np.pi * (doy - rng.uniform(0, 365)) / 365.25)
        eps = np.zeros(days)
        shocks = rng.normal(0.0, noise_scale, size=days)
        for i in range(1, days):
            eps[i] = noise_ar * eps[i - 1] + shocks[i]
        level = base * (1 + growth * t / 365.0)
        sales = level * (1 + weekly) * (1 + annual) * np.exp(eps)
        sales = np.maximum(np.rint(sales), 1).astype(int)
        records.extend(SalesRecord(d, store, item, int(s)) for d, s in zip(dates, sales))
    return records
