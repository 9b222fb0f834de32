"""Calendar and seasonal-average features for store-item daily sales."""

from __future__ import annotations

import datetime as dt
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from ..io_formats import SalesRecord


@dataclass(frozen=True)
class FeatureRow:
    date: dt.date
    store: int
    item: int
    sales: int
    month: int
    week: int
    day: int
    daily_avg_sales: float
    monthly_avg_sales: float


def calendar_fields(date: dt.date) -> tuple[int, int, int]:
    """``(month, ISO week, day of month)``. Early-January days may fall in week 52/53."""
    return date.month, date.isocalendar()[1], date.day


@dataclass
class SeasonalAverages:
    """Mean sales of one series by weekday and by calendar month."""

    by_weekday: dict[int, float] = field(default_factory=dict)
    by_month: dict[int, float] = field(default_factory=dict)
    overall: float = 0.0

    def daily(self, date: dt.date) -> float:
        return self.by_weekday.get(date.weekday(), self.overall)

    def monthly(self, date: dt.date) -> float:
        return self.by_month.get(date.month, self.overall)

    def to_dict(self) -> dict:
        return {
            "by_weekday": {str(k): v for k, v in sorted(self.by_weekday.items())},
            "by_month": {str(k): v for k, v in sorted(self.by_month.items())},
            "overall": self.overall,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SeasonalAverages":
        return cls(
            {int(k): float(v) for k, v in d["by_weekday"].items()},
            {int(k): float(v) for k, v in d["by_month"].items()},
            float(d["overall"]),
        )


def seasonal_averages(records: Iterable[SalesRecord]) -> dict[tuple[int, int], SeasonalAverages]:
    sums: dict = defaultdict(lambda: [0.0, 0])
    for r in records:
        for key in ((r.store, r.item, "w", r.date.weekday()), (r.store, r.item, "m", r.date.month), (r.store, r.item)):
            acc = sums[key]
            acc[0] += r.sales
            acc[1] += 1
    out: dict[tuple[int, int], SeasonalAverages] = {}
    for key, (total, n) in sums.items():
        if len(key) == 2:
            out.setdefault(key, SeasonalAverages()).overall = total / n
    for key, (total, n) in sums.items():
        if len(key) == 4:
            store, item, kind, k = key
            avg = out[(store, item)]
            (avg.by_weekday if kind == "w" else avg.by_month)[k] = total / n
    return out


def engineer_features(records: Sequence[SalesRecord], train_until: Optional[dt.date] = None) -> list[FeatureRow]:
    """Attach calendar fields and seasonal averages to each sales record.

    ``daily_avg_sales`` is the mean over the same (store, item, weekday) and
    ``monthly_avg_sales`` over the same (store, item, month). Only records dated
    on or before ``train_until`` feed the averages, so validation rows never see
    their own targets.
    """
    train = records if train_until is None else [r for r in records if r.date <= train_until]
    tables = seasonal_averages(train)
    fallback = SeasonalAverages(overall=sum(r.sales for r in train) / len(train)) if train else SeasonalAverages()
    rows = []
    for r in records:
        avg = tables.get((r.store, r.item), fallback)
        month, week, day = calendar_fields(r.date)
        rows.append(FeatureRow(r.date, r.store, r.item, r.sales, month, week, day, avg.daily(r.date), avg.monthly(r.date)))
    return rows
