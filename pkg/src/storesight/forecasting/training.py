"""Seeded training, validation and rolling prediction for one sales series.

Each day ``t`` is described by its calendar fields and seasonal averages
(``month/12, day/31, week/53, daily_avg, monthly_avg``, the averages z-scored
with the series' training mean and spread). The recurrent models read a window
of such days, each prefixed with the previous day's z-scored sales, and predict
the z-scored sales of the window's last day. The linear model sees the target
day's features plus a time index (years since the series start).
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import json
import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from ..errors import InsufficientData, InsufficientHistory, UsageError
from ..io_formats import SalesRecord
from .features import SeasonalAverages, calendar_fields, seasonal_averages
from .linear import LinearModel, fit_linear
from .recurrent import Adam, RecurrentParams, forward, init_params, loss_and_gradients

log = logging.getLogger(__name__)

MODEL_KINDS = ("linear", "lstm", "gru")
N_DAY_FEATURES = 5


@dataclass
class TrainConfig:
    window_length: int = 28
    epochs: int = 30
    learning_rate: float = 1e-3
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    hidden_size: int = 16
    batch_size: int = 1
    val_days: int = 92
    normalization: str = "zscore"

    def __post_init__(self):
        if self.window_length < 2:
            raise UsageError("window_length must be >= 2")
        if self.epochs < 1:
            raise UsageError("epochs must be >= 1")
        if self.batch_size < 1 or self.hidden_size < 1:
            raise UsageError("batch_size and hidden_size must be >= 1")
        if self.val_days < 0:
            raise UsageError("val_days must be >= 0")
        if self.normalization != "zscore":
            raise UsageError("only zscore normalization is supported")

    @classmethod
    def from_dict(cls, data: Mapping, **overrides) -> "TrainConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown training config keys: {sorted(unknown)}")
        return cls(**{**data, **overrides})

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class LossHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)

    def to_csv(self) -> str:
        lines = ["epoch,train_loss,val_loss\n"]
        for e, (tr, va) in enumerate(zip(self.train_loss, self.val_loss), start=1):
            lines.append(f"{e},{tr!r},{va!r}\n")
        return "".join(lines)


@dataclass
class SalesSeries:
    store: int
    item: int
    dates: list[dt.date]
    sales: np.ndarray

    def __len__(self) -> int:
        return len(self.dates)


def split_series(records: Sequence[SalesRecord]) -> list[SalesSeries]:
    """Group records by (store, item) into daily series, ordered by key."""
    groups: dict[tuple[int, int], list[SalesRecord]] = {}
    for r in records:
        groups.setdefault((r.store, r.item), []).append(r)
    out = []
    for (store, item), rows in sorted(groups.items()):
        rows.sort(key=lambda r: r.date)
        for a, b in zip(rows, rows[1:]):
            if (b.date - a.date).days != 1:
                raise InsufficientData(f"series ({store}, {item}) is not contiguous daily data at {a.date}..{b.date}")
        out.append(SalesSeries(store, item, [r.date for r in rows], np.array([r.sales for r in rows], dtype=float)))
    return out


@dataclass
class ForecastModel:
    kind: str
    store: int
    item: int
    window_length: int
    mean: float
    std: float
    start_date: dt.date
    averages: SeasonalAverages
    params: Optional[RecurrentParams] = None
    linear: Optional[LinearModel] = None

    @property
    def input_size(self) -> int:
        return N_DAY_FEATURES + 1

    def day_features(self, date: dt.date) -> np.ndarray:
        month, week, day = calendar_fields(date)
        return np.array(
            [
                month / 12.0,
                day / 31.0,
                week / 53.0,
                (self.averages.daily(date) - self.mean) / self.std,
                (self.averages.monthly(date) - self.mean) / self.std,
            ]
        )

    def time_index(self, date: dt.date) -> float:
        return (date - self.start_date).days / 365.0

    def normalize(self, sales):
        return (np.asarray(sales, dtype=float) - self.mean) / self.std

    def denormalize(self, z):
        return np.asarray(z, dtype=float) * self.std + self.mean

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "store": self.store,
            "item": self.item,
            "input_size": self.input_size,
            "hidden_size": self.params.hidden_size if self.params else 0,
            "window_length": self.window_length,
            "normalization": {"mean": self.mean, "std": self.std},
            "start_date": self.start_date.isoformat(),
            "averages": self.averages.to_dict(),
        }
        if self.params is not None:
            d["weights"] = {k: v.ravel().tolist() for k, v in sorted(self.params.weights.items())}
        else:
            d["weights"] = {"weights": self.linear.weights.tolist(), "intercept": [self.linear.intercept]}
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "ForecastModel":
        from .recurrent import param_shapes

        kind = d["kind"]
        if kind not in MODEL_KINDS:
            raise UsageError(f"unknown model kind {kind!r}")
        params = linear = None
        if kind == "linear":
            linear = LinearModel(np.array(d["weights"]["weights"], dtype=float), float(d["weights"]["intercept"][0]))
        else:
            shapes = param_shapes(kind, d["input_size"], d["hidden_size"])
            weights = {k: np.array(d["weights"][k], dtype=float).reshape(shapes[k]) for k in shapes}
            params = RecurrentParams(kind, d["input_size"], d["hidden_size"], weights)
        return cls(
            kind,
            int(d["store"]),
            int(d["item"]),
            int(d["window_length"]),
            float(d["normalization"]["mean"]),
            float(d["normalization"]["std"]),
            dt.date.fromisoformat(d["start_date"]),
            SeasonalAverages.from_dict(d["averages"]),
            params,
            linear,
        )


def models_to_json(models: Sequence[ForecastModel]) -> str:
    return json.dumps({"models": [m.to_dict() for m in models]}, indent=1)


def models_from_json(text: str) -> list[ForecastModel]:
    return [ForecastModel.from_dict(d) for d in json.loads(text)["models"]]


def _design(model: ForecastModel, series: SalesSeries) -> tuple[np.ndarray, np.ndarray]:
    """Per-day recurrent inputs (lagged sales first) and z-scored targets.

    Row ``t`` of the inputs uses the sales of day ``t - 1``; row 0 has no lag and
    is never used as part of a window.
    """
    z = model.normalize(series.sales)
    days = np.array([model.day_features(d) for d in series.dates])
    lag = np.r_[0.0, z[:-1]]
    return np.column_stack([lag, days]), z


def _windows(inputs: np.ndarray, targets: np.ndarray, L: int, lo: int, hi: int):
    idx = np.arange(max(lo, L), hi)
    if len(idx) == 0:
        return np.zeros((0, L, inputs.shape[1])), np.zeros(0), idx
    gather = idx[:, None] + np.arange(-L + 1, 1)[None, :]
    return inputs[gather], targets[idx], idx


def _linear_design(model: ForecastModel, dates: Sequence[dt.date]) -> np.ndarray:
    return np.array([np.r_[model.day_features(d), model.time_index(d)] for d in dates])


def _base_model(series: SalesSeries, kind: str, cfg: TrainConfig) -> tuple[ForecastModel, int]:
    if kind not in MODEL_KINDS:
        raise UsageError(f"unknown model kind {kind!r}")
    n_train = len(series) - cfg.val_days
    if n_train <= cfg.window_length:
        raise InsufficientData(
            f"series ({series.store}, {series.item}) has {len(series)} days; "
            f"need more than window_length + val_days = {cfg.window_length + cfg.val_days}"
        )
    train_part = series.sales[:n_train]
    std = float(train_part.std())
    records = [SalesRecord(d, series.store, series.item, int(s)) for d, s in zip(series.dates[:n_train], train_part)]
    averages = seasonal_averages(records)[(series.store, series.item)]
    model = ForecastModel(
        kind,
        series.store,
        series.item,
        cfg.window_length,
        float(train_part.mean()),
        std if std > 0 else 1.0,
        series.dates[0],
        averages,
    )
    return model, n_train


def train(series: SalesSeries, model_kind: str, cfg: TrainConfig) -> tuple[ForecastModel, LossHistory]:
    """Fit one model on the head of ``series``; the last ``val_days`` days are held out."""
    model, n_train = _base_model(series, model_kind, cfg)
    history = LossHistory()

    if model_kind == "linear":
        X = _linear_design(model, series.dates)
        z = model.normalize(series.sales)
        model.linear = fit_linear(X[:n_train], z[:n_train])
        history.train_loss.append(float(np.mean((model.linear.predict(X[:n_train]) - z[:n_train]) ** 2)))
        val = model.linear.predict(X[n_train:]) - z[n_train:] if n_train < len(series) else np.zeros(0)
        history.val_loss.append(float(np.mean(val**2)) if len(val) else float("nan"))
        return model, history

    inputs, targets = _design(model, series)
    L = cfg.window_length
    Xtr, ytr, _ = _windows(inputs, targets, L, L, n_train)
    Xva, yva, _ = _windows(inputs, targets, L, n_train, len(series))
    rng = np.random.default_rng(cfg.seed)
    params = init_params(model_kind, model.input_size, cfg.hidden_size, rng)
    opt = Adam(params.weights, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon)
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(ytr))
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            _, grads = loss_and_gradients(params, Xtr[batch], ytr[batch])
            opt.step(params.weights, grads)
        history.train_loss.append(float(np.mean((forward(params, Xtr) - ytr) ** 2)))
        history.val_loss.append(float(np.mean((forward(params, Xva) - yva) ** 2)) if len(yva) else float("nan"))
        log.debug("series (%d, %d) epoch %d: train %.5f val %.5f", series.store, series.item, epoch + 1,
                  history.train_loss[-1], history.val_loss[-1])
    model.params = params
    return model, history


def validation_forecast(model: ForecastModel, series: SalesSeries, val_days: int) -> tuple[list[dt.date], np.ndarray, np.ndarray]:
    """One-step-ahead predictions over the last ``val_days`` days, using actual history as lags."""
    n_train = len(series) - val_days
    dates = series.dates[n_train:]
    actual = series.sales[n_train:]
    if model.kind == "linear":
        z = model.linear.predict(_linear_design(model, dates)) if dates else np.zeros(0)
    else:
        inputs, targets = _design(model, series)
        Xva, _, _ = _windows(inputs, targets, model.window_length, n_train, len(series))
        z = forward(model.params, Xva) if len(Xva) else np.zeros(0)
    return list(dates), model.denormalize(z), actual


def predict(model: ForecastModel, series: SalesSeries, horizon: int) -> list[tuple[dt.date, float]]:
    """Roll the model forward ``horizon`` days past the end of ``series``.

    Recurrent models feed each prediction back in as the next day's lagged sales.
    """
    if horizon < 0:
        raise UsageError("horizon must be >= 0")
    if len(series) < model.window_length:
        raise InsufficientHistory(f"need at least {model.window_length} days of history, got {len(series)}")
    last = series.dates[-1]
    future = [last + dt.timedelta(days=k) for k in range(1, horizon + 1)]
    if horizon == 0:
        return []
    if model.kind == "linear":
        values = model.denormalize(model.linear.predict(_linear_design(model, future)))
        return list(zip(future, values.tolist()))

    L = model.window_length
    dates = list(series.dates[-L:])
    z_hist = list(model.normalize(series.sales[-L:]))
    out = []
    for date in future:
        window_dates = dates[-(L - 1) :] + [date]
        lags = z_hist[-L:]
        window = np.array([np.r_[lag, model.day_features(d)] for lag, d in zip(lags, window_dates)])
        z = forward(model.params, window)
        out.append((date, float(model.denormalize(z))))
        dates.append(date)
        z_hist.append(z)
    return out


def train_all(records: Sequence[SalesRecord], model_kind: str, cfg: TrainConfig):
    """Train one model per (store, item) series; series ``k`` uses seed ``cfg.seed ^ k``."""
    results = []
    for k, series in enumerate(split_series(records)):
        model, history = train(series, model_kind, dataclasses.replace(cfg, seed=cfg.seed ^ k))
        results.append((series, model, history))
    return results
