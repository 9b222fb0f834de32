"""Command-line entry point.

Exit status is 0 on success, 1 on usage errors and 2 on data errors; messages
go to stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import analytics, io_formats, metrics
from .errors import DataError, UsageError
from .forecasting import training
from .forecasting.training import TrainConfig
from .tracker import TrackerConfig, run_sequence

log = logging.getLogger("storesight")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _pair(kind: type, sep: str = "x"):
    def parse(raw: str):
        parts = raw.lower().split(sep)
        if len(parts) != 2:
            raise argparse.ArgumentTypeError(f"expected A{sep}B, got {raw!r}")
        try:
            return tuple(kind(p) for p in parts)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad value {raw!r}") from None

    return parse


def _line(raw: str):
    try:
        x1, y1, x2, y2 = (float(v) for v in raw.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x1,y1,x2,y2, got {raw!r}") from None
    return (x1, y1), (x2, y2)


def _common(p: argparse.ArgumentParser, out_required: bool = False, out_help: str = "output file") -> None:
    p.add_argument("--seed", type=int, default=None, help="base random seed (default 0)")
    p.add_argument("--config", type=Path, help="JSON file overriding TrackerConfig/TrainConfig defaults")
    p.add_argument("--out", "--output", dest="out", type=Path, required=out_required, help=out_help)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def _train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int)
    p.add_argument("--hidden-size", type=int)
    p.add_argument("--window-length", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--val-days", type=int, help="length of the chronological validation tail (default 92)")


def build_parser() -> argparse.ArgumentParser:
    root = _Parser(prog="storesight", description="Shopper tracking, footfall analytics and demand forecasting.")
    sub = root.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("track", help="run the multi-object tracker over a detections file")
    p.add_argument("--detections", type=Path, required=True, help="MOT detections CSV")
    p.add_argument("--tracker", choices=("botsort", "bytetrack"), default=None, help="tracker variant (default botsort)")
    p.add_argument("--cmc", type=Path, help="camera-motion CSV frame,a11,a12,a21,a22,tx,ty")
    p.add_argument("--report", type=Path, help="run-report JSON path (default: <out>.report.json)")
    p.add_argument("--tau-high", type=float)
    p.add_argument("--tau-low", type=float)
    p.add_argument("--new-track-score", type=float)
    p.add_argument("--max-lost-frames", type=int)
    p.add_argument("--no-stage2", action="store_true", help="disable low-score (second stage) association")
    _common(p, out_required=True, out_help="track output CSV")
    p.set_defaults(func=cmd_track)

    an = sub.add_parser("analytics", help="heat maps and visitor counts from a track file")
    an_sub = an.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = an_sub.add_parser("heatmap", help="foot-point occupancy grid")
    p.add_argument("--tracks", type=Path, required=True)
    p.add_argument("--grid", type=_pair(int), required=True, help="COLSxROWS, e.g. 10x10")
    p.add_argument("--frame", type=_pair(float), required=True, help="WIDTHxHEIGHT in pixels, e.g. 1920x1080")
    p.add_argument("--normalize", action="store_true", help="write fractions summing to 1 (CSV output only)")
    p.add_argument("--figure", type=Path, help="also render the heat map as an image")
    _common(p, out_required=True, out_help="output path; .pgm, .csv or .png by extension")
    p.set_defaults(func=cmd_heatmap)

    p = an_sub.add_parser("count", help="line-crossing counts")
    p.add_argument("--tracks", type=Path, required=True)
    p.add_argument("--line", type=_line, required=True, help="x1,y1,x2,y2")
    p.add_argument("--label", default="line")
    _common(p, out_help="crossing report JSON (default stdout)")
    p.set_defaults(func=cmd_count)

    p = an_sub.add_parser("visitors", help="visitor count")
    p.add_argument("--tracks", type=Path, required=True)
    p.add_argument("--method", choices=("ids", "line"), default="ids",
                   help="distinct track ids, or crossings of --line (default ids)")
    p.add_argument("--line", type=_line, help="x1,y1,x2,y2 (required for --method line)")
    _common(p, out_help="JSON output (default stdout)")
    p.set_defaults(func=cmd_visitors)

    ev = sub.add_parser("eval", help="evaluation metrics")
    ev_sub = ev.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = ev_sub.add_parser("detection", help="AP50 and mAP50-95 of detections against ground truth")
    p.add_argument("--detections", type=Path, required=True)
    p.add_argument("--gt", type=Path, required=True)
    _common(p, out_help="report JSON (default stdout)")
    p.set_defaults(func=cmd_eval_detection)

    p = ev_sub.add_parser("tracking", help="CLEAR-MOT MOTA of tracks against ground truth")
    p.add_argument("--gt", type=Path, required=True)
    p.add_argument("--tracks", type=Path, required=True)
    p.add_argument("--iou", type=float, default=0.5)
    _common(p, out_help="report JSON (default stdout)")
    p.set_defaults(func=cmd_eval_tracking)

    p = ev_sub.add_parser("forecast", help="RMSE, MSE, MAE, MAPE and R2 of a forecast")
    p.add_argument("--pred", type=Path, required=True, help="CSV date,store,item,predicted_sales (or sales)")
    p.add_argument("--actual", type=Path, required=True, help="CSV date,store,item,sales")
    _common(p, out_help="report JSON (default stdout)")
    p.set_defaults(func=cmd_eval_forecast)

    fc = sub.add_parser("forecast", help="train and apply demand-forecasting models")
    fc_sub = fc.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = fc_sub.add_parser("train", help="train one model per (store, item) series")
    p.add_argument("--sales", type=Path, required=True)
    p.add_argument("--model", choices=training.MODEL_KINDS, default="gru")
    _train_flags(p)
    p.add_argument("--loss-csv", type=Path, help="per-epoch losses, summed over series (default: <out>.loss.csv)")
    p.add_argument("--val-forecast", type=Path, help="validation-tail predictions CSV")
    p.add_argument("--figures", type=Path, help="directory for loss and predicted-vs-actual figures")
    _common(p, out_required=True, out_help="model weights JSON")
    p.set_defaults(func=cmd_forecast_train)

    p = fc_sub.add_parser("predict", help="roll trained models forward")
    p.add_argument("--model-file", type=Path, required=True)
    p.add_argument("--sales", type=Path, required=True, help="history to forecast from")
    p.add_argument("--horizon", type=int, required=True, help="days to forecast")
    p.add_argument("--figure", type=Path, help="render history tail and forecast totals")
    _common(p, out_required=True, out_help="forecast CSV date,store,item,predicted_sales")
    p.set_defaults(func=cmd_forecast_predict)

    p = sub.add_parser("compare-models", help="train linear, LSTM and GRU and print a comparison table")
    p.add_argument("--sales", type=Path, required=True)
    _train_flags(p)
    p.add_argument("--figures", type=Path, help="directory for GRU loss and predicted-vs-actual figures")
    p.add_argument("--json", type=Path, help="also write the per-model metrics as JSON")
    _common(p, out_help="text table (default stdout only)")
    p.set_defaults(func=cmd_compare)
    return root


def iter_leaf_parsers(parser: Optional[argparse.ArgumentParser] = None, prefix=()):
    """Yield ``(command words, parser)`` for every runnable subcommand."""
    parser = parser or build_parser()
    subs = [a for a in parser._actions if isinstance(a, argparse._SubParsersAction)]
    if not subs:
        yield prefix, parser
        return
    for name, child in subs[0].choices.items():
        yield from iter_leaf_parsers(child, prefix + (name,))


# helpers


def _load_config(args) -> dict:
    if not args.config:
        return {}
    try:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{args.config}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise UsageError(f"{args.config}: config must be a JSON object")
    tracker_keys = {f.name for f in dataclasses.fields(TrackerConfig)}
    train_keys = {f.name for f in dataclasses.fields(TrainConfig)}
    unknown = set(data) - tracker_keys - train_keys
    if unknown:
        raise UsageError(f"{args.config}: unknown config keys {sorted(unknown)}")
    return data


def _subset(data: dict, cls) -> dict:
    keys = {f.name for f in dataclasses.fields(cls)}
    return {k: v for k, v in data.items() if k in keys}


def _tracker_config(args) -> TrackerConfig:
    data = _subset(_load_config(args), TrackerConfig)
    flags = {
        "variant": args.tracker,
        "tau_high": args.tau_high,
        "tau_low": args.tau_low,
        "new_track_score": args.new_track_score,
        "max_lost_frames": args.max_lost_frames,
        "stage2": False if args.no_stage2 else None,
    }
    return TrackerConfig.from_dict(data, **{k: v for k, v in flags.items() if v is not None})


def _train_config(args) -> TrainConfig:
    data = _subset(_load_config(args), TrainConfig)
    flags = {
        "epochs": args.epochs,
        "hidden_size": args.hidden_size,
        "window_length": args.window_length,
        "learning_rate": args.learning_rate,
        "batch_size": args.batch_size,
        "val_days": args.val_days,
        "seed": args.seed,
    }
    return TrainConfig.from_dict(data, **{k: v for k, v in flags.items() if v is not None})


def _read(path: Path) -> str:
    try:
        return io_formats.read_text(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None


def _emit(args, text: str) -> None:
    if args.out:
        io_formats.write_text(args.out, text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# subcommands


def cmd_track(args) -> int:
    config = _tracker_config(args)
    dets = io_formats.parse_detections(_read(args.detections))
    cmc = io_formats.parse_cmc(_read(args.cmc)) if args.cmc else None
    records, report = run_sequence(dets, config, cmc)
    io_formats.write_text(args.out, io_formats.write_tracks(records))
    report_path = args.report or args.out.with_name(args.out.name + ".report.json")
    io_formats.write_text(report_path, _json({**report.to_dict(), "config": config.to_dict()}))
    log.info("%d frames, %d tracks, %.1f frames/s", report.frames_processed, report.tracks_created, report.throughput)
    return EXIT_OK


def cmd_heatmap(args) -> int:
    records = io_formats.parse_tracks(_read(args.tracks))
    hm = analytics.accumulate_heatmap(records, args.grid, args.frame)
    ext = args.out.suffix.lower()
    if ext == ".pgm":
        io_formats.write_text(args.out, hm.to_pgm())
    elif ext == ".csv":
        io_formats.write_text(args.out, hm.to_csv(normalized=args.normalize))
    elif ext == ".png":
        from .plotting import plot_heatmap

        plot_heatmap(hm.counts, args.out, hm_frame(hm))
    else:
        raise UsageError(f"unsupported heat map extension {ext!r}; use .pgm, .csv or .png")
    if args.figure:
        from .plotting import plot_heatmap

        plot_heatmap(hm.counts, args.figure, hm_frame(hm))
    return EXIT_OK


def hm_frame(hm: analytics.HeatMap) -> tuple[float, float]:
    return hm.frame_width, hm.frame_height


def cmd_count(args) -> int:
    records = io_formats.parse_tracks(_read(args.tracks))
    p1, p2 = args.line
    report = analytics.count_line_crossings(records, analytics.CountingLine(p1, p2, args.label))
    _emit(args, report.to_json() + "\n")
    return EXIT_OK


def cmd_visitors(args) -> int:
    records = io_formats.parse_tracks(_read(args.tracks))
    if args.method == "line":
        if args.line is None:
            raise UsageError("--method line requires --line")
        report = analytics.count_line_crossings(records, analytics.CountingLine(*args.line))
        out = {"method": "line", "visitors": report.positive_crossings, "exits": report.negative_crossings}
    else:
        out = {"method": "ids", "visitors": analytics.unique_visitors(records)}
    _emit(args, _json(out))
    return EXIT_OK


def cmd_eval_detection(args) -> int:
    dets = io_formats.parse_detections(_read(args.detections))
    gts = io_formats.parse_ground_truth(_read(args.gt))
    _emit(args, _json(metrics.map_suite(dets, gts).to_dict()))
    return EXIT_OK


def cmd_eval_tracking(args) -> int:
    gts = io_formats.parse_ground_truth(_read(args.gt))
    tracks = io_formats.parse_tracks(_read(args.tracks))
    _emit(args, _json(metrics.mota(gts, tracks, args.iou).to_dict()))
    return EXIT_OK


def cmd_eval_forecast(args) -> int:
    pred = io_formats.parse_value_csv(_read(args.pred))
    actual = io_formats.parse_value_csv(_read(args.actual))
    missing = sorted(set(actual) - set(pred))
    if missing:
        d, s, i = missing[0]
        raise DataError(f"no prediction for {len(missing)} actual rows, first ({d}, {s}, {i})")
    keys = sorted(actual)
    report = metrics.forecast_metrics([pred[k] for k in keys], [actual[k] for k in keys])
    _emit(args, _json(report.to_dict()))
    return EXIT_OK


def _sum_by_date(rows):
    totals: dict = {}
    for date, value in rows:
        totals[date] = totals.get(date, 0.0) + float(value)
    dates = sorted(totals)
    return dates, np.array([totals[d] for d in dates])


def _train_kind(records, kind: str, cfg: TrainConfig):
    results = training.train_all(records, kind, cfg)
    val_rows = []
    for series, model, _ in results:
        dates, pred, actual = training.validation_forecast(model, series, cfg.val_days)
        val_rows.extend((d, series.store, series.item, p, a) for d, p, a in zip(dates, pred, actual))
    return results, val_rows


def _summed_history(results) -> training.LossHistory:
    train = np.mean([h.train_loss for _, _, h in results], axis=0)
    val = np.mean([h.val_loss for _, _, h in results], axis=0)
    return training.LossHistory(train.tolist(), val.tolist())


def cmd_forecast_train(args) -> int:
    cfg = _train_config(args)
    records = io_formats.parse_sales_csv(_read(args.sales))
    results, val_rows = _train_kind(records, args.model, cfg)
    io_formats.write_text(args.out, training.models_to_json([m for _, m, _ in results]))
    history = _summed_history(results)
    loss_csv = args.loss_csv or args.out.with_name(args.out.name + ".loss.csv")
    io_formats.write_text(loss_csv, history.to_csv())
    if args.val_forecast:
        io_formats.write_text(args.val_forecast, io_formats.write_forecast_csv((d, s, i, p) for d, s, i, p, _ in val_rows))
    if args.figures:
        from .plotting import plot_loss_history, plot_sales_comparison

        args.figures.mkdir(parents=True, exist_ok=True)
        plot_loss_history(history.train_loss, history.val_loss, args.figures / f"{args.model}_loss.png",
                          f"{args.model.upper()} loss across epochs")
        if val_rows:
            dates, pred = _sum_by_date((d, p) for d, _, _, p, _ in val_rows)
            _, actual = _sum_by_date((d, a) for d, _, _, _, a in val_rows)
            plot_sales_comparison(dates, actual, pred, args.figures / f"{args.model}_predicted_vs_actual.png")
    return EXIT_OK


def cmd_forecast_predict(args) -> int:
    if args.horizon < 0:
        raise UsageError("--horizon must be >= 0")
    models = {(m.store, m.item): m for m in training.models_from_json(_read(args.model_file))}
    series = {(s.store, s.item): s for s in training.split_series(io_formats.parse_sales_csv(_read(args.sales)))}
    rows = []
    for key in sorted(models):
        if key not in series:
            raise DataError(f"no sales history for store {key[0]} item {key[1]}")
        rows.extend((d, key[0], key[1], v) for d, v in training.predict(models[key], series[key], args.horizon))
    io_formats.write_text(args.out, io_formats.write_forecast_csv(rows))
    if args.figure and rows:
        from .plotting import plot_sales_comparison

        dates, pred = _sum_by_date((d, v) for d, _, _, v in rows)
        plot_sales_comparison(dates, None, pred, args.figure, "Forecast sales")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _train_config(args)
    records = io_formats.parse_sales_csv(_read(args.sales))
    reports = {}
    names = {"linear": "Linear Regression", "lstm": "LSTM", "gru": "GRU"}
    gru_results = gru_rows = None
    for kind in ("linear", "lstm", "gru"):
        results, rows = _train_kind(records, kind, cfg)
        if not rows:
            raise DataError("no validation rows; increase --val-days")
        reports[names[kind]] = metrics.forecast_metrics([r[3] for r in rows], [r[4] for r in rows])
        if kind == "gru":
            gru_results, gru_rows = results, rows
    table = metrics.comparison_table(reports, "GRU")
    sys.stdout.write(table)
    if args.out:
        io_formats.write_text(args.out, table)
    if args.json:
        io_formats.write_text(args.json, _json({k: v.to_dict() for k, v in reports.items()}))
    if args.figures:
        from .plotting import plot_loss_history, plot_sales_comparison

        args.figures.mkdir(parents=True, exist_ok=True)
        history = _summed_history(gru_results)
        plot_loss_history(history.train_loss, history.val_loss, args.figures / "gru_loss.png", "GRU loss across epochs")
        dates, pred = _sum_by_date((d, p) for d, _, _, p, _ in gru_rows)
        _, actual = _sum_by_date((d, a) for d, _, _, _, a in gru_rows)
        plot_sales_comparison(dates, actual, pred, args.figures / "gru_predicted_vs_actual.png")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
