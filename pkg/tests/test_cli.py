import json
from pathlib import Path

import pytest

from storesight.cli import iter_leaf_parsers, main
from storesight.io_formats import (
    parse_tracks,
    write_detections,
    write_ground_truth,
    write_sales_csv,
    write_cmc,
)
from storesight.synthetic import pan_scene, seasonal_sales, walking_scene

SNAPSHOTS = Path(__file__).parent / "snapshots"


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    scene = walking_scene(n_agents=4, n_frames=40, seed=2, drop_rate=0.0)
    (d / "dets.txt").write_text(write_detections(scene.detections))
    (d / "gt.txt").write_text(write_ground_truth(scene.ground_truth))
    panned = pan_scene(scene, (10.0, 0.0))
    (d / "panned.txt").write_text(write_detections(panned.detections))
    (d / "cmc.csv").write_text(write_cmc(panned.cmc))
    (d / "sales.csv").write_text(write_sales_csv(seasonal_sales(n_series=2, days=120, seed=3)))
    return d


def run(*argv):
    return main([str(a) for a in argv])


def test_track_writes_tracks_and_report(files, tmp_path):
    out = tmp_path / "t.txt"
    assert run("track", "--detections", files / "dets.txt", "--tracker", "botsort", "--out", out) == 0
    recs = parse_tracks(out.read_text())
    assert len({r.track_id for r in recs}) == 4
    report = json.loads((tmp_path / "t.txt.report.json").read_text())
    assert report["frames_processed"] == 40 and report["tracks_created"] == 4
    assert report["config"]["variant"] == "botsort"


def test_track_is_byte_identical(files, tmp_path):
    for name in ("a", "b"):
        assert run("track", "--detections", files / "panned.txt", "--cmc", files / "cmc.csv", "--seed", 5,
                   "--out", tmp_path / f"{name}.txt") == 0
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()


def test_track_flags_and_config(files, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"max_lost_frames": 4, "epochs": 3}))
    out = tmp_path / "t.txt"
    assert run("track", "--detections", files / "dets.txt", "--config", cfg, "--no-stage2", "--tau-high", 0.5,
               "--out", out, "--report", tmp_path / "r.json") == 0
    conf = json.loads((tmp_path / "r.json").read_text())["config"]
    assert (conf["max_lost_frames"], conf["stage2"], conf["tau_high"]) == (4, False, 0.5)


def test_unknown_config_key_is_usage_error(files, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"max_lost": 4}))
    assert run("track", "--detections", files / "dets.txt", "--config", cfg, "--out", tmp_path / "t.txt") == 1
    assert "max_lost" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["track", "--detections", "x.txt"],
        ["track", "--detections", "x.txt", "--out", "t.txt", "--bogus"],
        ["analytics", "heatmap", "--tracks", "t.txt", "--grid", "ten", "--frame", "10x10", "--out", "h.pgm"],
        ["frobnicate"],
        ["analytics", "visitors", "--tracks", "t.txt", "--method", "line"],
    ],
)
def test_usage_errors_exit_1(argv, tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "t.txt").write_text("1,1,0,0,10,10,0.9,-1,-1,-1\n")
    assert main(argv) == 1
    assert "usage error" in capsys.readouterr().err


def test_data_errors_exit_2_with_position(tmp_path, capsys):
    bad = tmp_path / "d.txt"
    bad.write_text("1,-1,10,10,5,5,0.5\n2,-1,10,10,0,5,0.5\n")
    assert run("track", "--detections", bad, "--out", tmp_path / "t.txt") == 2
    assert "line 2" in capsys.readouterr().err
    assert run("track", "--detections", tmp_path / "missing.txt", "--out", tmp_path / "t.txt") == 2


@pytest.fixture(scope="module")
def tracks_file(files):
    out = files / "tracks.txt"
    assert run("track", "--detections", files / "dets.txt", "--out", out) == 0
    return out


def test_heatmap_outputs(tracks_file, tmp_path):
    pgm = tmp_path / "h.pgm"
    assert run("analytics", "heatmap", "--tracks", tracks_file, "--grid", "10x10", "--frame", "1920x1080",
               "--out", pgm) == 0
    lines = pgm.read_text().splitlines()
    assert lines[:3] == ["P2", "10 10", "255"] and len(lines) == 13
    values = [int(v) for row in lines[3:] for v in row.split()]
    assert max(values) == 255 and min(values) >= 0
    csv = tmp_path / "h.csv"
    assert run("analytics", "heatmap", "--tracks", tracks_file, "--grid", "4x3", "--frame", "1920x1080",
               "--out", csv) == 0
    total = sum(int(v) for row in csv.read_text().splitlines() for v in row.split(","))
    assert total == len(parse_tracks(tracks_file.read_text()))
    png, fig = tmp_path / "h.png", tmp_path / "f.png"
    assert run("analytics", "heatmap", "--tracks", tracks_file, "--grid", "8x6", "--frame", "1920x1080",
               "--out", png, "--figure", fig) == 0
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n" and fig.exists()
    assert run("analytics", "heatmap", "--tracks", tracks_file, "--grid", "8x6", "--frame", "1920x1080",
               "--out", tmp_path / "h.bmp") == 1


def test_count_and_visitors(tracks_file, capsys):
    xs = [r.bbox.foot_point[0] for r in parse_tracks(tracks_file.read_text()) if r.track_id == 1]
    mid = (min(xs) + max(xs)) / 2
    line = f"{mid},1080,{mid},0"
    assert run("analytics", "count", "--tracks", tracks_file, "--line", line, "--label", "mid") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["label"] == "mid" and doc["positive"] + doc["negative"] == len(doc["events"]) > 0
    assert run("analytics", "visitors", "--tracks", tracks_file) == 0
    assert json.loads(capsys.readouterr().out) == {"method": "ids", "visitors": 4}
    assert run("analytics", "visitors", "--tracks", tracks_file, "--method", "line", "--line", line) == 0
    assert json.loads(capsys.readouterr().out)["visitors"] == doc["positive"]


def test_eval_commands(files, tracks_file, tmp_path, capsys):
    assert run("eval", "detection", "--detections", files / "dets.txt", "--gt", files / "gt.txt") == 0
    det = json.loads(capsys.readouterr().out)
    assert 0 < det["map50_95"] <= det["ap50"] <= 1
    out = tmp_path / "mota.json"
    assert run("eval", "tracking", "--gt", files / "gt.txt", "--tracks", tracks_file, "--out", out) == 0
    rep = json.loads(out.read_text())
    assert rep["mota"] >= 0.95 and rep["id_switches"] == 0


def test_eval_forecast_identical_files(files, capsys):
    assert run("eval", "forecast", "--pred", files / "sales.csv", "--actual", files / "sales.csv") == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["r2"] == 1 and rep["rmse"] == 0 and rep["mape"] == 0


def test_forecast_train_and_predict(files, tmp_path):
    model = tmp_path / "m.json"
    argv = ["forecast", "train", "--sales", files / "sales.csv", "--model", "gru", "--epochs", 2,
            "--hidden-size", 4, "--window-length", 7, "--batch-size", 8, "--val-days", 20, "--seed", 3,
            "--val-forecast", tmp_path / "val.csv", "--figures", tmp_path / "figs", "--out", model]
    assert run(*argv) == 0
    doc = json.loads(model.read_text())
    assert [m["kind"] for m in doc["models"]] == ["gru", "gru"]
    loss = (tmp_path / "m.json.loss.csv").read_text().splitlines()
    assert loss[0] == "epoch,train_loss,val_loss" and len(loss) == 3
    assert (tmp_path / "val.csv").read_text().splitlines()[0] == "date,store,item,predicted_sales"
    assert (tmp_path / "figs" / "gru_loss.png").exists()
    assert (tmp_path / "figs" / "gru_predicted_vs_actual.png").exists()

    again = tmp_path / "m2.json"
    rerun = [tmp_path / "figs2" if a == tmp_path / "figs" else a for a in argv[:-1]]
    assert run(*rerun, again) == 0
    assert model.read_bytes() == again.read_bytes()
    assert (tmp_path / "m.json.loss.csv").read_bytes() == (tmp_path / "m2.json.loss.csv").read_bytes()
    for name in ("gru_loss.png", "gru_predicted_vs_actual.png"):
        assert (tmp_path / "figs" / name).read_bytes() == (tmp_path / "figs2" / name).read_bytes()

    fc = tmp_path / "fc.csv"
    assert run("forecast", "predict", "--model-file", model, "--sales", files / "sales.csv", "--horizon", 5,
               "--out", fc, "--figure", tmp_path / "fc.png") == 0
    rows = fc.read_text().splitlines()
    assert rows[0] == "date,store,item,predicted_sales" and len(rows) == 1 + 2 * 5
    assert run("forecast", "predict", "--model-file", model, "--sales", files / "sales.csv", "--horizon", -1,
               "--out", fc) == 1


def test_compare_models_prints_table(files, tmp_path, capsys):
    assert run("compare-models", "--sales", files / "sales.csv", "--epochs", 2, "--hidden-size", 4,
               "--window-length", 7, "--val-days", 20, "--json", tmp_path / "m.json") == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].split() == ["Metric", "Linear", "Regression", "LSTM", "GRU"]
    assert "Improvement rate of GRU (%)" in out
    assert set(json.loads((tmp_path / "m.json").read_text())) == {"Linear Regression", "LSTM", "GRU"}


LEAVES = sorted(iter_leaf_parsers(), key=lambda item: item[0])


def help_text(words, monkeypatch, capsys):
    monkeypatch.setenv("COLUMNS", "80")
    with pytest.raises(SystemExit) as info:
        main([*words, "--help"])
    assert info.value.code == 0
    return capsys.readouterr().out


@pytest.mark.parametrize("words,parser", LEAVES, ids=["-".join(w) for w, _ in LEAVES])
def test_help_lists_every_flag(words, parser, monkeypatch, capsys):
    text = help_text(words, monkeypatch, capsys)
    flags = [s for a in parser._actions for s in a.option_strings]
    assert flags and all(f in text for f in flags)
    snapshot = SNAPSHOTS / ("_".join(words) + ".txt")
    assert text == snapshot.read_text()
