import csv
import io

import pytest

from stocksim.cli import bundled, main
from stocksim.market_data import parse_bars_csv


@pytest.fixture(scope="module")
def small_data(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "bars.csv"
    assert main(["synth", "--out", str(path), "--stocks", "6", "--sectors", "2",
                 "--length", "260", "--seed", "5"]) == 0
    return path


def test_synth_demo_matches_bundled(tmp_path):
    out = tmp_path / "demo.csv"
    sectors = tmp_path / "sectors.csv"
    assert main(["synth", "--demo", "--out", str(out), "--sectors-out", str(sectors)]) == 0
    assert out.read_bytes() == bundled("demo_bars.csv").read_bytes()
    assert len(sectors.read_text().splitlines()) == 8


def test_synth_sizes(small_data):
    u = parse_bars_csv(small_data)
    assert len(u) == 6
    assert all(len(s) == 260 for s in u)


def test_similar(capsys):
    assert main(["similar", "--target", "KO", "--function", "pearson", "--k", "3"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["symbol", "distance", "rank"]
    assert [r[2] for r in rows[1:]] == ["1", "2", "3"]
    assert "KO" not in [r[0] for r in rows[1:]]
    distances = [float(r[1]) for r in rows[1:]]
    assert distances == sorted(distances)


def test_similar_unknown_target(capsys):
    assert main(["similar", "--target", "NOPE"]) == 2
    assert "error" in capsys.readouterr().err


def test_backtest_and_report(small_data, tmp_path, capsys):
    cfg = tmp_path / "grid.cfg"
    cfg.write_text("folds = 2\nmodel = gbt_regressor, rf_classifier\nrf_trees = 4\n"
                   "gbt_stages = 4\nsimilarity_fn = none, euclidean\nk = 2\n")
    out = tmp_path / "res.csv"
    assert main(["backtest", "--data", str(small_data), "--config", str(cfg),
                 "--out", str(out), "--stocks", "S00,S01", "--jobs", "2"]) == 0
    assert "16 rows written" in capsys.readouterr().out
    assert len(out.read_text().splitlines()) == 17

    figs = tmp_path / "figs"
    table = tmp_path / "agg.csv"
    assert main(["report", "--in", str(out), "--group-by", "similarity_fn,model",
                 "--out", str(table), "--figures", str(figs)]) == 0
    lines = table.read_text().splitlines()
    assert lines[0].startswith("similarity_fn,model,accuracy")
    assert len(lines) == 5
    pngs = sorted(p.name for p in figs.glob("*.png"))
    assert "profit_heatmap.png" in pngs and len(pngs) >= 5
    assert all((figs / p).read_bytes()[:4] == b"\x89PNG" for p in pngs)


def test_backtest_bad_config(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert main(["backtest", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 2
    assert "colour" in capsys.readouterr().err


def test_report_missing_file(tmp_path):
    assert main(["report", "--in", str(tmp_path / "none.csv"), "--group-by", "model"]) == 2
