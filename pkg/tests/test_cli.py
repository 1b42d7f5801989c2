import json
from datetime import date, timedelta

import pytest
import yaml

from bugcast import bundled
from bugcast.cli import main
from bugcast.ingest import load_series_csv, save_series_csv

from conftest import weekly


def write_config(tmp_path, models, **over):
    doc = {
        "name": "test",
        "seed": 3,
        "out_dir": "out",
        "data": {"source": "bundled"},
        "calendar": "bundled",
        "outliers": None,
        "split": {"train_end": "2018-12-31", "test_end": "2019-12-30"},
        "horizon": {"steps": 13, "stride": 13},
        "models": models,
    }
    doc.update(over)
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(doc), encoding="utf-8")
    return path


def read_forecast(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "week_start,predicted"
    return [(date.fromisoformat(w), float(v)) for w, v in (ln.split(",") for ln in lines[1:])]


# --- exit codes ----------------------------------------------------------------


def test_fetch_unreachable_host_exits_2(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("BUGCAST_CACHE_DIR", str(tmp_path / "cache"))
    code = main(["fetch", "--endpoint", "http://127.0.0.1:9", "--from", "2015-01-05", "--to", "2015-02-01",
                 "--out-dir", str(tmp_path)])
    assert code == 2
    assert "attempt" in capsys.readouterr().err


def test_fetch_writes_series_and_log(tracker, tmp_path, monkeypatch):
    url, _ = tracker
    monkeypatch.setenv("BUGCAST_CACHE_DIR", str(tmp_path / "cache"))
    out = tmp_path / "s.csv"
    assert main(["fetch", "--endpoint", url, "--from", "2015-01-05", "--to", "2015-01-25",
                 "--output", str(out), "--page-size", "10"]) == 0
    s = load_series_csv(out)
    assert len(s) == 3 and sum(s.counts) == 25
    assert "records=25" in (tmp_path / "fetch.log").read_text()


def test_repeat_fetch_hits_cache(tracker, tmp_path, monkeypatch, caplog):
    url, handler = tracker
    monkeypatch.setenv("BUGCAST_CACHE_DIR", str(tmp_path / "cache"))
    argv = ["fetch", "--endpoint", url, "--from", "2015-01-05", "--to", "2015-01-25"]
    assert main(argv + ["--output", str(tmp_path / "a.csv")]) == 0
    calls = handler.calls
    with caplog.at_level("INFO", logger="bugcast"):
        assert main(argv + ["--output", str(tmp_path / "b.csv")]) == 0
    assert handler.calls == calls
    assert "cache hit" in caplog.text
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_diagnose_short_series_exits_3(tmp_path):
    p = tmp_path / "short.csv"
    save_series_csv(weekly([5, 6, 7, 8, 9]), p)
    assert main(["diagnose", "--series", str(p), "--out-dir", str(tmp_path)]) == 3


def test_diagnose_bundled(tmp_path):
    assert main(["diagnose", "--out-dir", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "diagnostics.json").read_text())
    assert doc["adf"]["p_value"] < 0.05
    assert doc["suggested_orders"] == {"p": 2, "q": 0}
    rows = (tmp_path / "correlogram.csv").read_text().splitlines()
    assert rows[0] == "lag,acf,pacf,band" and len(rows) == 22


def test_missing_config_exits_2(tmp_path):
    assert main(["diagnose", "--config", str(tmp_path / "nope.yaml")]) == 2


def test_unknown_config_key_exits_3(tmp_path):
    path = write_config(tmp_path, [{"family": "EXP"}], colour="blue")
    assert main(["diagnose", "--config", str(path)]) == 3


def test_bad_yaml_exits_3(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("models: [unclosed\n")
    assert main(["diagnose", "--config", str(path)]) == 3


def test_unknown_model_label_exits_3(tmp_path):
    path = write_config(tmp_path, [{"family": "EXP"}])
    assert main(["evaluate", "--config", str(path), "--models", "RFx"]) == 3


# --- evaluate and report ------------------------------------------------------------


def test_single_model_evaluate_two_rows(tmp_path, capsys):
    path = write_config(tmp_path, [{"family": "ARIMA", "params": {"p": 2, "d": 0, "q": 0}}])
    assert main(["evaluate", "--config", str(path)]) == 0
    doc = json.loads((tmp_path / "out" / "report.json").read_text())
    assert [r["model"] for r in doc["rows"]] == ["ARIMA", "Base"]
    assert set(doc["horizon"]["cumulative_error_pct"]) == {"ARIMA", "Base"}
    trace = (tmp_path / "out" / "trace_ARIMA.csv").read_text().splitlines()
    assert trace[0] == "week_start,actual,predicted" and len(trace) == 53
    horizon = (tmp_path / "out" / "horizon_Base.csv").read_text().splitlines()
    assert horizon[0] == "step,cumulative_error_pct" and len(horizon) == 14
    assert "Base" in capsys.readouterr().out

    assert main(["report", "--config", str(path)]) == 0
    md = (tmp_path / "out" / "report.md").read_text()
    assert md.startswith("| Method |") and "| ARIMA |" in md


def test_dump_features(tmp_path):
    path = write_config(tmp_path, [{"family": "EXP"}])
    feats = tmp_path / "x.csv"
    assert main(["evaluate", "--config", str(path), "--no-horizon", "--dump-features", str(feats)]) == 0
    lines = feats.read_text().splitlines()
    assert lines[0] == "week_start,branch_release,week_of_month,month_of_year,year"
    assert len(lines) == 523


def test_report_without_evaluate_exits_2(tmp_path):
    assert main(["report", "--out-dir", str(tmp_path)]) == 2


def test_seed_override_changes_report_seed(tmp_path):
    path = write_config(tmp_path, [{"family": "EXP"}])
    assert main(["evaluate", "--config", str(path), "--no-horizon", "--seed", "17"]) == 0
    assert json.loads((tmp_path / "out" / "report.json").read_text())["seed"] == 17


# --- forecast -------------------------------------------------------------------------


def test_naive_forecast_repeats_last_value(tmp_path):
    path = write_config(tmp_path, [{"family": "Naive"}])
    assert main(["forecast", "--config", str(path)]) == 0
    rows = read_forecast(tmp_path / "out" / "forecast_Base.csv")
    last = bundled.arrival_series()
    assert len(rows) == 13
    assert {v for _, v in rows} == {float(last.counts[-1])}
    assert rows[0][0] == last.end + timedelta(weeks=1)


def test_rfx_forecast_with_extended_calendar(tmp_path):
    cal = tmp_path / "releases.csv"
    text = bundled.data_path("releases.csv").read_text()
    cal.write_text(text.rstrip("\n") + "\n72.0,2020-01-07\n73.0,2020-02-11\n74.0,2020-03-10\n75.0,2020-04-07\n")
    models = [{"family": "RF", "exogenous": True, "params": {"n_trees": 20}}]
    path = write_config(tmp_path, models, calendar=str(cal))
    assert main(["forecast", "--config", str(path), "--model", "RFx"]) == 0
    rows = read_forecast(tmp_path / "out" / "forecast_RFx.csv")
    assert len(rows) == 13 and all(v >= 0 for _, v in rows)


def test_arimax_forecast_without_future_calendar_exits_3(tmp_path, capsys):
    path = write_config(tmp_path, [{"family": "ARIMA", "exogenous": True}])
    assert main(["forecast", "--config", str(path)]) == 3
    assert "calendar" in capsys.readouterr().err
    assert main(["forecast", "--config", str(path), "--assume-no-releases"]) == 0


def test_saved_model_reproduces_forecast(tmp_path):
    path = write_config(tmp_path, [{"family": "ARIMA"}])
    saved = tmp_path / "m.json"
    assert main(["forecast", "--config", str(path), "--save-model", str(saved), "--output", str(tmp_path / "a.csv")]) == 0
    assert main(["forecast", "--config", str(path), "--model-file", str(saved), "--output", str(tmp_path / "b.csv")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_model_file_without_history_end_exits_3(tmp_path):
    path = write_config(tmp_path, [{"family": "ARIMA"}])
    saved = tmp_path / "m.json"
    main(["forecast", "--config", str(path), "--save-model", str(saved)])
    doc = json.loads(saved.read_text())
    del doc["history_end"]
    saved.write_text(json.dumps(doc))
    assert main(["forecast", "--config", str(path), "--model-file", str(saved)]) == 3


def test_nonpositive_horizon_exits_3(tmp_path):
    path = write_config(tmp_path, [{"family": "EXP"}])
    assert main(["forecast", "--config", str(path), "--horizon", "0"]) == 3


@pytest.mark.parametrize("argv", [["--help"], ["evaluate", "--help"]])
def test_help(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 0
