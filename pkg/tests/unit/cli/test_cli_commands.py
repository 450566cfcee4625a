import json

import pandas as pd
import pytest
from click.testing import CliRunner

from windcast.cli import cli

HEADER = (
    "#YY  MM DD hh mm WDIR WSPD GST  WVHT   DPD   APD MWD   PRES  ATMP  WTMP  DEWP  VIS  TIDE\n"
    "#yr  mo dy hr mn degT m/s  m/s     m   sec   sec degT   hPa  degC  degC  degC  nmi    ft\n"
)


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def series_file(runner, tmp_path):
    path = tmp_path / "synthetic.csv"
    result = runner.invoke(cli, ["fixture", "--rows", "400", "--seed", "5", "--out", str(path)])
    assert result.exit_code == 0, result.output
    return path


class TestPhysicsCommands:
    def test_convert_near_rated(self, runner):
        result = runner.invoke(cli, ["physics", "convert", "--speed", "9.3"])
        assert result.exit_code == 0, result.output
        assert "hub_speed: 12.38" in result.output
        assert "band: partial_load" in result.output
        assert "note: below the rated speed 12.4 m/s" in result.output

    def test_convert_domain_error_exits_3(self, runner):
        result = runner.invoke(cli, ["physics", "convert", "--speed", "5", "--height", "0.0001"])
        assert result.exit_code == 3
        assert "error[domain_error]" in result.output

    def test_bands(self, runner):
        result = runner.invoke(cli, ["physics", "bands"])
        assert result.exit_code == 0, result.output
        assert "ratio: 1.3319" in result.output
        assert "cut_in: 2.2523" in result.output

    def test_turbine_file(self, runner, tmp_path):
        path = tmp_path / "turbine.toml"
        path.write_text("[turbine]\nhub_height = 150.0\n")
        result = runner.invoke(cli, ["--turbine", str(path), "physics", "convert", "--speed", "5"])
        assert result.exit_code == 0, result.output
        assert "at 150 m" in result.output


class TestUsage:
    def test_horizon_longer_than_past(self, runner):
        result = runner.invoke(cli, ["--window", "1,18", "physics", "bands"])
        assert result.exit_code == 1
        assert "error[invalid_window]" in result.output

    def test_malformed_window(self, runner):
        result = runner.invoke(cli, ["--window", "abc", "physics", "bands"])
        assert result.exit_code == 1

    def test_unknown_command(self, runner):
        assert runner.invoke(cli, ["forecast-everything"]).exit_code == 1

    def test_missing_required_option(self, runner):
        assert runner.invoke(cli, ["physics", "convert"]).exit_code == 1

    def test_unknown_model(self, runner, series_file, tmp_path):
        result = runner.invoke(cli, ["--out-dir", str(tmp_path), "train", str(series_file), "--model", "lstm"])
        assert result.exit_code == 1
        assert "error[unknown_model]" in result.output

    def test_version(self, runner):
        result = runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert "1.0.0" in result.output


class TestDataCommands:
    def test_ingest_writes_series_and_log(self, runner, tmp_path):
        source = tmp_path / "42020h2021.txt"
        source.write_text(
            HEADER
            + "2021 07 25 22 30 120  5.0  6.2 99.00 99.00 99.00 999 1012.3  28.1  29.0  24.5 99.0 99.00\n"
            + "2021 07 25 22 50 130  7.0  8.2 99.00 99.00 99.00 999 1012.1  28.0  29.0 999.0 99.0 99.00\n"
        )
        out = tmp_path / "repaired.csv"
        result = runner.invoke(cli, ["ingest", str(source), "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert "station: 42020" in result.output
        assert "rows: 3" in result.output
        assert "inserted_rows: 1" in result.output
        frame = pd.read_csv(out)
        assert list(frame["WSPD"]) == [5.0, 6.0, 7.0]
        assert (tmp_path / "repaired.repair.jsonl").exists()

    def test_malformed_file_exits_2(self, runner, tmp_path):
        source = tmp_path / "broken.txt"
        source.write_text(HEADER + "2021 07 25 22 30 120 5.0\n")
        result = runner.invoke(cli, ["ingest", str(source)])
        assert result.exit_code == 2
        assert "error[parse_error]: line 3" in result.output

    def test_fixture_then_ingest(self, runner, series_file, tmp_path):
        result = runner.invoke(cli, ["--out-dir", str(tmp_path / "out"), "ingest", str(series_file)])
        assert result.exit_code == 0, result.output
        assert "rows: 400" in result.output
        assert "inserted_rows: 0" in result.output
        assert (tmp_path / "out" / "synthetic_repaired.csv").exists()

    def test_features(self, runner, series_file, tmp_path):
        out_dir = tmp_path / "out"
        result = runner.invoke(cli, ["--out-dir", str(out_dir), "features", str(series_file), "--trees", "3"])
        assert result.exit_code == 0, result.output
        assert "kept: " in result.output
        for name in ("correlation.csv", "correlation.json", "importance.csv", "importance.json"):
            assert (out_dir / name).exists()
        weights = json.loads((out_dir / "importance.json").read_text())["weights"]
        assert sum(weights.values()) == pytest.approx(1.0, abs=1e-5)


class TestModelCommands:
    def test_train_then_predict(self, runner, series_file, tmp_path):
        model_file = tmp_path / "model.json"
        result = runner.invoke(cli, ["train", str(series_file), "--model", "ridge", "--model-file", str(model_file)])
        assert result.exit_code == 0, result.output
        assert "best_epoch: 0" in result.output
        out = tmp_path / "predictions.csv"
        result = runner.invoke(cli, ["predict", str(series_file), "--model-file", str(model_file), "--out", str(out)])
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(out)
        assert len(frame) == 400 - 18
        assert list(frame.columns) == ["timestamp", "t_index", "actual", "prediction"]

    def test_cases_are_reproducible(self, runner, series_file, tmp_path):
        outputs = []
        for name in ("first", "second"):
            out_dir = tmp_path / name
            result = runner.invoke(cli, [
                "--out-dir", str(out_dir), "--max-epochs", "1",
                "cases", str(series_file), "--models", "ridge,fcnn", "--cases", "1,3",
            ])
            assert result.exit_code == 0, result.output
            assert "improvement[pooled]" in result.output
            outputs.append(out_dir)
        for name in ("cases.csv", "cases.json", "radar_ridge.svg"):
            assert (outputs[0] / name).read_bytes() == (outputs[1] / name).read_bytes()

    def test_cases_with_bad_id(self, runner, series_file, tmp_path):
        result = runner.invoke(cli, ["--out-dir", str(tmp_path), "cases", str(series_file), "--cases", "12"])
        assert result.exit_code == 1
        assert "error[unknown_case]" in result.output

    def test_compare(self, runner, series_file, tmp_path):
        result = runner.invoke(cli, ["--out-dir", str(tmp_path), "compare", str(series_file), "--models", "ridge"])
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(tmp_path / "comparison.csv")
        assert list(frame["model"]) == ["persistence", "ridge"]
        assert (tmp_path / "comparison.svg").exists()

    def test_sweep_marks_short_cells(self, runner, series_file, tmp_path):
        result = runner.invoke(cli, ["--out-dir", str(tmp_path), "sweep", str(series_file), "--model", "ridge"])
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(tmp_path / "sweep_ridge.csv")
        assert len(frame) == 22
        assert frame["skipped"].any()
        assert not frame.loc[frame["past_steps"] == 6, "skipped"].any()
