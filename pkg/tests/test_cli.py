import json
import subprocess
import sys

import pytest

from kneescout.cli import main


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("fleet")
    code = run_cli(
        "synth", "--count", "12", "--seed", "5", "--n-cycles", "1200",
        "--out-dir", str(d), "--with-cycle-data",
    )
    assert code == 0
    return d


class TestSynth:
    def test_outputs_present(self, synth_dir):
        assert len(list(synth_dir.glob("*.csv"))) >= 12
        assert len(list(synth_dir.glob("*.meta.json"))) == 12
        assert len(list(synth_dir.glob("*.truth.json"))) == 12
        assert len(list(synth_dir.glob("*.cycles.csv"))) == 12

    def test_deterministic_bytes(self, synth_dir, tmp_path):
        again = tmp_path / "again"
        assert run_cli(
            "synth", "--count", "12", "--seed", "5", "--n-cycles", "1200",
            "--out-dir", str(again), "--with-cycle-data",
        ) == 0
        for p in sorted(synth_dir.glob("*")):
            assert (again / p.name).read_bytes() == p.read_bytes()


class TestIdentify:
    def test_smoke_and_determinism(self, synth_dir, tmp_path):
        src = sorted(synth_dir.glob("fleet-*.csv"))[0]
        out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
        assert run_cli("identify", "--input", str(src), "--out", str(out1)) == 0
        assert run_cli("identify", "--input", str(src), "--out", str(out2)) == 0
        assert out1.read_bytes() == out2.read_bytes()
        payload = json.loads(out1.read_text())
        assert payload["method"] == "curvature_rea"
        assert payload["onset_cycle"] < payload["knee_cycle"]
        assert payload["params"]["mp_window"] == 3

    def test_pipeline_flags_respected(self, synth_dir, tmp_path):
        src = sorted(synth_dir.glob("fleet-*.csv"))[0]
        out = tmp_path / "r.json"
        assert run_cli(
            "identify", "--input", str(src), "--sg-window", "81",
            "--cac-window", "12", "--out", str(out),
        ) == 0
        payload = json.loads(out.read_text())
        assert payload["params"]["sg_window"] == 81
        assert payload["params"]["cac_window"] == 12

    def test_config_file_defaults_and_flag_override(self, synth_dir, tmp_path):
        src = sorted(synth_dir.glob("fleet-*.csv"))[0]
        cfg = tmp_path / "knee.cfg"
        cfg.write_text("sg_window = 81\nexclusion_radius = 10\n")
        out = tmp_path / "r.json"
        assert run_cli(
            "--config", str(cfg), "identify", "--input", str(src),
            "--exclusion", "20", "--out", str(out),
        ) == 0
        payload = json.loads(out.read_text())
        assert payload["params"]["sg_window"] == 81  # from config
        assert payload["params"]["exclusion_radius"] == 20  # flag wins

    def test_cac_window_sentinel_accepted(self, synth_dir, tmp_path):
        src = sorted(synth_dir.glob("fleet-*.csv"))[0]
        out = tmp_path / "r.json"
        assert run_cli("identify", "--input", str(src), "--cac-window", "0",
                       "--out", str(out)) == 0
        assert json.loads(out.read_text())["params"]["cac_window"] == 0

    def test_missing_input_is_input_error(self, tmp_path):
        out = tmp_path / "r.json"
        bad = tmp_path / "nope.csv"
        bad.write_text("cycle,discharge_capacity_ah\n5,1.0\n4,0.9\n6,0.8\n")
        assert run_cli("identify", "--input", str(bad), "--q-nom", "1.1",
                       "--out", str(out)) == 1


class TestBaconWatts:
    def test_short_series_is_numerical_failure(self, tmp_path, capsys):
        p = tmp_path / "short.csv"
        p.write_text(
            "cycle,discharge_capacity_ah\n" +
            "".join(f"{i},{1.0 - 0.01 * i}\n" for i in range(1, 6))
        )
        code = run_cli("baconwatts", "--input", str(p), "--q-nom", "1.0",
                       "--out", str(tmp_path / "r.json"))
        assert code == 2
        assert "TooShort" in capsys.readouterr().err

    def test_report_written(self, synth_dir, tmp_path):
        src = sorted(synth_dir.glob("fleet-*.csv"))[0]
        out = tmp_path / "bw.json"
        assert run_cli("baconwatts", "--input", str(src), "--out", str(out)) == 0
        assert json.loads(out.read_text())["method"] == "double_bacon_watts"


class TestUsageErrors:
    def test_unknown_flag_exits_1(self, capsys):
        assert run_cli("identify", "--nope") == 1
        assert "usage" in capsys.readouterr().err.lower()

    def test_unknown_subcommand_exits_1(self):
        assert run_cli("frobnicate") == 1

    def test_no_subcommand_exits_1(self):
        assert run_cli() == 1

    def test_json_errors_single_line(self, tmp_path, capsys):
        p = tmp_path / "short.csv"
        p.write_text("cycle,discharge_capacity_ah\n1,1.0\n2,0.9\n3,0.8\n")
        code = run_cli("--json-errors", "baconwatts", "--input", str(p),
                       "--q-nom", "1.0", "--out", str(tmp_path / "r.json"))
        assert code == 2
        err = capsys.readouterr().err.strip()
        assert "\n" not in err
        payload = json.loads(err)
        assert payload["error"] == "TooShort"
        assert payload["exit_code"] == 2

    def test_version_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli("--version")
        assert exc.value.code == 0
        assert "knee-scout" in capsys.readouterr().out


class TestBatch:
    def test_table_csv_mode(self, synth_dir, tmp_path):
        out = tmp_path / "table.csv"
        assert run_cli(
            "batch", "--dir", str(synth_dir), "--methods", "curvature",
            "--sg-window", "81", "--cac-window", "12", "--out", str(out),
        ) == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0].startswith("cell_id,method")
        assert sum(1 for ln in lines if ln.startswith("#")) >= 1

    def test_directory_mode_with_both_methods(self, synth_dir, tmp_path):
        out = tmp_path / "reportdir"
        assert run_cli(
            "batch", "--dir", str(synth_dir), "--methods", "curvature,baconwatts",
            "--sg-window", "81", "--cac-window", "12", "--jobs", "2",
            "--out", str(out),
        ) == 0
        assert (out / "table.csv").exists()
        assert (out / "scatter_curvature_rea_knee.csv").exists()
        assert (out / "scatter_double_bacon_watts_onset.csv").exists()

    def test_rows_sorted_by_cell_id(self, synth_dir, tmp_path):
        out = tmp_path / "table.csv"
        run_cli("batch", "--dir", str(synth_dir), "--methods", "curvature",
                "--sg-window", "81", "--cac-window", "12", "--out", str(out))
        ids = [ln.split(",")[0] for ln in out.read_text().strip().split("\n")[1:]
               if not ln.startswith("#")]
        assert ids == sorted(ids)


class TestPredictionPipeline:
    def test_features_train_predict_sensitivity(self, synth_dir, tmp_path):
        feats = tmp_path / "features.csv"
        assert run_cli("features", "--cycles", str(synth_dir), "--budget", "30",
                       "--out", str(feats)) == 0
        labels = tmp_path / "labels.csv"
        rows = ["cell_id,onset_cycle"]
        for t in sorted(synth_dir.glob("*.truth.json")):
            obj = json.loads(t.read_text())
            rows.append(f"{obj['cell_id']},{obj['ground_truth']['onset_cycle']}")
        labels.write_text("\n".join(rows) + "\n")

        model = tmp_path / "model.json"
        assert run_cli("train", "--features", str(feats), "--labels", str(labels),
                       "--n-trees", "40", "--out", str(model)) == 0
        payload = json.loads(model.read_text())
        assert set(payload) == {"init_value", "learning_rate", "n_features", "trees"}

        preds = tmp_path / "preds.csv"
        assert run_cli("predict", "--model", str(model), "--features", str(feats),
                       "--out", str(preds)) == 0
        lines = preds.read_text().strip().split("\n")
        assert lines[0] == "cell_id,predicted_onset_cycle"
        assert len(lines) == 13

        sweep = tmp_path / "sweep.csv"
        assert run_cli("sensitivity", "--dir", str(synth_dir), "--budgets", "15:16",
                       "--repeats", "1", "--seed", "3", "--out", str(sweep)) == 0
        lines = sweep.read_text().strip().split("\n")
        assert lines[0] == "budget,mean_rmse,mean_mape"
        assert len(lines) == 3


class TestEntryPoint:
    def test_module_invocation(self):
        proc = subprocess.run(
            [sys.executable, "-m", "kneescout.cli", "--version"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert "knee-scout" in proc.stdout
