import filecmp
import json
import os

import pytest

from speechbias.cli import main
from speechbias.synthetic import SyntheticSpec, gen_cohort


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture()
def tone_data(tmp_path):
    out = tmp_path / "tones"
    assert run_cli("synth", "--out", str(out), "--preset", "tones") == 0
    return out


@pytest.fixture()
def cohort_data(tmp_path):
    out = tmp_path / "cohort"
    gen_cohort(SyntheticSpec(n_per_cell=4, dim=4, seed=17, separation=4.0), out)
    config = {
        "task": "ci_vs_nci",
        "condition": "IMB",
        "feature": "w2v2-layer-1",
        "classifier": "rf",
        "seeds": [0, 50],
        "balance_seed": 7,
        "manifest": "manifest.csv",
        "embedding_index": "index.csv",
    }
    config_path = out / "config.json"
    config_path.write_text(json.dumps(config))
    return out, config_path


class TestExtractFeatures:
    def test_three_tones_three_rows(self, tone_data, tmp_path, capsys):
        out = tmp_path / "features"
        assert run_cli("extract-features", "--manifest", str(tone_data / "manifest.csv"),
                       "--out", str(out)) == 0
        lines = (out / "mfcc40.csv").read_text().splitlines()
        assert len(lines) == 4  # header + 3 rows
        assert lines[0].startswith("utterance_id,f1,")

    def test_missing_wav_listed_and_exit_2(self, tone_data, tmp_path, capsys):
        os.remove(tone_data / "tone2.wav")
        out = tmp_path / "features"
        assert run_cli("extract-features", "--manifest", str(tone_data / "manifest.csv"),
                       "--out", str(out)) == 2
        err = capsys.readouterr().err
        assert "U00002" in err

    def test_rerun_is_byte_identical(self, tone_data, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        run_cli("extract-features", "--manifest", str(tone_data / "manifest.csv"),
                "--out", str(out_a))
        run_cli("extract-features", "--manifest", str(tone_data / "manifest.csv"),
                "--out", str(out_b))
        assert filecmp.cmp(out_a / "mfcc40.csv", out_b / "mfcc40.csv", shallow=False)


class TestRun:
    def test_run_emits_artifacts(self, cohort_data, tmp_path):
        _, config_path = cohort_data
        out = tmp_path / "run"
        assert run_cli("run", "--config", str(config_path), "--out", str(out)) == 0
        for name in ("run_manifest.json", "metrics.csv", "scores.csv", "run_config.json"):
            assert (out / name).exists()
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert set(manifest["input_hashes"]) == {"manifest", "embedding_index"}

    def test_rerun_byte_identical(self, cohort_data, tmp_path):
        _, config_path = cohort_data
        out_a, out_b = tmp_path / "ra", tmp_path / "rb"
        assert run_cli("run", "--config", str(config_path), "--out", str(out_a)) == 0
        assert run_cli("run", "--config", str(config_path), "--out", str(out_b)) == 0
        for name in ("run_manifest.json", "metrics.csv", "scores.csv"):
            assert filecmp.cmp(out_a / name, out_b / name, shallow=False)

    def test_invalid_classifier_exits_1(self, cohort_data, tmp_path, capsys):
        out_dir, config_path = cohort_data
        raw = json.loads(config_path.read_text())
        raw["classifier"] = "adaboost"
        bad = out_dir / "bad.json"
        bad.write_text(json.dumps(raw))
        assert run_cli("run", "--config", str(bad), "--out", str(tmp_path / "x")) == 1
        assert "config error" in capsys.readouterr().err

    def test_unknown_key_exits_1(self, cohort_data, tmp_path):
        out_dir, config_path = cohort_data
        raw = json.loads(config_path.read_text())
        raw["mystery_flag"] = True
        bad = out_dir / "bad2.json"
        bad.write_text(json.dumps(raw))
        assert run_cli("run", "--config", str(bad), "--out", str(tmp_path / "x")) == 1

    def test_missing_path_exits_1(self, cohort_data, tmp_path):
        out_dir, config_path = cohort_data
        raw = json.loads(config_path.read_text())
        raw["manifest"] = "not_there.csv"
        bad = out_dir / "bad3.json"
        bad.write_text(json.dumps(raw))
        assert run_cli("run", "--config", str(bad), "--out", str(tmp_path / "x")) == 1

    def test_seed_override(self, cohort_data, tmp_path):
        _, config_path = cohort_data
        out = tmp_path / "run1"
        assert run_cli("run", "--config", str(config_path), "--out", str(out),
                       "--seeds", "0") == 0
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert [r["seed"] for r in manifest["per_seed"]] == [0]

    def test_jobs_do_not_change_bytes(self, cohort_data, tmp_path):
        _, config_path = cohort_data
        out_a, out_b = tmp_path / "j1", tmp_path / "j2"
        assert run_cli("run", "--config", str(config_path), "--out", str(out_a),
                       "--jobs", "1") == 0
        assert run_cli("run", "--config", str(config_path), "--out", str(out_b),
                       "--jobs", "2") == 0
        for name in ("run_manifest.json", "metrics.csv", "scores.csv"):
            assert filecmp.cmp(out_a / name, out_b / name, shallow=False)

    def test_classifier_params_echoed(self, cohort_data, tmp_path):
        _, config_path = cohort_data
        out = tmp_path / "run2"
        assert run_cli("run", "--config", str(config_path), "--out", str(out)) == 0
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert manifest["classifier_params"]["n_trees"] == 100
        assert manifest["classifier_params"]["seed"] == 42

    def test_feature_csv_route(self, tmp_path):
        from speechbias.cohort import build_cohort, read_manifest
        from speechbias.embeddings import LayerId, load_pooled_layer
        from speechbias.features import FeatureVector, write_feature_csv

        data = tmp_path / "data"
        gen_cohort(SyntheticSpec(n_per_cell=4, dim=4, seed=23, separation=4.0), data)
        pooled = load_pooled_layer(data / "index.csv", LayerId("hidden", 1))
        vectors = [FeatureVector(v.values, "csv4", u) for u, v in sorted(pooled.items())]
        write_feature_csv(data / "features.csv", vectors)
        config = {
            "task": "ci_vs_nci", "condition": "IMB", "feature": "csv4",
            "classifier": "rf", "seeds": [0], "manifest": "manifest.csv",
            "feature_csv": "features.csv", "feature_dim": 4,
        }
        config_path = data / "csv_config.json"
        config_path.write_text(json.dumps(config))
        assert run_cli("run", "--config", str(config_path),
                       "--out", str(tmp_path / "run")) == 0


class TestBiasReport:
    def test_report_from_run_dir(self, cohort_data, tmp_path):
        data_dir, config_path = cohort_data
        run_dir = tmp_path / "run"
        assert run_cli("run", "--config", str(config_path), "--out", str(run_dir)) == 0
        out = tmp_path / "bias"
        assert run_cli("bias-report", "--run", str(run_dir),
                       "--manifest", str(data_dir / "manifest.csv"),
                       "--out", str(out)) == 0
        lines = (out / "bias_report.csv").read_text().splitlines()
        assert lines[0] == "dimension,group,n_ci,n_nci,Se,Sp,delta,auc,overlap"
        assert len(lines) == 7  # header + 6 group rows
        assert (out / "disparity.csv").exists()
        assert (out / "distributions.csv").exists()

    def test_missing_scores_exits_2(self, cohort_data, tmp_path, capsys):
        data_dir, config_path = cohort_data
        run_dir = tmp_path / "run"
        run_cli("run", "--config", str(config_path), "--out", str(run_dir))
        os.remove(run_dir / "scores.csv")
        assert run_cli("bias-report", "--run", str(run_dir),
                       "--manifest", str(data_dir / "manifest.csv"),
                       "--out", str(tmp_path / "bias")) == 2
        assert "scores" in capsys.readouterr().err

    def test_dimension_selection(self, cohort_data, tmp_path):
        data_dir, config_path = cohort_data
        run_dir = tmp_path / "run"
        run_cli("run", "--config", str(config_path), "--out", str(run_dir))
        out = tmp_path / "bias"
        assert run_cli("bias-report", "--run", str(run_dir),
                       "--manifest", str(data_dir / "manifest.csv"),
                       "--out", str(out), "--dimensions", "gender") == 0
        lines = (out / "bias_report.csv").read_text().splitlines()
        assert len(lines) == 3


class TestSweep:
    def test_sweep_rows(self, tmp_path):
        from speechbias.embeddings import LayerId
        from speechbias.synthetic import gen_layer_archives

        data = tmp_path / "data"
        gen_layer_archives(
            SyntheticSpec(n_per_cell=3, dim=4, seed=31),
            data,
            {LayerId("hidden", 1): 0.5, LayerId("hidden", 2): 3.0},
        )
        config = {
            "task": "ci_vs_nci", "condition": "IMB", "feature": "w2v2-layer-1",
            "classifier": "rf", "seeds": [0, 50], "manifest": "manifest.csv",
            "embedding_index": "index.csv",
        }
        config_path = data / "config.json"
        config_path.write_text(json.dumps(config))
        out = tmp_path / "sweep"
        assert run_cli("sweep", "--config", str(config_path), "--layers", "hidden:1-2",
                       "--out", str(out)) == 0
        lines = (out / "layer_sweep.csv").read_text().splitlines()
        assert len(lines) == 3


class TestCheckTables:
    def test_bundled_tables_pass(self, capsys):
        assert run_cli("check-tables") == 0
        out = capsys.readouterr().out
        assert "known source inconsistency" in out
        assert "consistent" in out

    def test_single_table(self):
        assert run_cli("check-tables", "--table", "ci_nci") == 0


class TestSynth:
    def test_quickstart_preset(self, tmp_path):
        out = tmp_path / "q"
        assert run_cli("synth", "--out", str(out), "--preset", "quickstart") == 0
        assert (out / "manifest.csv").exists()
        assert (out / "index.csv").exists()

    def test_unknown_subcommand_exits_1(self):
        assert run_cli("frobnicate") == 1


def test_quickstart_flow_end_to_end(tmp_path):
    """synth -> run -> bias-report completes quickly with all artifacts."""
    import time

    t0 = time.perf_counter()
    data = tmp_path / "data"
    assert run_cli("synth", "--out", str(data), "--preset", "quickstart") == 0
    config = {
        "task": "ci_vs_nci", "condition": "CIGB", "feature": "w2v2-layer-1",
        "classifier": "rf", "manifest": "manifest.csv", "embedding_index": "index.csv",
    }
    config_path = data / "config.json"
    config_path.write_text(json.dumps(config))
    run_dir = tmp_path / "run"
    assert run_cli("run", "--config", str(config_path), "--out", str(run_dir)) == 0
    bias_dir = tmp_path / "bias"
    assert run_cli("bias-report", "--run", str(run_dir),
                   "--manifest", str(data / "manifest.csv"),
                   "--out", str(bias_dir)) == 0
    for name in ("run_manifest.json", "metrics.csv", "scores.csv"):
        assert (run_dir / name).exists()
    for name in ("bias_report.csv", "disparity.csv", "distributions.csv"):
        assert (bias_dir / name).exists()
    assert time.perf_counter() - t0 < 300


def test_data_root_env_resolves_relative_paths(tmp_path, monkeypatch):
    data = tmp_path / "data"
    gen_cohort(SyntheticSpec(n_per_cell=3, dim=4, seed=19, separation=4.0), data)
    config = {
        "task": "ci_vs_nci", "condition": "IMB", "feature": "w2v2-layer-1",
        "classifier": "rf", "seeds": [0], "manifest": "manifest.csv",
        "embedding_index": "index.csv",
    }
    config_path = tmp_path / "elsewhere" / "config.json"
    config_path.parent.mkdir()
    config_path.write_text(json.dumps(config))
    monkeypatch.setenv("SBA_DATA_ROOT", str(data))
    assert run_cli("run", "--config", str(config_path), "--out", str(tmp_path / "run")) == 0
