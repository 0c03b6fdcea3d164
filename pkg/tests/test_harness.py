import json
import os
from pathlib import Path

import numpy as np
import pytest

from pixelcode import (
    ExperimentConfig,
    SynthesisSpec,
    emit_results,
    run_experiment,
    save_codebook,
    save_model,
    synthesize_model,
    train_codebook,
)
from pixelcode.cli import main
from pixelcode.codebook import Codebook, TrainingSet
from pixelcode.errors import ConfigError
from pixelcode.harness import aggregate_records

pytestmark = pytest.mark.usefixtures("model_dir")


@pytest.fixture(scope="module")
def model_dir(tmp_path_factory):
    """Small models and codebooks on disk for harness runs."""
    root = tmp_path_factory.mktemp("models")
    model = synthesize_model(
        SynthesisSpec(q_switches=6, k_angles=4, singular_spectrum=(1.0,) * 4, seed=5)
    )
    (root / "model.json").write_bytes(save_model(model))
    all_off = Codebook(coders=np.ones((1, 6), dtype=np.uint8), q_switches=6)
    (root / "alloff.json").write_bytes(save_codebook(all_off))
    ts = TrainingSet.sample(4, 40, seed=9)
    trained = train_codebook(model, ts, 4)
    (root / "trained.json").write_bytes(save_codebook(trained))
    return root


def fast_config(**kwargs) -> ExperimentConfig:
    defaults = dict(block_size=6, flip_rounds=2, trials=16, seed=3)
    defaults.update(kwargs)
    return ExperimentConfig(**defaults)


class TestRunExperiment:
    def test_all_off_codebook_has_unit_mean_gain(self, model_dir):
        config = fast_config(
            kind="siso-gain", model_path=str(model_dir / "model.json"),
            method="codebook", codebook_path=str(model_dir / "alloff.json"),
            trials=4000,
        )
        result = run_experiment(config)
        agg = result.aggregates[0]
        # unit-norm fixed pattern against CN(0,1): unit-mean exponential gain
        assert agg["mean"] == pytest.approx(1.0, abs=3 * agg["std_error"])

    def test_records_carry_upper_bound(self, model_dir):
        config = fast_config(
            kind="siso-gain", model_path=str(model_dir / "model.json"),
            method="exhaustive", trials=8,
        )
        result = run_experiment(config)
        for record in result.records:
            assert record["gain"] <= record["upper_bound"] * (1 + 1e-6)

    def test_thread_count_does_not_change_results(self, model_dir, monkeypatch):
        config = fast_config(
            kind="siso-gain", model_path=str(model_dir / "model.json"), method="sebo",
        )
        monkeypatch.setenv("PIXELCODE_THREADS", "1")
        serial = run_experiment(config)
        monkeypatch.setenv("PIXELCODE_THREADS", "8")
        threaded = run_experiment(config)
        assert serial.to_json() == threaded.to_json()

    def test_rerun_is_bit_identical(self, model_dir):
        config = fast_config(
            kind="mimo-capacity", model_path=str(model_dir / "model.json"),
            trials=3, snr_db=(0.0, 10.0), modes=("uniform", "waterfilling"),
            n_t=2, n_r=2,
        )
        assert run_experiment(config).to_json() == run_experiment(config).to_json()

    def test_codebook_sizes_sweep(self, model_dir):
        config = fast_config(
            kind="siso-gain-codebook", model_path=str(model_dir / "model.json"),
            m_sizes=(1, 4), train_size=24, trials=32,
        )
        result = run_experiment(config)
        by_m = {row["m_size"]: row for row in result.aggregates}
        assert set(by_m) == {1, 4}
        assert by_m[4]["mean"] >= by_m[1]["mean"]

    def test_mimo_capacity_grid_shape(self, model_dir):
        config = fast_config(
            kind="mimo-capacity", model_path=str(model_dir / "model.json"),
            trials=2, snr_db=(-10.0, 0.0, 10.0), modes=("uniform",),
            n_t=2, n_r=1,
        )
        result = run_experiment(config)
        assert len(result.records) == 2 * 3
        assert len(result.aggregates) == 3
        assert [row["snr_db"] for row in result.aggregates] == [-10.0, 0.0, 10.0]

    def test_eadof_report(self, model_dir):
        config = ExperimentConfig(
            kind="eadof", model_path=str(model_dir / "model.json"), format="json"
        )
        result = run_experiment(config)
        report = result.records[0]
        assert report["eadof"] == 4
        assert len(report["singular_values"]) == min(2 * 4, 7)

    def test_correlation_report(self, model_dir):
        config = ExperimentConfig(
            kind="correlation", model_path=str(model_dir / "model.json"),
            codebook_path=str(model_dir / "trained.json"), format="json",
        )
        result = run_experiment(config)
        report = result.records[0]
        rho = np.asarray(report["rho_re"]) + 1j * np.asarray(report["rho_im"])
        assert rho.shape == (4, 4)
        np.testing.assert_allclose(np.diag(rho), 1.0, atol=1e-9)
        assert len(report["combiner_norm_deviations"]) == 4

    def test_standard_error_shrinks_with_trials(self, model_dir):
        small = run_experiment(fast_config(
            kind="siso-gain", model_path=str(model_dir / "model.json"),
            method="codebook", codebook_path=str(model_dir / "alloff.json"),
            trials=200,
        ))
        large = run_experiment(fast_config(
            kind="siso-gain", model_path=str(model_dir / "model.json"),
            method="codebook", codebook_path=str(model_dir / "alloff.json"),
            trials=3200,
        ))
        ratio = small.aggregates[0]["std_error"] / large.aggregates[0]["std_error"]
        assert ratio == pytest.approx(4.0, rel=0.5)  # 1/sqrt(16x trials)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigError):
            run_experiment(ExperimentConfig(kind="mystery"))

    def test_k_mismatch_rejected(self, model_dir):
        config = fast_config(
            kind="siso-gain", model_path=str(model_dir / "model.json"), k_angles=72,
        )
        with pytest.raises(ConfigError):
            run_experiment(config)


class TestEmitResults:
    def test_csv_has_header_and_one_row_per_trial(self, model_dir, tmp_path):
        config = fast_config(
            kind="siso-gain", model_path=str(model_dir / "model.json"),
            method="exhaustive", trials=3,
        )
        result = run_experiment(config)
        out = tmp_path / "gain.csv"
        emit_results(result, "csv", str(out))
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "trial,snr_db,gain_or_capacity,method,mode,m_size,seed"
        assert len(lines) == 1 + 3

    def test_json_reaggregates_to_identical_means(self, model_dir, tmp_path):
        config = fast_config(
            kind="mimo-capacity", model_path=str(model_dir / "model.json"),
            trials=3, snr_db=(0.0, 5.0), n_t=2, n_r=1,
        )
        result = run_experiment(config)
        out = tmp_path / "cap.json"
        emit_results(result, "json", str(out))
        doc = json.loads(out.read_text())
        assert aggregate_records(doc["records"]) == doc["aggregates"]

    def test_capacity_grid_aggregates_keyed_by_snr(self, model_dir):
        config = fast_config(
            kind="mimo-capacity", model_path=str(model_dir / "model.json"),
            trials=2, snr_db=(-10.0, -5.0, 0.0, 5.0, 10.0), n_t=1, n_r=1,
        )
        result = run_experiment(config)
        assert [row["snr_db"] for row in result.aggregates] == [-10.0, -5.0, 0.0, 5.0, 10.0]
        assert len(result.aggregates) == 5

    def test_csv_round_trips_full_precision(self, model_dir, tmp_path):
        config = fast_config(
            kind="siso-gain", model_path=str(model_dir / "model.json"),
            method="exhaustive", trials=2,
        )
        result = run_experiment(config)
        out = tmp_path / "gain.csv"
        emit_results(result, "csv", str(out))
        rows = out.read_text().strip().split("\n")[1:]
        for record, row in zip(result.records, rows):
            assert float(row.split(",")[2]) == record["gain"]

    def test_analysis_report_rejects_csv(self, model_dir, tmp_path):
        config = ExperimentConfig(
            kind="eadof", model_path=str(model_dir / "model.json")
        )
        result = run_experiment(config)
        with pytest.raises(ConfigError):
            emit_results(result, "csv", str(tmp_path / "nope.csv"))


class TestCli:
    def test_gen_model_deterministic(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["gen-model", "--q", "5", "--k", "6", "--seed", "7", "-o", str(a)]) == 0
        assert main(["gen-model", "--q", "5", "--k", "6", "--seed", "7", "-o", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_validate_accepts_generated_model(self, model_dir, capsys):
        assert main(["validate", str(model_dir / "model.json")]) == 0
        assert "valid" in capsys.readouterr().out

    def test_validate_rejects_corrupt_model(self, model_dir, tmp_path):
        doc = json.loads((model_dir / "model.json").read_text())
        doc["z_re"][1] += 0.5
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        assert main(["validate", str(bad)]) == 1

    def test_eadof_prints_r(self, model_dir, capsys):
        assert main(["eadof", "--model", str(model_dir / "model.json"),
                     "--threshold", "0.998"]) == 0
        assert "EADoF = 4" in capsys.readouterr().out

    def test_unknown_flag_exits_1_with_usage(self, capsys):
        assert main(["siso-gain", "--frobnicate"]) == 1
        err = capsys.readouterr().err
        assert "usage" in err.lower()

    def test_help_exits_0(self, capsys):
        assert main(["--help"]) == 0
        assert main(["siso-gain", "--help"]) == 0

    def test_missing_model_is_config_error(self, tmp_path):
        assert main(["siso-gain", "--model", str(tmp_path / "absent.json"),
                     "--trials", "2"]) == 1

    def test_siso_gain_writes_csv(self, model_dir, tmp_path, capsys):
        out = tmp_path / "gain.csv"
        code = main([
            "siso-gain", "--model", str(model_dir / "model.json"),
            "--trials", "4", "--seed", "1", "--method", "exhaustive",
            "-o", str(out),
        ])
        assert code == 0
        assert out.exists()
        assert len(out.read_text().strip().split("\n")) == 5

    def test_config_file_with_flag_override(self, model_dir, tmp_path):
        cfg = {
            "kind": "siso-gain",
            "model_path": str(model_dir / "model.json"),
            "trials": 2,
            "seed": 9,
            "method": "exhaustive",
            "format": "json",
        }
        cfg_path = tmp_path / "exp.json"
        cfg_path.write_text(json.dumps(cfg))
        out = tmp_path / "res.json"
        code = main(["siso-gain", "--config", str(cfg_path), "--trials", "3",
                     "-o", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["config"]["trials"] == 3  # CLI wins
        assert doc["config"]["seed"] == 9  # file value kept
        assert len(doc["records"]) == 3

    def test_train_codebook_and_reuse(self, model_dir, tmp_path):
        cb_path = tmp_path / "cb.json"
        code = main([
            "train-codebook", "--model", str(model_dir / "model.json"),
            "--m-size", "2", "--train-size", "16", "--seed", "4",
            "--block-size", "6", "--flip-rounds", "1", "-o", str(cb_path),
        ])
        assert code == 0
        code = main([
            "siso-gain", "--model", str(model_dir / "model.json"),
            "--trials", "3", "--method", "codebook", "--codebook", str(cb_path),
            "-o", str(tmp_path / "sel.csv"),
        ])
        assert code == 0

    def test_mimo_capacity_cli(self, model_dir, tmp_path):
        out = tmp_path / "cap.csv"
        code = main([
            "mimo-capacity", "--model", str(model_dir / "model.json"),
            "--nt", "2", "--nr", "1", "--trials", "2", "--seed", "2",
            "--snr-db", "0,10", "--modes", "uniform,waterfilling",
            "--block-size", "6", "--flip-rounds", "1", "-o", str(out),
        ])
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert len(lines) == 1 + 2 * 2 * 2

    def test_correlation_cli(self, model_dir, tmp_path, capsys):
        out = tmp_path / "corr.json"
        code = main([
            "correlation", "--model", str(model_dir / "model.json"),
            "--codebook", str(model_dir / "trained.json"), "-o", str(out),
        ])
        assert code == 0
        assert json.loads(out.read_text())["records"][0]["m_size"] == 4


def test_worker_count_env(monkeypatch):
    from pixelcode.harness import worker_count

    monkeypatch.setenv("PIXELCODE_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("PIXELCODE_THREADS", "zero")
    with pytest.raises(ConfigError):
        worker_count()
    monkeypatch.delenv("PIXELCODE_THREADS")
    assert worker_count() >= 1
