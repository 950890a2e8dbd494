import json

import numpy as np
import pandas as pd
import pytest

from cli.commands import main
from config.pipeline_config import load_pipeline_config
from core.redundancy import REMOVAL_COLUMNS, project
from data.csv_store import read_predictions_csv

FAST = {
    "grids": {"ridge_lambdas": [0.01, 0.1, 1.0], "lasso_lambdas": [1e-3, 1e-2], "elasticnet_alphas": [0.5, 1.0]},
    "bootstrap_resamples": 100,
}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "fast.json"
    path.write_text(json.dumps(FAST))
    return path


@pytest.fixture
def pool_csv(tmp_path):
    path = tmp_path / "pool.csv"
    code = main(["synth", "--n-samples", "300", "--n-clusters", "3", "--models-per-cluster", "3",
                 "--rho-within", "0.99", "--outlier-rate", "0", "--seed", "5", "--out", str(path)])
    assert code == 0
    return path


def _run(pool_csv, config_path, out, *extra):
    return main(["run", str(pool_csv), "--config", str(config_path), "--folds", "5", "--out", str(out), *extra])


class TestSynth:
    def test_writes_pool(self, pool_csv):
        loaded = read_predictions_csv(pool_csv, require_target=True)
        assert loaded.matrix.values.shape == (300, 9)
        assert loaded.matrix.names[0] == "c0_m0"

    def test_invalid_spec(self, tmp_path, capsys):
        code = main(["synth", "--rho-within", "2", "--out", str(tmp_path / "x.csv")])
        assert code == 1
        assert "rho_within" in capsys.readouterr().err


class TestRun:
    def test_artifacts(self, pool_csv, config_path, tmp_path, capsys):
        out = tmp_path / "out"
        assert _run(pool_csv, config_path, out) == 0
        for name in ("report.json", "report.txt", "selection_log.csv", "fold_traces.csv", "blend_weights.csv",
                     "regularization_path.csv", "error_bins.csv", "oof_predictions.csv", "timings.json",
                     "weights_ridge.csv", "weights_lasso.csv", "weights_elasticnet.csv"):
            assert (out / name).is_file(), name
        doc = json.loads((out / "report.json").read_text())
        names = {m["name"] for m in doc["methods"]}
        assert names == {"best_single", "uniform_average", "weighted_average", "linear_stack", "hill_climb",
                         "ridge", "lasso", "elasticnet", "pipeline"}
        assert doc["config"]["folds"] == 5
        assert "stacking report" in capsys.readouterr().out
        path = pd.read_csv(out / "regularization_path.csv")
        assert path.groupby("meta_learner").size().to_dict() == {"elasticnet": 4, "lasso": 2, "linear_stack": 3, "ridge": 3}

    def test_oof_file_carries_ids_folds_and_target(self, pool_csv, config_path, tmp_path):
        out = tmp_path / "out"
        assert _run(pool_csv, config_path, out) == 0
        oof = pd.read_csv(out / "oof_predictions.csv", dtype={"id": str})
        assert list(oof.columns[:3]) == ["id", "fold", "target"]
        assert "pipeline" in oof.columns
        loaded = read_predictions_csv(pool_csv, require_target=True)
        assert tuple(oof["id"]) == loaded.ids
        np.testing.assert_allclose(oof["target"], loaded.target.values, rtol=1e-12)
        assert sorted(oof["fold"].unique()) == [0, 1, 2, 3, 4]
        doc = json.loads((out / "report.json").read_text())
        pipeline_rmse = next(m for m in doc["methods"] if m["name"] == "pipeline")["metrics"]["rmse"]
        resid = oof["pipeline"] - oof["target"]
        assert np.sqrt(np.mean(resid ** 2)) == pytest.approx(pipeline_rmse, rel=1e-9)

    def test_reproducible(self, pool_csv, config_path, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert _run(pool_csv, config_path, a, "--seed", "42") == 0
        assert _run(pool_csv, config_path, b, "--seed", "42") == 0
        for name in ("report.json", "report.txt", "oof_predictions.csv", "fold_traces.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_test_predictions(self, pool_csv, config_path, tmp_path):
        frame = pd.read_csv(pool_csv).drop(columns=["target"]).head(20)
        test_path = tmp_path / "test.csv"
        frame.to_csv(test_path, index=False)
        out = tmp_path / "out"
        assert _run(pool_csv, config_path, out, "--test", str(test_path)) == 0
        preds = pd.read_csv(out / "test_predictions.csv")
        assert len(preds) == 20 and "pipeline" in preds.columns
        assert preds["id"].tolist() == frame["id"].tolist()

    def test_missing_target(self, tmp_path, config_path, capsys):
        path = tmp_path / "nolabel.csv"
        path.write_text("id,a,b\n1,0.1,0.2\n2,0.3,0.1\n")
        assert _run(path, config_path, tmp_path / "out") == 2
        assert "target column required" in capsys.readouterr().err

    def test_no_models(self, tmp_path, config_path, capsys):
        path = tmp_path / "empty.csv"
        path.write_text("id,target\n1,0.1\n2,0.3\n")
        assert _run(path, config_path, tmp_path / "out") == 2
        assert "no model columns" in capsys.readouterr().err

    def test_unknown_flag(self, pool_csv, capsys):
        assert main(["run", str(pool_csv), "--bogus"]) == 1
        assert "error" in capsys.readouterr().err

    def test_unknown_config_key(self, pool_csv, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"foldz": 3}))
        assert main(["run", str(pool_csv), "--config", str(bad)]) == 1
        assert "config error" in capsys.readouterr().err

    def test_missing_command(self, capsys):
        assert main([]) == 1


class TestSubcommands:
    def test_dedup_matches_library(self, pool_csv, tmp_path):
        out = tmp_path / "dedup"
        assert main(["dedup", str(pool_csv), "--tau-mse", "inf", "--out", str(out)]) == 0
        doc = json.loads((out / "dedup.json").read_text())
        loaded = read_predictions_csv(pool_csv, require_target=True)
        cfg = load_pipeline_config(None, {"redundancy": {"tau_mse": float("inf")}})
        expected = project(loaded.matrix, loaded.target, cfg.redundancy)
        assert doc["retained"] == list(expected.retained)
        assert doc["k_eff"] == 3
        log = pd.read_csv(out / "selection_log.csv")
        assert list(log.columns) == REMOVAL_COLUMNS
        assert len(log) == 6

    def test_ablate(self, pool_csv, config_path, tmp_path):
        out = tmp_path / "abl"
        assert main(["ablate", str(pool_csv), "--config", str(config_path), "--folds", "5", "--out", str(out)]) == 0
        frame = pd.read_csv(out / "ablation.csv")
        assert len(frame) == 6
        assert frame["configuration"].iloc[0] == "baseline_ridge_stack"
        assert len(json.loads((out / "ablation.json").read_text())["rows"]) == 6

    def test_scale(self, pool_csv, config_path, tmp_path):
        out = tmp_path / "scale"
        code = main(["scale", str(pool_csv), "--config", str(config_path), "--folds", "5",
                     "--fractions", "0.5", "1.0", "--out", str(out)])
        assert code == 0
        frame = pd.read_csv(out / "scale.csv")
        assert frame["n_samples"].tolist() == [150, 300]

    def test_scale_rejects_bad_fraction(self, pool_csv, capsys):
        assert main(["scale", str(pool_csv), "--fractions", "1.5"]) == 1
