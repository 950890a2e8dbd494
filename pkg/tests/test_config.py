import json
import math

import pytest

from config.pipeline_config import GridConfig, PipelineConfig, RedundancyConfig, build_pipeline_config, load_pipeline_config
from config.time_helpers import format_seconds
from errors.exceptions import ConfigError, InputError, ParseError, SelectionError, StageError, UsageError
from utils.decorators import exit_on_error, pipeline_stage
from utils.validation import derive_seed, is_valid_model_name


class TestDefaults:
    def test_pipeline_defaults(self):
        cfg = PipelineConfig()
        assert (cfg.folds, cfg.seed, cfg.inner_folds) == (10, 42, 3)
        assert cfg.redundancy.tau_corr == 0.95 and cfg.redundancy.tau_var == 0.01
        assert cfg.alpha == 0.05 and cfg.bootstrap_resamples == 1000
        assert cfg.reference == "hill_climb"
        assert cfg.strata == 10

    def test_grid_defaults(self):
        grid = GridConfig()
        assert len(grid.ridge_lambdas) == 50 and len(grid.lasso_lambdas) == 30
        assert grid.ridge_lambdas[0] == pytest.approx(1e-3) and grid.ridge_lambdas[-1] == pytest.approx(1e5)
        assert grid.lasso_lambdas[0] == pytest.approx(1e-5) and grid.lasso_lambdas[-1] == pytest.approx(10 ** 0.1)
        assert grid.elasticnet_alphas == [0.1, 0.5, 0.7, 0.9, 0.95, 0.99, 1.0]
        assert grid.size("elasticnet") == 210

    def test_tau_mse_resolution(self):
        assert RedundancyConfig().resolve_tau_mse([0.0, 2.0]) == pytest.approx(0.05)
        assert RedundancyConfig(tau_mse=0.3).resolve_tau_mse([0.0, 2.0]) == 0.3


class TestBuild:
    def test_overrides_win(self):
        cfg = build_pipeline_config({"folds": 4, "redundancy": {"tau_corr": 0.9}}, {"folds": 6, "redundancy": {"tau_var": 0.0}})
        assert cfg.folds == 6
        assert cfg.redundancy.tau_corr == 0.9 and cfg.redundancy.tau_var == 0.0

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as info:
            build_pipeline_config({"fold": 5})
        assert info.value.exit_code == 1

    def test_out_of_range(self):
        with pytest.raises(ConfigError, match="redundancy.tau_corr"):
            build_pipeline_config({"redundancy": {"tau_corr": 1.5}})

    def test_negative_lambda(self):
        with pytest.raises(ConfigError):
            build_pipeline_config({"grids": {"ridge_lambdas": [-1.0]}})

    def test_unknown_reference(self):
        with pytest.raises(ConfigError):
            build_pipeline_config({"reference_method": "xgboost"})

    def test_reference_fallback(self):
        assert build_pipeline_config({"baselines": ["best_single"]}).reference == "pipeline"
        assert build_pipeline_config({"reference_method": "ridge"}).reference == "ridge"

    def test_duplicates_collapse(self):
        assert build_pipeline_config({"meta_learners": ["ridge", "ridge", "lasso"]}).meta_learners == ["ridge", "lasso"]

    def test_effective_round_trip(self):
        cfg = build_pipeline_config({"folds": 7})
        doc = cfg.effective()
        assert doc["folds"] == 7 and doc["redundancy"]["tau_mse"] is None
        assert PipelineConfig.model_validate(doc) == cfg


class TestLoad:
    def test_from_file(self, tmp_path):
        path = tmp_path / "pipeline.json"
        path.write_text(json.dumps({"seed": 7, "hill_climb": {"patience": 3}}))
        cfg = load_pipeline_config(path, {"seed": 9})
        assert cfg.seed == 9 and cfg.hill_climb.patience == 3

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="file not found"):
            load_pipeline_config(tmp_path / "nope.json")

    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{folds: 3")
        with pytest.raises(ConfigError, match="invalid JSON"):
            load_pipeline_config(path)

    def test_top_level_must_be_object(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError):
            load_pipeline_config(path)

    def test_inf_tau_mse_is_accepted(self):
        assert build_pipeline_config({"redundancy": {"tau_mse": math.inf}}).redundancy.tau_mse == math.inf


class TestErrors:
    def test_exit_codes(self):
        assert UsageError("x").exit_code == 1
        assert ConfigError("x").exit_code == 1
        assert ParseError("f.csv", "bad").exit_code == 2
        assert SelectionError("x").exit_code == 2
        assert StageError("fit", InputError("x")).exit_code == 2
        assert StageError("fit", RuntimeError("x")).exit_code == 3

    def test_messages(self):
        assert str(ParseError("f.csv", "target column required")) == "f.csv: target column required"
        assert str(ConfigError("bad", "a.json")) == "config error in a.json: bad"


class TestDecorators:
    def test_exit_on_error(self, capsys):
        @exit_on_error
        def failing():
            raise ParseError("in.csv", "no model columns")

        assert failing() == 2
        assert "in.csv: no model columns" in capsys.readouterr().err

    def test_exit_on_crash(self, capsys):
        @exit_on_error
        def crashing():
            raise RuntimeError("kaboom")

        assert crashing() == 3
        assert "kaboom" in capsys.readouterr().err

    def test_stage_records_and_wraps(self):
        timings = {}
        with pipeline_stage("ok", timings):
            pass
        assert timings["ok"] >= 0.0
        with pytest.raises(StageError) as info:
            with pipeline_stage("broken", timings):
                raise SelectionError("nothing left")
        assert info.value.stage == "broken"
        assert "broken" in timings

    def test_nested_stage_is_not_rewrapped(self):
        with pytest.raises(StageError) as info:
            with pipeline_stage("outer"):
                with pipeline_stage("inner"):
                    raise InputError("x")
        assert info.value.stage == "inner"


class TestHelpers:
    def test_derive_seed(self):
        assert derive_seed(42, 1) == derive_seed(42, 1)
        assert derive_seed(42, 1) != derive_seed(42, 2)
        assert derive_seed(42, 0, 1) != derive_seed(42, 1, 0)

    def test_model_names(self):
        assert is_valid_model_name("lgbm_v2")
        assert not is_valid_model_name(" padded")
        assert not is_valid_model_name("a,b")
        assert not is_valid_model_name("")

    def test_format_seconds(self):
        assert format_seconds(0.25) == "250ms"
        assert format_seconds(3.5) == "3.50s"
        assert format_seconds(3725) == "01:02:05"
