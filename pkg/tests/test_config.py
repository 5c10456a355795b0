"""Tests for run-configuration parsing and validation."""

from pathlib import Path

import pytest
from pydantic import ValidationError

from ptwigner.config import EpsRange, GridSpec, RunConfig


class TestEpsRange:
    def test_single_value(self):
        assert EpsRange.parse("1.5").values() == [1.5]

    def test_inclusive_stop(self):
        values = EpsRange.parse("1.0:3.0:0.05").values()
        assert len(values) == 41
        assert values[0] == 1.0
        assert values[-1] == 3.0
        assert values[1] == 1.05

    def test_never_steps_past_stop(self):
        assert EpsRange.parse("1:2:0.3").values() == [1.0, 1.3, 1.6, 1.9]
        assert EpsRange.parse("1:2.1:0.3").values() == [1.0, 1.3, 1.6, 1.9]
        assert EpsRange.parse("1.0:1.07:0.1").values() == [1.0]

    def test_stop_reached_through_rounding(self):
        # 0.1 + 2 * 0.1 lands one ulp above 0.3
        assert EpsRange.parse("0.1:0.3:0.1").values() == [0.1, 0.2, 0.3]

    @pytest.mark.parametrize("text", ["0:1:0.1", "1:2:0", "2:1:0.1", "1:2", "a:b:c"])
    def test_invalid(self, text):
        with pytest.raises(ValueError):
            EpsRange.parse(text)


class TestGridSpec:
    def test_single_block_used_for_both_axes(self):
        grid = GridSpec.parse("-5:5:201").to_grid()
        assert grid.shape == (201, 201)
        assert grid.p_min == -5.0

    def test_two_blocks(self):
        grid = GridSpec.parse("-4:4:81,-6:6:121").to_grid()
        assert (grid.x_max, grid.p_max, grid.n_x, grid.n_p) == (4.0, 6.0, 81, 121)

    @pytest.mark.parametrize("text", ["-5:5:200", "-5:5:31", "5:-5:201"])
    def test_invalid(self, text):
        with pytest.raises(ValueError):
            GridSpec.parse(text)


class TestRunConfig:
    def test_defaults(self):
        config = RunConfig(command="spectrum-sweep", eps="1.0:3.0:0.05")
        assert config.n_max == 71
        assert config.format == "csv"
        assert config.include_dwdt is False
        assert config.branches == (1, 2)
        assert config.bracket == (1.40, 1.45)

    def test_parses_pairs(self):
        config = RunConfig(command="ep-find", branches="2,3", bracket="1.3,1.5")
        assert config.branches == (2, 3)
        assert config.bracket == (1.3, 1.5)

    @pytest.mark.parametrize("fields", [
        dict(command="spectrum-sweep"),
        dict(command="spectrum-sweep", eps="1.5", n_max=7),
        dict(command="spectrum-sweep", eps="1.5", n_max=101),
        dict(command="wigner-grid", eps="1.0:2.0:0.5"),
        dict(command="wigner-grid", eps="1.5", grid="-5:5:200"),
        dict(command="ep-find", branches="2,1"),
        dict(command="ep-find", bracket="1.45,1.40"),
        dict(command="circulation-sweep", eps="1.4", r_init=2.0),
        dict(command="wigner-grid", eps="1.5", state_index=71),
        dict(command="spectrum-sweep", eps="1.5", levels=0),
        dict(command="spectrum-sweep", eps="1.5", format="parquet"),
        dict(command="render", eps="1.5"),
    ])
    def test_invalid(self, fields):
        with pytest.raises(ValidationError):
            RunConfig(**fields)

    def test_workers_from_environment(self, monkeypatch):
        monkeypatch.setenv("PTWIGNER_WORKERS", "3")
        assert RunConfig.from_env(command="validate").workers == 3
        assert RunConfig.from_env(command="validate", workers=1).workers == 1

    def test_output_path(self, monkeypatch, tmp_path):
        monkeypatch.delenv("PTWIGNER_OUTPUT_DIR", raising=False)
        assert RunConfig(command="validate").output_path() == Path("validate.csv")
        monkeypatch.setenv("PTWIGNER_OUTPUT_DIR", str(tmp_path))
        assert RunConfig(command="validate", output="run.json").output_path() == tmp_path / "run.json"
        absolute = tmp_path / "elsewhere.csv"
        assert RunConfig(command="validate", output=absolute).output_path() == absolute

    def test_echo(self):
        echo = RunConfig(command="spectrum-sweep", eps="1.0:1.1:0.05", workers=2).echo()
        assert echo["config"]["eps_values"] == [1.0, 1.05, 1.1]
        assert "workers" not in echo["config"]
        assert "output" not in echo["config"]
        assert echo["tolerances"]["tol_real"] == 1e-8
