"""End-to-end tests for the Typer CLI."""

from __future__ import annotations

import importlib
from pathlib import Path

import pytest
import yaml
from typer.testing import CliRunner

from chupscale.config import parse_config
from chupscale.registry import ScenarioRegistry

from .scenarios.conftest import ALL_SCENARIOS

# `chupscale.main` is shadowed by the re-exported `main` function in the package namespace.
cli = importlib.import_module("chupscale.main")


@pytest.fixture(autouse=True)
def _explicit_registry(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr(cli, "_REGISTRY", ScenarioRegistry(plugins=ALL_SCENARIOS))


def _report(output: str) -> dict:
    return yaml.safe_load(output)


def test_check_f_prints_the_verdict(tmp_path: Path) -> None:
    result = CliRunner().invoke(
        cli.app, ["check-f", "--alpha1", "1", "--alpha2", "2", "--out", str(tmp_path)]
    )

    assert result.exit_code == 0, result.output
    report = _report(result.output)
    assert report["summary"]["verdict"] == "Assumption F: satisfied"
    assert report["output_dir"] == str(tmp_path)
    assert (tmp_path / "MANIFEST.txt").exists()


@pytest.mark.parametrize(
    "command",
    [
        ["check-f", "--alpha1", "1", "--alpha2", "2"],
        ["contact-angle", "--g0", "0", "--gamma", "1", "--cahn", "0.5"],
    ],
)
def test_run_options_reach_the_stored_config(tmp_path: Path, command: list[str]) -> None:
    result = CliRunner().invoke(
        cli.app, [*command, "--threads", "2", "--seed", "5", "--out", str(tmp_path)]
    )

    assert result.exit_code == 0, result.output
    stored = parse_config((tmp_path / "config.yaml").read_text(encoding="utf-8"))
    assert stored.run.threads == 2
    assert stored.run.seed == 5


def test_scenario_failures_exit_with_code_one(tmp_path: Path) -> None:
    result = CliRunner().invoke(
        cli.app, ["check-f", "--alpha1", "2", "--alpha2", "1", "--out", str(tmp_path)]
    )

    assert result.exit_code == 1
    assert "scenario 'check-f' failed" in result.output


def test_config_errors_are_bad_parameters(tmp_path: Path) -> None:
    config = tmp_path / "run.yaml"
    config.write_text("stepper:\n  lamda: 0.05\n", encoding="utf-8")

    result = CliRunner().invoke(cli.app, ["macro-run", "--config", str(config)])

    assert result.exit_code == 2
    assert "'lamda'" in result.output


def test_macro_run_with_tensors_selects_the_upscaled_scenario(tmp_path: Path) -> None:
    result = CliRunner().invoke(
        cli.app, ["macro-run", "--tensors", str(tmp_path / "missing.json"), "--out", str(tmp_path)]
    )

    assert result.exit_code == 2
    assert "cell-solve" in result.output


def test_cell_solve_then_tensors_report(tmp_path: Path) -> None:
    config = tmp_path / "cell.yaml"
    config.write_text("geometry:\n  resolution: 16\n", encoding="utf-8")
    out = tmp_path / "out"
    runner = CliRunner()

    solved = runner.invoke(cli.app, ["cell-solve", "-c", str(config), "--out", str(out)])
    shown = runner.invoke(cli.app, ["tensors", str(out / "tensors.json"), "--ratio", "0.5"])

    assert solved.exit_code == 0, solved.output
    assert _report(solved.output)["scenario"] == "cell"
    assert shown.exit_code == 0, shown.output
    assert "theta1: 1.0" in shown.output
    assert "Mw(r=0.5):" in shown.output


def test_contact_angle_from_flags(tmp_path: Path) -> None:
    result = CliRunner().invoke(
        cli.app,
        ["contact-angle", "--g0", "0", "--gamma", "1", "--cahn", "0.5", "--out", str(tmp_path)],
    )

    assert result.exit_code == 0, result.output
    assert _report(result.output)["summary"]["theta_deg"] == pytest.approx(90.0)


def test_write_config_emits_a_parseable_template(tmp_path: Path) -> None:
    target = tmp_path / "channel.yaml"

    result = CliRunner().invoke(cli.app, ["write-config", "channel", "--output", str(target)])

    assert result.exit_code == 0, result.output
    text = target.read_text(encoding="utf-8")
    assert text.startswith("# chupscale configuration template for the 'channel' scenario.")
    config = parse_config(text)
    assert config.scenario == "channel"
    assert config.wetting is not None


def test_write_config_rejects_unknown_scenarios() -> None:
    result = CliRunner().invoke(cli.app, ["write-config", "bogus"])

    assert result.exit_code == 2
    assert "'bogus'" in result.output


def test_unknown_log_level_is_rejected() -> None:
    result = CliRunner().invoke(cli.app, ["--log-level", "chatty", "write-config", "cell"])

    assert result.exit_code == 2
