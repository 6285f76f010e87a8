"""Command-line interface for chupscale."""

from __future__ import annotations

import logging
import sys
from pathlib import Path
from typing import Any, Sequence

import typer
import yaml

from .cell_solver import EffectiveTensors
from .config import SCENARIOS, RuntimeSettings, serialize_config, template_config
from .coordinator import RunCoordinator, RunRequest
from .errors import ChUpscaleError, ConfigError
from .output import format_tensor_report
from .registry import ScenarioRegistry

app = typer.Typer(help="Homogenized Cahn-Hilliard solvers for perforated domains.")

_REGISTRY = ScenarioRegistry()

ConfigOption = typer.Option(
    None,
    "--config",
    "-c",
    exists=True,
    dir_okay=False,
    file_okay=True,
    help="YAML configuration file.",
)
OutOption = typer.Option(None, "--out", help="Output directory (overrides run.output_dir).")
ThreadsOption = typer.Option(None, "--threads", min=1, help="Worker threads for cell solves.")
SeedOption = typer.Option(None, "--seed", min=0, max=2**64 - 1, help="Seed for random initial data.")


@app.callback()
def _configure(
    log_level: str | None = typer.Option(
        None, "--log-level", help="Logging level (default from CHUPSCALE_LOG_LEVEL or WARNING)."
    ),
) -> None:
    level_name = (log_level or RuntimeSettings().log_level).upper()
    level = logging.getLevelName(level_name)
    if not isinstance(level, int):
        raise typer.BadParameter(f"Unknown log level '{log_level}'", param_hint="--log-level")
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("chupscale").setLevel(level)


def _read_config(path: Path | None) -> str | None:
    if path is None:
        return None
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:  # pragma: no cover - filesystem failure
        raise typer.BadParameter(f"Unable to read config file: {exc}") from exc


def _run_overrides(out: Path | None, threads: int | None, seed: int | None) -> dict[str, Any]:
    run: dict[str, Any] = {}
    if out is not None:
        run["output_dir"] = str(out)
    if threads is not None:
        run["threads"] = threads
    if seed is not None:
        run["seed"] = seed
    return {"run": run} if run else {}


def _execute(
    scenarios: tuple[str, ...],
    config: Path | None,
    out: Path | None,
    threads: int | None,
    seed: int | None,
    extra: dict[str, Any] | None = None,
) -> None:
    """Run one scenario through the coordinator and print its exit report.

    Raises:
        typer.BadParameter: For configuration problems.
        typer.Exit: With code 1 when the scenario fails.
    """

    cli_parameters = _run_overrides(out, threads, seed)
    for key, value in (extra or {}).items():
        if isinstance(value, dict):
            cli_parameters[key] = {**cli_parameters.get(key, {}), **value}
        else:
            cli_parameters[key] = value
    request = RunRequest(
        scenarios=scenarios,  # type: ignore[arg-type]
        config_text=_read_config(config),
        cli_parameters=cli_parameters,
    )
    coordinator = RunCoordinator(registry=_REGISTRY)
    try:
        report = coordinator.execute(request)
    except ConfigError as exc:
        raise typer.BadParameter(str(exc), param_hint="--config") from exc
    except ChUpscaleError as exc:
        typer.echo(f"Error: {exc}", err=True)
        raise typer.Exit(1) from exc
    typer.echo(yaml.safe_dump(report.to_plain(), sort_keys=False), nl=False)


@app.command("cell-solve")
def cell_solve(
    config: Path | None = ConfigOption,
    out: Path | None = OutOption,
    threads: int | None = ThreadsOption,
    seed: int | None = SeedOption,
) -> None:
    """Solve the cell problems and write correctors plus effective tensors."""

    _execute(("cell",), config, out, threads, seed)


@app.command("tensors")
def tensors(
    path: Path = typer.Argument(..., exists=True, dir_okay=False, help="tensors.json file."),
    ratio: float | None = typer.Option(None, "--ratio", help="Also print M_w at this ratio r."),
) -> None:
    """Print a tensor file written by ``cell-solve``."""

    try:
        loaded = EffectiveTensors.from_json(path.read_text(encoding="utf-8"))
    except ChUpscaleError as exc:
        raise typer.BadParameter(str(exc), param_hint="PATH") from exc
    typer.echo(format_tensor_report(loaded), nl=False)
    if ratio is not None:
        rows = [" ".join(repr(float(v)) for v in row) for row in loaded.mw_at(ratio)]
        typer.echo(f"Mw(r={ratio!r}):")
        for row in rows:
            typer.echo(f"  {row}")


@app.command("macro-run")
def macro_run(
    config: Path | None = ConfigOption,
    out: Path | None = OutOption,
    threads: int | None = ThreadsOption,
    seed: int | None = SeedOption,
    tensor_file: Path | None = typer.Option(
        None, "--tensors", help="Tensor file; selects the upscaled scenario."
    ),
) -> None:
    """Run the homogeneous or the upscaled macroscopic solver."""

    if tensor_file is not None:
        _execute(("upscaled",), config, out, threads, seed, {"tensor_file": str(tensor_file)})
    else:
        _execute(("homogeneous", "upscaled"), config, out, threads, seed)


@app.command("micro-run")
def micro_run(
    config: Path | None = ConfigOption,
    out: Path | None = OutOption,
    threads: int | None = ThreadsOption,
    seed: int | None = SeedOption,
) -> None:
    """Run the pore-scale solver on the perforated domain."""

    _execute(("micro",), config, out, threads, seed)


@app.command("compare")
def compare(
    config: Path | None = ConfigOption,
    out: Path | None = OutOption,
    threads: int | None = ThreadsOption,
    seed: int | None = SeedOption,
) -> None:
    """Compare cell-averaged micro runs with the upscaled solution."""

    _execute(("compare",), config, out, threads, seed)


@app.command("channel")
def channel(
    config: Path | None = ConfigOption,
    out: Path | None = OutOption,
    threads: int | None = ThreadsOption,
    seed: int | None = SeedOption,
) -> None:
    """Run a straight channel with the upscaled wall datum g0."""

    _execute(("channel",), config, out, threads, seed)


@app.command("contact-angle")
def contact_angle(
    config: Path | None = ConfigOption,
    out: Path | None = OutOption,
    threads: int | None = ThreadsOption,
    seed: int | None = SeedOption,
    g0: float | None = typer.Option(None, "--g0", help="Upscaled wall datum."),
    gamma: float | None = typer.Option(None, "--gamma", help="Surface tension parameter."),
    cahn: float | None = typer.Option(None, "--cahn", help="Cahn number."),
) -> None:
    """Effective contact angle from g0 or from the cell's wall classes."""

    extra: dict[str, Any] = {}
    wetting = {k: v for k, v in (("gamma", gamma), ("cahn", cahn)) if v is not None}
    if wetting:
        extra["wetting"] = wetting
    if g0 is not None:
        extra["contact"] = {"g0": g0}
    _execute(("contact-angle",), config, out, threads, seed, extra)


@app.command("check-f")
def check_f(
    config: Path | None = ConfigOption,
    out: Path | None = OutOption,
    threads: int | None = ThreadsOption,
    seed: int | None = SeedOption,
    alpha1: float | None = typer.Option(None, "--alpha1", help="First well."),
    alpha2: float | None = typer.Option(None, "--alpha2", help="Second well."),
) -> None:
    """Check Assumption F for a double-well potential."""

    energy: dict[str, Any] = {}
    if alpha1 is not None or alpha2 is not None:
        energy["kind"] = "double-well"
    if alpha1 is not None:
        energy["alpha1"] = alpha1
    if alpha2 is not None:
        energy["alpha2"] = alpha2
    _execute(("check-f",), config, out, threads, seed, {"energy": energy} if energy else None)


@app.command("write-config")
def write_config(
    scenario: str = typer.Argument(..., help=f"One of: {', '.join(SCENARIOS)}."),
    output: Path | None = typer.Option(
        None,
        "--output",
        "-o",
        help="File path for the generated YAML template. Defaults to stdout.",
        dir_okay=False,
        file_okay=True,
        writable=True,
        resolve_path=True,
    ),
) -> None:
    """Emit a YAML configuration template for one scenario."""

    if scenario not in SCENARIOS:
        raise typer.BadParameter(
            f"Unknown scenario '{scenario}'; expected one of {', '.join(SCENARIOS)}",
            param_hint="SCENARIO",
        )
    header_lines = [
        f"# chupscale configuration template for the '{scenario}' scenario.",
        "# Generated by `chupscale write-config`; unknown keys are rejected.",
        "",
    ]
    content = "\n".join(header_lines) + serialize_config(template_config(scenario))  # type: ignore[arg-type]

    if output is None:
        typer.echo(content, nl=False)
        return

    try:
        output.parent.mkdir(parents=True, exist_ok=True)
        output.write_text(content, encoding="utf-8")
    except OSError as exc:  # pragma: no cover - filesystem failure
        raise typer.BadParameter(f"Unable to write configuration file: {exc}") from exc
    typer.echo(f"Wrote configuration template to {output}")


def main(argv: Sequence[str] | None = None) -> None:
    """Entry point used by the console script defined in ``pyproject.toml``."""

    raw_args = list(argv if argv is not None else sys.argv[1:])
    app(args=raw_args)
