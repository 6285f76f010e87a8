"""Helpers shared by the scenario implementations."""

from __future__ import annotations

import logging
from typing import Any, Sequence

import numpy as np
import numpy.typing as npt

from ..cell_geometry import ReferenceCell, build_cell
from ..cell_solver import EffectiveTensors
from ..config import RunConfig
from ..errors import ConfigError
from ..macro_solver import MacroGrid, PhaseFieldState, Trajectory
from ..output import OutputSink
from ..wetting import WettingSpec

logger = logging.getLogger(__name__)

TIMESERIES_COLUMNS = (
    "step",
    "time",
    "mass",
    "energy",
    "phi_min",
    "phi_max",
    "phi_mean",
    "clamped",
)


def require_cell(config: RunConfig) -> ReferenceCell:
    if config.geometry is None:
        msg = f"scenario '{config.scenario}' needs a 'geometry' section"
        raise ConfigError(msg, "geometry")
    return build_cell(config.geometry)


def uniform_wetting(config: RunConfig) -> WettingSpec | None:
    """Return the wetting section, rejecting coefficient profiles and wall maps."""

    wetting = config.wetting
    if wetting is not None and wetting.varies:
        msg = (
            f"scenario '{config.scenario}' uses constant wall coefficients; "
            "profiles and wall_map apply to the upscaled scenario only"
        )
        raise ConfigError(msg, "wetting")
    return wetting


def macro_grid(config: RunConfig) -> MacroGrid:
    return MacroGrid(config.grid)


def initial_phi(config: RunConfig, grid: MacroGrid) -> npt.NDArray[np.float64]:
    return config.initial.sample(grid.centers(), config.grid.lengths[0], config.run.seed)


def load_tensors(config: RunConfig) -> EffectiveTensors:
    """Read the tensor file named in ``config``.

    Raises:
        ConfigError: If no tensor file is configured or it does not exist.
    """

    path = config.tensor_file
    if path is None or not path.is_file():
        where = "no tensor file configured" if path is None else f"tensor file {path} not found"
        msg = f"{where}; run `chupscale cell-solve` first to produce tensors.json"
        raise ConfigError(msg, "tensor_file")
    return EffectiveTensors.from_json(path.read_text(encoding="utf-8"))


def write_trajectory(
    sink: OutputSink,
    config: RunConfig,
    trajectory: Trajectory,
    prefix: str,
    spacing: Sequence[float],
) -> None:
    """Write the monitor time series and, when enabled, the field snapshots."""

    sink.write_csv(
        f"{prefix}timeseries.csv",
        TIMESERIES_COLUMNS,
        (
            (r.step, r.time, r.mass, r.energy, r.phi_min, r.phi_max, r.phi_mean, r.clamped)
            for r in trajectory.records
        ),
        "monitor time series",
    )
    if config.run.snapshots:
        for state in trajectory.snapshots:
            write_snapshot(sink, config, state, prefix, spacing)
    else:
        write_snapshot(sink, config, trajectory.final, prefix, spacing)


def write_snapshot(
    sink: OutputSink,
    config: RunConfig,
    state: PhaseFieldState,
    prefix: str,
    spacing: Sequence[float],
) -> None:
    name = f"fields/{prefix}phi_{state.step:06d}"
    sink.write_field(f"{name}.txt", state.phi, f"order parameter at t={state.time!r}")
    if config.run.vtk:
        sink.write_vtk(f"{name}.vtk", state.phi, spacing, f"order parameter at t={state.time!r}")


def trajectory_summary(trajectory: Trajectory, inflow_rate: float = 0.0) -> dict[str, Any]:
    first, last = trajectory.records[0], trajectory.records[-1]
    return {
        "steps": last.step,
        "final_time": last.time,
        "mass_initial": first.mass,
        "mass_final": last.mass,
        "mass_drift": trajectory.mass_drift(inflow_rate),
        "energy_initial": first.energy,
        "energy_final": last.energy,
        "phi_min": last.phi_min,
        "phi_max": last.phi_max,
        "clamped": sum(record.clamped for record in trajectory.records),
    }


def matrix(values: npt.NDArray[np.float64]) -> list[list[float]]:
    return [[float(v) for v in row] for row in np.asarray(values)]
