"""Pore-scale runs and their comparison with the upscaled equation."""

from __future__ import annotations

import logging
from typing import Any

import numpy as np

from ..cell_geometry import ReferenceCell
from ..cell_solver import assemble_tensors, solve_corrector_v
from ..config import RunConfig
from ..interface import ScenarioReport
from ..macro_solver import (
    CahnHilliardStepper,
    MacroGrid,
    Trajectory,
    UpscaledStepper,
    initial_state,
    run_macro,
)
from ..micro_solver import (
    MicroState,
    PerforatedGrid,
    build_perforated_domain,
    cell_average,
    compare_micro_macro,
    local_equilibrium_diagnostic,
    reconstruct_first_order,
    run_micro,
)
from ..output import OutputSink
from .common import (
    initial_phi,
    load_tensors,
    macro_grid,
    matrix,
    require_cell,
    trajectory_summary,
    uniform_wetting,
    write_trajectory,
)

logger = logging.getLogger(__name__)

COMPARE_COLUMNS = ("epsilon", "time", "l2_error", "max_error")


def _label(epsilon: float) -> str:
    return f"eps{epsilon:.6g}_"


def _micro_run(
    config: RunConfig, cell: ReferenceCell, epsilon: float, sink: OutputSink
) -> tuple[PerforatedGrid, Trajectory, dict[str, Any]]:
    domain = build_perforated_domain(
        cell,
        epsilon,
        config.grid.lengths,
        resolution=config.micro.resolution,
        boundary=config.grid.axes,
        wetting=uniform_wetting(config),
        channel_fractions=config.micro.channel_fractions,
    )
    fine = MacroGrid.create(config.grid.lengths, domain.grid.shape, config.grid.axes)
    energy = config.energy.build()
    start = initial_state(domain, initial_phi(config, fine), MicroState)
    stepper = CahnHilliardStepper(domain, energy, config.stepper)
    trajectory = run_micro(stepper, start, config.run.steps, config.run.cadence)

    label = _label(epsilon)
    write_trajectory(sink, config, trajectory, label, domain.grid.spacing)
    sink.write_field(
        f"fields/{label}cell_average.txt",
        cell_average(trajectory.final.phi, domain),
        "pore-weighted eps-cell averages of the final order parameter",
    )
    lam = config.stepper.lam
    before = local_equilibrium_diagnostic(start, domain, energy, lam)
    after = local_equilibrium_diagnostic(trajectory.final, domain, energy, lam)
    sink.write_field(
        f"fields/{label}equilibrium.txt",
        after,
        "per-cell spread of the chemical potential at the final time",
    )
    summary = trajectory_summary(trajectory)
    summary.update(
        epsilon=epsilon,
        porosity=domain.porosity,
        equilibrium_initial=float(np.mean(before)),
        equilibrium_final=float(np.mean(after)),
    )
    return domain, trajectory, summary


class MicroScenario:
    """Pore-scale Cahn-Hilliard runs on the tiled domain, one per epsilon."""

    name = "micro"
    required_sections: tuple[str, ...] = ("geometry",)

    def run(self, config: RunConfig, sink: OutputSink) -> ScenarioReport:
        cell = require_cell(config)
        runs = [_micro_run(config, cell, epsilon, sink)[2] for epsilon in config.micro.epsilons]
        return ScenarioReport(scenario=self.name, summary={"runs": runs})


class CompareScenario:
    """Upscaled run against cell averages of pore-scale runs.

    Tensors come from the configured tensor file, or are assembled from the
    geometry when none is given. Both runs share ``dt``, ``steps`` and the
    output cadence so their snapshot times coincide.
    """

    name = "compare"
    required_sections: tuple[str, ...] = ("geometry",)

    def run(self, config: RunConfig, sink: OutputSink) -> ScenarioReport:
        cell = require_cell(config)
        stepper = config.stepper
        if config.tensor_file is not None:
            tensors = load_tensors(config)
        else:
            tensors = assemble_tensors(
                cell,
                lam=stepper.lam,
                mobility=stepper.mobility,
                tol=config.solver.tol,
                threads=config.run.threads,
                mv_form=config.solver.mv_form,
            ).tensors
        grid = macro_grid(config)
        energy = config.energy.build()
        macro = run_macro(
            UpscaledStepper(grid, tensors, energy, stepper),
            initial_state(grid, initial_phi(config, grid)),
            config.run.steps,
            config.run.cadence,
        )
        write_trajectory(sink, config, macro, "macro_", grid.spacing)

        rows = []
        runs = []
        xi_v = solve_corrector_v(cell, config.solver.tol) if config.micro.reconstruct else None
        for epsilon in config.micro.epsilons:
            domain, micro, summary = _micro_run(config, cell, epsilon, sink)
            report = compare_micro_macro(micro, macro, domain)
            rows.extend(report.rows)
            summary.update(l2_error=report.final.l2, max_error=report.final.max)
            if xi_v is not None:
                rebuilt = reconstruct_first_order(macro.final.phi, xi_v, domain, grid)
                sink.write_field(
                    f"fields/{_label(epsilon)}reconstruction.txt",
                    rebuilt,
                    "first-order reconstruction of the final upscaled field",
                )
                gap = np.where(domain.grid.pore, rebuilt - micro.final.phi, 0.0)
                summary["reconstruction_l2"] = float(np.sqrt(domain.grid.integrate(gap**2)))
            runs.append(summary)

        sink.write_csv(
            "compare.csv",
            COMPARE_COLUMNS,
            ((row.epsilon, row.time, row.l2, row.max) for row in rows),
            "cell-averaged micro vs upscaled error per epsilon and time",
        )
        errors = [run["l2_error"] for run in runs]
        summary = {
            "porosity": tensors.porosity,
            "D": matrix(tensors.diffusion),
            "runs": runs,
            "max_l2_error": max(errors),
            "monotone": all(a > b for a, b in zip(errors, errors[1:])),
        }
        return ScenarioReport(scenario=self.name, summary=summary)
