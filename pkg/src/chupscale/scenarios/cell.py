"""Cell-problem scenario: correctors and effective tensors of one reference cell."""

from __future__ import annotations

import logging

from ..cell_solver import assemble_tensors
from ..config import RunConfig
from ..interface import ScenarioReport
from ..output import OutputSink, format_tensor_report
from .common import matrix, require_cell

logger = logging.getLogger(__name__)


class CellScenario:
    """Solve the cell problems and write the tensor report."""

    name = "cell"
    required_sections: tuple[str, ...] = ("geometry",)

    def run(self, config: RunConfig, sink: OutputSink) -> ScenarioReport:
        cell = require_cell(config)
        stepper = config.stepper
        solution = assemble_tensors(
            cell,
            lam=stepper.lam,
            mobility=stepper.mobility,
            tol=config.solver.tol,
            threads=config.run.threads,
            mv_form=config.solver.mv_form,
        )
        tensors = solution.tensors

        sink.write_text("cell.txt", cell.export_bitmap(), "pore mask (1 = pore)")
        sink.write_text("wall_classes.txt", cell.export_wall_classes(), "wall class per cell")
        sink.write_json("tensors.json", tensors.to_dict(), "effective tensors (macro-run input)")
        sink.write_text("tensors.txt", format_tensor_report(tensors), "effective tensor report")
        if config.solver.write_correctors:
            for k, field in enumerate(solution.corrector_v.fields, start=1):
                sink.write_field(f"correctors/xi_v_{k}.txt", field, f"corrector xi_v^{k}")
            units = solution.corrector_w
            for k, (a, b) in enumerate(zip(units.chi_a, units.chi_b), start=1):
                sink.write_field(f"correctors/chi_a_{k}.txt", a, f"unit corrector chi_a^{k}")
                sink.write_field(f"correctors/chi_b_{k}.txt", b, f"unit corrector chi_b^{k}")

        summary = {
            "porosity": tensors.porosity,
            "interface_measure": float(cell.interface_measure()),
            "class_measures": [float(m) for m in cell.class_measures],
            "D": matrix(tensors.diffusion),
            "Mv": matrix(tensors.mv),
            "Mw_a": matrix(tensors.mw_a),
            "Mw_b": matrix(tensors.mw_b),
            "max_residual": float(max(solution.corrector_v.residuals)),
        }
        return ScenarioReport(scenario=self.name, summary=summary)
