"""Admissibility check of a double-well potential."""

from __future__ import annotations

from ..config import RunConfig
from ..errors import ConfigError
from ..free_energy import check_assumption_F
from ..interface import ScenarioReport
from ..output import OutputSink


class CheckFScenario:
    """Evaluate Assumption F for the wells of a ``double-well`` energy."""

    name = "check-f"
    required_sections: tuple[str, ...] = ()

    def run(self, config: RunConfig, sink: OutputSink) -> ScenarioReport:
        energy = config.energy
        if energy.kind != "double-well" or energy.alpha1 is None or energy.alpha2 is None:
            msg = "check-f needs a double-well energy with alpha1 and alpha2"
            raise ConfigError(msg, "energy.kind")
        satisfied = check_assumption_F(energy.alpha1, energy.alpha2)
        verdict = f"Assumption F: {'satisfied' if satisfied else 'violated'}"
        sink.write_text(
            "check_f.txt",
            f"alpha1: {energy.alpha1!r}\nalpha2: {energy.alpha2!r}\n{verdict}\n",
            "Assumption F verdict",
        )
        summary = {
            "alpha1": energy.alpha1,
            "alpha2": energy.alpha2,
            "satisfied": satisfied,
            "verdict": verdict,
        }
        return ScenarioReport(scenario=self.name, summary=summary)
