"""Effective contact angle of an upscaled wall datum."""

from __future__ import annotations

from ..config import RunConfig
from ..errors import ConfigError
from ..interface import ScenarioReport
from ..output import OutputSink
from ..wetting import critical_wetting_parameter, effective_contact_angle, upscaled_g0_channel
from .common import require_cell, uniform_wetting

CONTACT_COLUMNS = ("g0", "a_eff", "A", "cos_theta", "theta_rad", "theta_deg")


class ContactAngleScenario:
    """Contact angle from ``contact.g0`` or from the cell's wall classes."""

    name = "contact-angle"
    required_sections: tuple[str, ...] = ("wetting",)

    def run(self, config: RunConfig, sink: OutputSink) -> ScenarioReport:
        wetting = uniform_wetting(config)
        if wetting is None:
            msg = "contact-angle scenario needs a 'wetting' section"
            raise ConfigError(msg, "wetting")
        if config.contact.g0 is not None:
            g0 = config.contact.g0
        elif config.geometry is not None:
            g0 = upscaled_g0_channel(require_cell(config), wetting)
        else:
            msg = "contact-angle needs either contact.g0 or a geometry section"
            raise ConfigError(msg, "contact.g0")

        angle = effective_contact_angle(g0, wetting.gamma, wetting.cahn)
        row = (g0, angle.a_eff, angle.amplitude, angle.cosine, angle.theta, angle.degrees)
        sink.write_csv("contact_angle.csv", CONTACT_COLUMNS, [row], "effective contact angle")
        summary = dict(zip(CONTACT_COLUMNS, row))
        summary["A_critical"] = critical_wetting_parameter()
        return ScenarioReport(scenario=self.name, summary=summary)
