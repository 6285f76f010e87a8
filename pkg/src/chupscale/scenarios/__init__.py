"""Scenario implementations registered under ``chupscale.scenarios``."""

from .cell import CellScenario
from .channel import ChannelScenario
from .energy import CheckFScenario
from .macro import HomogeneousScenario, UpscaledScenario
from .micro import CompareScenario, MicroScenario
from .wetting import ContactAngleScenario

__all__ = [
    "CellScenario",
    "ChannelScenario",
    "CheckFScenario",
    "CompareScenario",
    "ContactAngleScenario",
    "HomogeneousScenario",
    "MicroScenario",
    "UpscaledScenario",
]
