"""Run configuration: validated models, YAML parsing and serialisation.

Every scenario is described by one :class:`RunConfig`. Configuration files are
YAML (JSON is accepted as a subset). Validation errors are reported with the
dotted key path and the line of the offending key in the source text.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Literal, Mapping, Sequence, get_args

import numpy as np
import numpy.typing as npt
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .cell_geometry import CellGeometrySpec
from .cell_solver import MvForm
from .errors import ConfigError
from .free_energy import BulkFreeEnergy
from .macro_solver import MacroGridSpec, StepperConfig, random_field
from .wetting import WettingSpec

ScenarioTag = Literal[
    "cell",
    "homogeneous",
    "upscaled",
    "micro",
    "compare",
    "channel",
    "contact-angle",
    "check-f",
]

SCENARIOS: tuple[str, ...] = get_args(ScenarioTag)


class EnergySpec(BaseModel):
    """Bulk free energy selection.

    ``standard`` is ``f(s) = s^3 - s``; ``polynomial`` takes the coefficients
    ``a0..a3`` of ``f``; ``double-well`` expands ``(s - alpha1)^2 (s - alpha2)^2``.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["standard", "polynomial", "double-well"] = "standard"
    a0: float = 0.0
    a1: float = 0.0
    a2: float = 0.0
    a3: float = 0.0
    alpha1: float | None = None
    alpha2: float | None = None
    delta_reg: float = Field(default=1e-8, gt=0, description="Ratio denominator floor.")

    @model_validator(mode="after")
    def _wells_for_double_well(self) -> "EnergySpec":
        if self.kind == "double-well" and (self.alpha1 is None or self.alpha2 is None):
            msg = "double-well energy needs alpha1 and alpha2"
            raise ValueError(msg)
        return self

    def build(self) -> BulkFreeEnergy:
        if self.kind == "double-well":
            assert self.alpha1 is not None and self.alpha2 is not None
            return BulkFreeEnergy.from_wells(self.alpha1, self.alpha2, self.delta_reg)
        if self.kind == "polynomial":
            return BulkFreeEnergy(
                a0=self.a0, a1=self.a1, a2=self.a2, a3=self.a3, delta_reg=self.delta_reg
            )
        return BulkFreeEnergy.standard().model_copy(update={"delta_reg": self.delta_reg})


class InitialCondition(BaseModel):
    """Initial order parameter on the macroscopic box.

    ``noise`` draws seeded uniform values in ``mean +- amplitude``;
    ``cosine`` is ``mean + amplitude cos(2 pi k x1 / L1)``.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["noise", "cosine", "constant"] = "noise"
    mean: float = 0.0
    amplitude: float = Field(default=0.1, ge=0)
    wavenumber: int = Field(default=1, ge=0)

    def sample(
        self, centers: Sequence[npt.NDArray[np.float64]], length: float, seed: int
    ) -> npt.NDArray[np.float64]:
        shape = centers[0].shape
        if self.kind == "noise":
            return random_field(shape, self.amplitude, seed, self.mean)
        if self.kind == "cosine":
            phase = 2.0 * np.pi * self.wavenumber * centers[0] / length
            return self.mean + self.amplitude * np.cos(phase)
        return np.full(shape, self.mean)


class SolverSpec(BaseModel):
    """Cell-problem solver options."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    tol: float = Field(default=1e-10, gt=0, description="Relative CG residual bound.")
    mv_form: MvForm = Field(default="appendix", description="'appendix' or 'theorem'.")
    write_correctors: bool = True


class MicroSpec(BaseModel):
    """Pore-scale run options."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    epsilons: list[float] = Field(default_factory=lambda: [0.25], min_length=1)
    resolution: int | None = Field(
        default=None, ge=2, description="Fine cells per unit length (defaults to n / epsilon)."
    )
    channel_fractions: list[float] | None = None
    reconstruct: bool = False


class ContactSpec(BaseModel):
    """Inputs of the contact-angle scenario; ``g0`` wins over the cell route."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    g0: float | None = None


class RunSpec(BaseModel):
    """Run length, output cadence and reproducibility knobs."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    steps: int = Field(default=100, ge=0)
    cadence: int = Field(default=10, ge=1, description="Record every this many steps.")
    seed: int = Field(default=0, ge=0, lt=2**64)
    threads: int = Field(default=1, ge=1)
    output_dir: Path = Path("chupscale-out")
    snapshots: bool = Field(default=True, description="Write field snapshots.")
    vtk: bool = Field(default=True, description="Also write legacy-VTK snapshots.")


class RunConfig(BaseModel):
    """Complete description of one scenario run."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    scenario: ScenarioTag = "homogeneous"
    geometry: CellGeometrySpec | None = None
    energy: EnergySpec = Field(default_factory=EnergySpec)
    stepper: StepperConfig = Field(default_factory=StepperConfig)
    grid: MacroGridSpec = Field(default_factory=MacroGridSpec)
    wetting: WettingSpec | None = None
    initial: InitialCondition = Field(default_factory=InitialCondition)
    solver: SolverSpec = Field(default_factory=SolverSpec)
    micro: MicroSpec = Field(default_factory=MicroSpec)
    contact: ContactSpec = Field(default_factory=ContactSpec)
    tensor_file: Path | None = None
    run: RunSpec = Field(default_factory=RunSpec)


class RuntimeSettings(BaseSettings):
    """Environment defaults, e.g. ``CHUPSCALE_THREADS=4``."""

    model_config = SettingsConfigDict(env_prefix="CHUPSCALE_", extra="ignore")

    threads: int = Field(default=1, ge=1)
    log_level: str = "WARNING"


def _locate(node: yaml.Node | None, loc: Sequence[int | str]) -> tuple[list[str], int | None]:
    """Follow a validation location through the YAML node tree.

    A location part equal to the ``kind`` value of the current mapping is a
    union tag and is skipped. Once the path leaves the tree the remaining
    parts are kept without line information.
    """

    parts: list[str] = []
    line = None if node is None else node.start_mark.line + 1
    current = node
    for part in loc:
        key = str(part)
        if isinstance(current, yaml.MappingNode):
            entries = {str(k.value): (k, v) for k, v in current.value}
            kind = entries.get("kind")
            if key not in entries and kind is not None and str(kind[1].value) == key:
                continue
            parts.append(key)
            if key in entries:
                key_node, current = entries[key]
                line = key_node.start_mark.line + 1
            else:
                current = None
        elif (
            isinstance(current, yaml.SequenceNode)
            and isinstance(part, int)
            and part < len(current.value)
        ):
            parts.append(key)
            current = current.value[part]
            line = current.start_mark.line + 1
        else:
            parts.append(key)
            current = None
    return parts, line


def load_config_data(text: str) -> tuple[dict[str, Any], yaml.Node | None]:
    """Parse YAML text into a mapping plus its node tree (for line numbers).

    Raises:
        ConfigError: If the text is not YAML or not a mapping.
    """

    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(
            "configuration is not valid YAML", line=None if mark is None else mark.line + 1
        ) from exc
    if data is None:
        return {}, None
    if not isinstance(data, dict):
        msg = "configuration must define a mapping"
        raise ConfigError(msg, line=1)
    return data, node


def validate_config(data: Mapping[str, Any], node: yaml.Node | None = None) -> RunConfig:
    """Validate a raw mapping, reporting the first error with key path and line."""

    try:
        return RunConfig.model_validate(dict(data))
    except ValidationError as exc:
        error = exc.errors()[0]
        parts, line = _locate(node, error["loc"])
        message = str(error["msg"])
        if error["type"] == "extra_forbidden":
            message = f"unknown key '{parts[-1]}'" if parts else "unknown key"
        raise ConfigError(message, ".".join(parts) or None, line) from exc


def parse_config(text: str) -> RunConfig:
    """Parse and validate configuration text.

    Raises:
        ConfigError: On YAML syntax errors, unknown keys or invalid values.
    """

    data, node = load_config_data(text)
    return validate_config(data, node)


def config_payload(config: RunConfig) -> dict[str, Any]:
    return config.model_dump(mode="json", by_alias=True, exclude_none=True)


def serialize_config(config: RunConfig) -> str:
    """Dump ``config`` as YAML; ``parse_config`` of the result gives ``config`` back."""

    return yaml.safe_dump(config_payload(config), sort_keys=False)


def config_hash(config: RunConfig) -> str:
    """sha256 of the canonical JSON form of ``config``."""

    material = json.dumps(
        config_payload(config), ensure_ascii=False, sort_keys=True, separators=(",", ":")
    )
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


def merge_parameters(base: Mapping[str, Any], overrides: Mapping[str, Any]) -> dict[str, Any]:
    """Recursively merge ``overrides`` into a copy of ``base``."""

    merged: dict[str, Any] = dict(base)
    for key, value in overrides.items():
        current = merged.get(key)
        if isinstance(current, Mapping) and isinstance(value, Mapping):
            merged[key] = merge_parameters(current, value)
        else:
            merged[key] = value
    return merged


def template_config(scenario: ScenarioTag) -> RunConfig:
    """Sample configuration for ``scenario`` with every section it reads filled in."""

    data: dict[str, Any] = {"scenario": scenario}
    if scenario in {"cell", "micro", "compare", "channel", "contact-angle"}:
        data["geometry"] = {
            "resolution": 32,
            "inclusion": {"kind": "ball", "center": [0.5, 0.5], "radius": 0.3},
        }
    if scenario in {"channel", "contact-angle", "micro", "compare"}:
        data["wetting"] = WettingSpec().model_dump()
    if scenario == "upscaled":
        data["tensor_file"] = "chupscale-out/tensors.json"
    if scenario == "check-f":
        data["energy"] = {"kind": "double-well", "alpha1": 1.0, "alpha2": 2.0}
    if scenario == "channel":
        wall = {"low": {"kind": "no-flux"}, "high": {"kind": "no-flux"}}
        periodic = {"low": {"kind": "periodic"}, "high": {"kind": "periodic"}}
        data["grid"] = {"boundary": [periodic, wall]}
    return RunConfig.model_validate(data)
