"""Exception hierarchy shared by the solver modules and the CLI layers."""

from __future__ import annotations

from typing import Sequence

import numpy as np
import numpy.typing as npt


class ChUpscaleError(RuntimeError):
    """Base class for every error raised by chupscale."""


class GeometryError(ChUpscaleError):
    """Raised when a reference cell or perforated grid is invalid."""


class ParameterError(ChUpscaleError, ValueError):
    """Raised when a physical or numerical parameter violates its precondition."""


class SolvabilityError(ChUpscaleError):
    """Raised when a periodic cell problem fails its compatibility condition."""


class ConvergenceError(ChUpscaleError):
    """Raised when an iterative or factorized linear solve misses its tolerance."""


class NumericsError(ChUpscaleError):
    """Raised when a field picks up non-finite values.

    Args:
        message: Human readable description.
        location: Grid multi-index of the first offending value, if known.
    """

    def __init__(self, message: str, location: Sequence[int] | None = None) -> None:
        self.location = tuple(int(i) for i in location) if location is not None else None
        if self.location is not None:
            message = f"{message} at index {self.location}"
        super().__init__(message)


class DomainError(ChUpscaleError, ValueError):
    """Raised when an input lies outside the domain of a closed-form expression."""


class InterpolationError(ChUpscaleError):
    """Raised when two trajectories cannot be matched in time."""


class ConfigError(ChUpscaleError):
    """Raised when a run configuration cannot be parsed or validated.

    Args:
        message: Description of the failure.
        key_path: Dotted path of the offending key, if known.
        line: 1-based line number in the source text, if known.
    """

    def __init__(
        self, message: str, key_path: str | None = None, line: int | None = None
    ) -> None:
        self.key_path = key_path
        self.line = line
        details: list[str] = []
        if key_path:
            details.append(f"key '{key_path}'")
        if line is not None:
            details.append(f"line {line}")
        if details:
            message = f"{message} ({', '.join(details)})"
        super().__init__(message)


def first_nonfinite(values: npt.ArrayLike) -> tuple[int, ...] | None:
    """Return the index of the first non-finite entry of an array, or ``None``."""

    array = np.asarray(values)
    bad = ~np.isfinite(array)
    if not bad.any():
        return None
    return tuple(int(i) for i in np.argwhere(bad)[0])


def ensure_finite(values: npt.ArrayLike, what: str) -> None:
    """Raise :class:`NumericsError` if ``values`` contains NaN or infinity."""

    location = first_nonfinite(values)
    if location is not None:
        raise NumericsError(f"non-finite value in {what}", location)
