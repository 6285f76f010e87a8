"""Time integration of the homogeneous and the upscaled Cahn-Hilliard equations.

Both steppers use the masked finite-volume operators of :mod:`.stencils`.
Closed faces carry two kinds of data: the normal derivative of ``phi`` (wall
wetting datum, zero otherwise) and the mass flux (prescribed inflow, zero
otherwise). The semi-implicit schemes treat a constant-coefficient linear
part implicitly through one sparse LU factorisation per stepper.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
import logging
from typing import Literal, Protocol, Sequence

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import splu

from .cell_solver import EffectiveTensors
from .errors import ConvergenceError, ParameterError, ensure_finite
from .free_energy import BulkFreeEnergy, chemical_potential
from .stencils import StaggeredGrid, _along

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
Scheme = Literal["explicit", "semi-implicit"]

EXPLICIT_CFL = 0.1


class FaceCondition(BaseModel):
    """Condition on one outer face of the macroscopic box.

    ``value`` is the inflow rate for ``"inflow"`` (positive adds mass) and
    the outward normal derivative of ``phi`` for ``"wall"``.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["no-flux", "inflow", "wall", "periodic"] = "no-flux"
    value: float = 0.0


class AxisBoundary(BaseModel):
    """Pair of face conditions for one axis."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    low: FaceCondition = Field(default_factory=FaceCondition)
    high: FaceCondition = Field(default_factory=FaceCondition)

    @model_validator(mode="after")
    def _periodic_pairs(self) -> "AxisBoundary":
        if (self.low.kind == "periodic") != (self.high.kind == "periodic"):
            msg = "periodic conditions must be set on both faces of an axis"
            raise ValueError(msg)
        return self

    @property
    def periodic(self) -> bool:
        return self.low.kind == "periodic"


class MacroGridSpec(BaseModel):
    """Box ``[0, L1] x ... x [0, Ld]`` with cell counts and face conditions."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    lengths: tuple[float, ...] = (1.0, 1.0)
    shape: tuple[int, ...] = (64, 64)
    boundary: tuple[AxisBoundary, ...] = ()

    @model_validator(mode="after")
    def _check(self) -> "MacroGridSpec":
        if not 1 <= len(self.lengths) <= 3 or len(self.lengths) != len(self.shape):
            msg = "lengths and shape must have the same 1 to 3 entries"
            raise ValueError(msg)
        if any(length <= 0 for length in self.lengths):
            msg = "domain lengths must be positive"
            raise ValueError(msg)
        if any(size < 2 for size in self.shape):
            msg = "every axis needs at least 2 cells"
            raise ValueError(msg)
        if self.boundary and len(self.boundary) != len(self.shape):
            msg = "boundary must list one entry per axis"
            raise ValueError(msg)
        return self

    @property
    def axes(self) -> tuple[AxisBoundary, ...]:
        return self.boundary or tuple(AxisBoundary() for _ in self.shape)


class Domain(Protocol):
    """Grid together with its closed-face data."""

    grid: StaggeredGrid

    def phi_data(self) -> list[FloatArray]: ...

    def flux_data(self) -> list[FloatArray]: ...


def _boundary_arrays(
    grid: StaggeredGrid, axes: Sequence[AxisBoundary], kind: str
) -> list[FloatArray]:
    arrays = []
    for axis, bounds in enumerate(axes):
        data = np.zeros(grid.face_shape(axis))
        if not bounds.periodic:
            if bounds.low.kind == kind:
                _along(data, axis, 0)[...] = -bounds.low.value
            if bounds.high.kind == kind:
                _along(data, axis, -1)[...] = bounds.high.value
        arrays.append(data)
    return arrays


@dataclass(frozen=True, eq=False)
class MacroGrid:
    """Uniform macroscopic grid with its boundary conditions."""

    spec: MacroGridSpec
    grid: StaggeredGrid = field(init=False, repr=False)

    def __post_init__(self) -> None:
        spacing = tuple(length / size for length, size in zip(self.spec.lengths, self.spec.shape))
        periodic = tuple(bounds.periodic for bounds in self.spec.axes)
        object.__setattr__(self, "grid", StaggeredGrid(self.spec.shape, spacing, periodic))

    @classmethod
    def create(
        cls,
        lengths: Sequence[float],
        shape: Sequence[int],
        boundary: Sequence[AxisBoundary] | None = None,
    ) -> "MacroGrid":
        return cls(
            MacroGridSpec(
                lengths=tuple(lengths), shape=tuple(shape), boundary=tuple(boundary or ())
            )
        )

    @property
    def shape(self) -> tuple[int, ...]:
        return self.grid.shape

    @property
    def spacing(self) -> tuple[float, ...]:
        return self.grid.spacing

    def centers(self) -> tuple[FloatArray, ...]:
        axes = [(np.arange(n) + 0.5) * h for n, h in zip(self.grid.shape, self.grid.spacing)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def phi_data(self) -> list[FloatArray]:
        """Face derivative data: ``d_k phi = -g`` on low walls and ``+g`` on high walls."""

        return _boundary_arrays(self.grid, self.spec.axes, "wall")

    def flux_data(self) -> list[FloatArray]:
        """Boundary mass fluxes; an inflow rate ``J`` adds ``J`` per unit area."""

        return _boundary_arrays(self.grid, self.spec.axes, "inflow")

    def inflow_rate(self) -> float:
        """Net mass added per unit time through inflow faces."""

        total = 0.0
        for axis, bounds in enumerate(self.spec.axes):
            area = float(np.prod(self.spec.lengths)) / self.spec.lengths[axis]
            for face in (bounds.low, bounds.high):
                if face.kind == "inflow":
                    total += face.value * area
        return total


class StepperConfig(BaseModel):
    """Time-stepping parameters shared by every stepper."""

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    dt: float = Field(default=1e-4, gt=0, description="Time step.")
    scheme: Scheme = Field(default="semi-implicit")
    stabilization: float = Field(
        default=2.0, ge=0, description="Linear stabilisation constant S of the convex split."
    )
    lam: float = Field(default=0.05, ge=0, alias="lambda", description="Interface width.")
    mobility: float = Field(default=1.0, gt=0, description="Isotropic mobility m.")
    tol: float = Field(default=1e-10, gt=0, description="Relative residual bound of implicit solves.")
    energy_tol: float = Field(
        default=1e-12, ge=0, description="Allowed energy increase per step, relative to max(1, |E|)."
    )
    g_tilde_sign: Literal[-1, 1] = Field(
        default=1, description="Sign s in div(D grad phi) - s * g_tilde."
    )


@dataclass(frozen=True)
class PhaseFieldState:
    """Order parameter, splitting variable ``w = -laplace(phi)``, time and step."""

    phi: FloatArray
    w: FloatArray
    time: float = 0.0
    step: int = 0


@dataclass(frozen=True)
class MacroState(PhaseFieldState):
    """State of a macroscopic run."""


@dataclass(frozen=True)
class MonitorRecord:
    step: int
    time: float
    mass: float
    energy: float
    phi_min: float
    phi_max: float
    clamped: int = 0
    phi_mean: float = 0.0


@dataclass(frozen=True)
class Trajectory:
    """Monitors and field snapshots collected by :func:`run_macro`."""

    records: list[MonitorRecord]
    snapshots: list[PhaseFieldState]

    @property
    def final(self) -> PhaseFieldState:
        return self.snapshots[-1]

    def mass_drift(self, inflow_rate: float = 0.0) -> float:
        """Relative mass change after removing the prescribed inflow."""

        first, last = self.records[0], self.records[-1]
        expected = first.mass + inflow_rate * (last.time - first.time)
        return abs(last.mass - expected) / max(abs(first.mass), 1e-300)


def initial_state(
    domain: Domain, phi: FloatArray, state_type: type[PhaseFieldState] = MacroState
) -> PhaseFieldState:
    """Wrap an initial field, zeroing solid cells."""

    grid = domain.grid
    phi = np.where(grid.pore, np.asarray(phi, dtype=float), 0.0)
    ensure_finite(phi, "initial order parameter")
    return state_type(phi=phi, w=-grid.laplacian(phi, domain.phi_data()))


def random_field(
    shape: Sequence[int], amplitude: float, seed: int, mean: float = 0.0
) -> FloatArray:
    """Seeded uniform noise in ``[mean - amplitude, mean + amplitude]``."""

    rng = np.random.default_rng(seed)
    return mean + rng.uniform(-amplitude, amplitude, size=tuple(shape))


def energy_total(
    phi: FloatArray, energy: BulkFreeEnergy, lam: float, grid: StaggeredGrid
) -> float:
    """``sum h^d F(phi) + lam^2 / 2 sum_open_faces h^d (d phi)^2``."""

    bulk = grid.integrate(energy.potential(phi))
    gradient = 0.0
    for axis in range(grid.dim):
        faces = grid.grad(phi, axis)
        if grid.periodic[axis]:
            faces = _along(faces, axis, slice(None, -1))
        gradient += float(np.sum(faces**2))
    return bulk + 0.5 * lam**2 * grid.cell_volume * gradient


def mass_total(phi: FloatArray, porosity: float, grid: StaggeredGrid) -> float:
    return porosity * grid.integrate(phi)


def zero_mass_shift(
    phi: FloatArray, grid: StaggeredGrid | None = None
) -> tuple[FloatArray, float]:
    """Split ``phi = v + mean`` with ``v`` of zero mean over the active cells."""

    phi = np.asarray(phi, dtype=float)
    if grid is None:
        mean = float(np.mean(phi))
        return phi - mean, mean
    mean = float(np.mean(phi[grid.pore]))
    return np.where(grid.pore, phi - mean, 0.0), mean


def phase_domain_count(phi: FloatArray, grid: StaggeredGrid, threshold: float = 0.0) -> int:
    """Number of face-connected regions with ``phi > threshold``."""

    inside = (phi > threshold) & grid.pore
    cells = np.flatnonzero(inside.ravel())
    if cells.size == 0:
        return 0
    flat = inside.ravel()
    rows, cols = [], []
    for axis in range(grid.dim):
        _, lower, upper = grid._face_neighbours(axis)
        keep = flat[lower] & flat[upper]
        rows.append(lower[keep])
        cols.append(upper[keep])
    row = np.concatenate(rows)
    col = np.concatenate(cols)
    adjacency = sp.csr_matrix((np.ones(row.size), (row, col)), shape=(grid.size, grid.size))
    count, _ = connected_components(adjacency[cells][:, cells], directed=False)
    return int(count)


def _check_time_step(cfg: StepperConfig, grid: StaggeredGrid) -> None:
    if cfg.scheme != "explicit":
        return
    h = min(grid.spacing)
    if cfg.lam > 0.0:
        cap = EXPLICIT_CFL * h**4 / (cfg.lam**2 * cfg.mobility)
    else:
        cap = EXPLICIT_CFL * h**2 / cfg.mobility
    if cfg.dt > cap:
        msg = f"explicit time step {cfg.dt:g} exceeds the stability cap {cap:g}"
        raise ParameterError(msg)


class _Factorized:
    """Sparse LU factorisation with a post-solve residual check."""

    def __init__(self, matrix: sp.spmatrix, tol: float) -> None:
        self.matrix = sp.csc_matrix(matrix)
        self.tol = tol
        try:
            self._lu = splu(self.matrix)
        except RuntimeError as exc:
            msg = f"implicit operator could not be factorised: {exc}"
            raise ConvergenceError(msg) from exc

    def solve(self, rhs: FloatArray) -> FloatArray:
        flat = rhs.ravel()
        x = self._lu.solve(flat)
        norm = float(np.linalg.norm(flat))
        if norm > 0.0:
            residual = float(np.linalg.norm(self.matrix @ x - flat)) / norm
            if not residual <= self.tol:
                msg = f"implicit solve residual {residual:.3e} exceeds {self.tol:g}"
                raise ConvergenceError(msg)
        return x.reshape(rhs.shape)


class CahnHilliardStepper:
    """Scalar-mobility Cahn-Hilliard stepper on a domain with closed-face data.

    The semi-implicit scheme solves

        (I - dt m S L + dt m lam^2 L L) phi' = phi + dt div(m grad mu*)

    with ``mu* = f(phi) - S phi - lam^2 b`` where ``L`` is the Laplacian with
    zero closed-face data and ``b`` the contribution of the wall data.
    """

    def __init__(self, domain: Domain, energy: BulkFreeEnergy, cfg: StepperConfig) -> None:
        self.domain = domain
        self.energy = energy
        self.cfg = cfg
        grid = domain.grid
        self._phi_data = domain.phi_data()
        self._flux_data = domain.flux_data()
        self._boundary_laplacian = grid.laplacian(np.zeros(grid.shape), self._phi_data)
        _check_time_step(cfg, grid)
        self._solver: _Factorized | None = None
        if cfg.scheme == "semi-implicit":
            lap = grid.laplacian_matrix()
            weight = cfg.dt * cfg.mobility
            matrix = (
                sp.identity(grid.size, format="csr")
                - weight * cfg.stabilization * lap
                + weight * cfg.lam**2 * (lap @ lap)
            )
            self._solver = _Factorized(matrix, cfg.tol)

    @property
    def grid(self) -> StaggeredGrid:
        return self.domain.grid

    def chemical_potential(self, phi: FloatArray) -> FloatArray:
        return chemical_potential(self.energy, phi, self.cfg.lam, self.grid, self._phi_data)

    def transport(self, potential: FloatArray) -> FloatArray:
        """``div(m grad potential)`` with prescribed fluxes on closed faces."""

        grid = self.grid
        fluxes = [
            np.where(
                grid.face_open[k],
                self.cfg.mobility * grid.grad(potential, k),
                self._flux_data[k],
            )
            for k in range(grid.dim)
        ]
        return grid.div(fluxes)

    def rhs(self, phi: FloatArray) -> FloatArray:
        return self.transport(self.chemical_potential(phi))

    def step(self, state: PhaseFieldState) -> PhaseFieldState:
        cfg = self.cfg
        phi = state.phi
        if self._solver is None:
            new = phi + cfg.dt * self.rhs(phi)
        else:
            frozen = (
                self.energy.f(phi)
                - cfg.stabilization * phi
                - cfg.lam**2 * self._boundary_laplacian
            )
            new = self._solver.solve(phi + cfg.dt * self.transport(frozen))
        ensure_finite(new, "order parameter")
        return self._advance(state, new)

    def _advance(self, state: PhaseFieldState, phi: FloatArray) -> PhaseFieldState:
        return replace(
            state,
            phi=phi,
            w=-self.grid.laplacian(phi, self._phi_data),
            time=state.time + self.cfg.dt,
            step=state.step + 1,
        )

    def monitor(self, state: PhaseFieldState) -> MonitorRecord:
        phi = state.phi[self.grid.pore]
        return MonitorRecord(
            step=state.step,
            time=state.time,
            mass=mass_total(state.phi, 1.0, self.grid),
            energy=energy_total(state.phi, self.energy, self.cfg.lam, self.grid),
            phi_min=float(phi.min()),
            phi_max=float(phi.max()),
        )


def homogeneous_rhs(
    phi: FloatArray, energy: BulkFreeEnergy, lam: float, mobility: float, domain: Domain
) -> FloatArray:
    """Discrete ``div(m grad(f(phi) - lam^2 laplace(phi)))``."""

    grid = domain.grid
    mu = chemical_potential(energy, phi, lam, grid, domain.phi_data())
    flux_data = domain.flux_data()
    fluxes = [
        np.where(grid.face_open[k], mobility * grid.grad(mu, k), flux_data[k])
        for k in range(grid.dim)
    ]
    return grid.div(fluxes)


def _upscaled_rhs(
    phi: FloatArray,
    tensors: EffectiveTensors,
    energy: BulkFreeEnergy,
    domain: Domain,
    g_tilde: npt.ArrayLike,
    g_tilde_sign: float,
) -> tuple[FloatArray, int]:
    grid = domain.grid
    data = domain.phi_data()
    flux_data = domain.flux_data()
    theta = tensors.porosity
    lam = tensors.lam
    has_mv = bool(np.any(tensors.mv))
    ratio = energy.ratio(phi)
    mw = tensors.mw_at(ratio.value) if np.any(tensors.mw_b) else tensors.mw_a
    bulk = energy.f(phi)
    quotient = 2.0 * energy.quotient(phi) - energy.f_prime(phi) if has_mv else bulk
    psi = (
        grid.tensor_divergence(phi, tensors.diffusion, data)
        - g_tilde_sign * np.asarray(g_tilde, dtype=float)
        if lam > 0.0
        else bulk
    )
    fluxes = []
    for k in range(grid.dim):
        flux = theta * tensors.mobility * grid.grad(bulk, k)
        if has_mv:
            flux = flux - grid.face_average(quotient, k) * grid.tensor_flux(
                phi, tensors.mv, k, data[k]
            )
        if lam > 0.0:
            flux = flux - (lam**2 / theta) * grid.tensor_flux(psi, mw, k)
        fluxes.append(np.where(grid.face_open[k], flux, flux_data[k]))
    total = grid.div(fluxes)
    if has_mv:
        total = total - energy.f_prime(phi) * grid.tensor_divergence(phi, tensors.mv, data)
    rhs = total / theta
    ensure_finite(rhs, "upscaled right-hand side")
    return rhs, ratio.clamp_count


def macro_rhs(
    phi: FloatArray,
    tensors: EffectiveTensors,
    energy: BulkFreeEnergy,
    domain: Domain,
    g_tilde: npt.ArrayLike = 0.0,
    g_tilde_sign: float = 1.0,
) -> FloatArray:
    """Right-hand side ``d phi / dt`` of the upscaled equation.

    The face flux is ``theta1 m grad f(phi) - q M_v grad phi - lam^2 / theta1
    M_w(phi) grad psi`` with ``q = 2 f(phi) / phi - f'(phi)`` and ``psi =
    div(D grad phi) - s g_tilde``. The result is ``(div(J) - f'(phi)
    div(M_v grad phi)) / theta1``.

    Raises:
        NumericsError: If the result contains a non-finite value.
    """

    return _upscaled_rhs(phi, tensors, energy, domain, g_tilde, g_tilde_sign)[0]


class UpscaledStepper:
    """Stepper for the upscaled equation with frozen-coefficient implicit part.

    The implicit operator is ``S m L - lam^2 / theta1^2 div(Mw grad div(D grad .))``
    with ``D`` and ``Mw`` symmetrised, ``Mw`` averaged over the first state
    the stepper sees.
    """

    def __init__(
        self,
        domain: MacroGrid,
        tensors: EffectiveTensors,
        energy: BulkFreeEnergy,
        cfg: StepperConfig,
        g_tilde: npt.ArrayLike = 0.0,
    ) -> None:
        if tensors.dimension != domain.grid.dim:
            msg = f"tensors are {tensors.dimension}D but the grid is {domain.grid.dim}D"
            raise ParameterError(msg)
        if not np.isclose(tensors.lam, cfg.lam) or not np.isclose(tensors.mobility, cfg.mobility):
            msg = (
                f"tensors were assembled with lambda={tensors.lam}, m={tensors.mobility} "
                f"but the stepper uses lambda={cfg.lam}, m={cfg.mobility}"
            )
            raise ParameterError(msg)
        _check_time_step(cfg, domain.grid)
        self.domain = domain
        self.tensors = tensors
        self.energy = energy
        self.cfg = cfg
        self.g_tilde = np.asarray(g_tilde, dtype=float)
        self.last_clamp_count = 0
        self._phi_data = domain.phi_data()
        self._solver: _Factorized | None = None
        self._implicit: sp.csr_matrix | None = None

    @property
    def grid(self) -> StaggeredGrid:
        return self.domain.grid

    def rhs(self, phi: FloatArray) -> FloatArray:
        rhs, clamped = _upscaled_rhs(
            phi, self.tensors, self.energy, self.domain, self.g_tilde, self.cfg.g_tilde_sign
        )
        self.last_clamp_count = clamped
        if clamped:
            logger.debug("Ratio clamped at %d cell(s)", clamped)
        return rhs

    def _build_implicit(self, phi: FloatArray) -> None:
        cfg = self.cfg
        grid = self.grid
        tensors = self.tensors
        mean_ratio = float(np.mean(self.energy.ratio(phi).value))
        mw = tensors.mw_at(mean_ratio)
        mw = 0.5 * (mw + mw.T)
        diffusion = 0.5 * (tensors.diffusion + tensors.diffusion.T)
        implicit = cfg.stabilization * cfg.mobility * grid.laplacian_matrix()
        if cfg.lam > 0.0:
            implicit = implicit - (cfg.lam**2 / tensors.porosity**2) * (
                grid.tensor_divergence_matrix(mw) @ grid.tensor_divergence_matrix(diffusion)
            )
        self._implicit = sp.csr_matrix(implicit)
        self._solver = _Factorized(
            sp.identity(grid.size, format="csr") - cfg.dt * self._implicit, cfg.tol
        )
        logger.debug("Factorised implicit operator with mean ratio %.6g", mean_ratio)

    def step(self, state: PhaseFieldState) -> PhaseFieldState:
        cfg = self.cfg
        phi = state.phi
        rhs = self.rhs(phi)
        if cfg.scheme == "explicit":
            new = phi + cfg.dt * rhs
        else:
            if self._solver is None:
                self._build_implicit(phi)
            assert self._solver is not None and self._implicit is not None
            linear = (self._implicit @ phi.ravel()).reshape(phi.shape)
            new = self._solver.solve(phi + cfg.dt * (rhs - linear))
        ensure_finite(new, "order parameter")
        return replace(
            state,
            phi=new,
            w=-self.grid.laplacian(new, self._phi_data),
            time=state.time + cfg.dt,
            step=state.step + 1,
        )

    def monitor(self, state: PhaseFieldState) -> MonitorRecord:
        return MonitorRecord(
            step=state.step,
            time=state.time,
            mass=mass_total(state.phi, self.tensors.porosity, self.grid),
            energy=energy_total(state.phi, self.energy, self.cfg.lam, self.grid),
            phi_min=float(state.phi.min()),
            phi_max=float(state.phi.max()),
            clamped=self.last_clamp_count,
        )


class Stepper(Protocol):
    cfg: StepperConfig

    @property
    def grid(self) -> StaggeredGrid: ...

    def step(self, state: PhaseFieldState) -> PhaseFieldState: ...

    def monitor(self, state: PhaseFieldState) -> MonitorRecord: ...


def step_homogeneous(
    state: PhaseFieldState, energy: BulkFreeEnergy, cfg: StepperConfig, domain: Domain
) -> PhaseFieldState:
    """Advance the homogeneous equation by one step (builds a fresh stepper)."""

    return CahnHilliardStepper(domain, energy, cfg).step(state)


def step_macro(
    state: PhaseFieldState,
    tensors: EffectiveTensors,
    energy: BulkFreeEnergy,
    cfg: StepperConfig,
    domain: MacroGrid,
    g_tilde: npt.ArrayLike = 0.0,
) -> PhaseFieldState:
    """Advance the upscaled equation by one step (builds a fresh stepper)."""

    return UpscaledStepper(domain, tensors, energy, cfg, g_tilde).step(state)


def run_macro(
    stepper: Stepper, state: PhaseFieldState, steps: int, cadence: int = 1
) -> Trajectory:
    """Advance ``steps`` times, recording monitors and snapshots every ``cadence`` steps.

    The initial and final states are always recorded. Every step splits
    ``phi`` into its mean and zero-mass part and checks the energy against
    the previous step; increases beyond ``cfg.energy_tol`` are logged as a
    warning at the end of the run.
    """

    if steps < 0 or cadence < 1:
        msg = "steps must be non-negative and cadence positive"
        raise ParameterError(msg)
    tol = stepper.cfg.energy_tol
    record = _observe(stepper, state)
    records = [record]
    snapshots = [state]
    clamped = record.clamped
    increases: list[tuple[int, float]] = []
    for index in range(1, steps + 1):
        previous = record.energy
        state = stepper.step(state)
        record = _observe(stepper, state)
        clamped += record.clamped
        rise = record.energy - previous
        if rise > tol * max(1.0, abs(previous)):
            increases.append((record.step, rise))
        if index % cadence == 0 or index == steps:
            records.append(record)
            snapshots.append(state)
    if clamped:
        logger.warning("Ratio denominator clamped %d time(s) during the run", clamped)
    if increases:
        step, rise = max(increases, key=lambda item: item[1])
        logger.warning(
            "Energy increased beyond tolerance at %d step(s); largest rise %.3g at step %d",
            len(increases),
            rise,
            step,
        )
    return Trajectory(records=records, snapshots=snapshots)


def _observe(stepper: Stepper, state: PhaseFieldState) -> MonitorRecord:
    v, mean = zero_mass_shift(state.phi, stepper.grid)
    record = replace(stepper.monitor(state), phi_mean=mean)
    logger.debug(
        "step %d t=%.6g mass=%.12g energy=%.12g mean=%.12g max|v|=%.6g",
        record.step,
        record.time,
        record.mass,
        record.energy,
        mean,
        float(np.max(np.abs(v))),
    )
    return record
