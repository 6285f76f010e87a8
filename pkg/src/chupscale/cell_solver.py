"""Periodic corrector problems on the pore part of a reference cell.

All cell problems share one weak formulation: find a periodic, zero-mean
field ``u`` on the pore cells such that

    sum_faces h^d grad(u) . grad(v) = sum_cells h^d s v + sum_interface h^(d-1) g v
                                      + sum_faces h^d V . grad(v)

for every periodic test field ``v``. ``s`` is a volumetric source, ``g`` the
outward normal flux on pore-solid faces and ``V`` a face load supported on
open faces. The effective tensors are face sums of corrector gradients.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import json
import logging
import threading
from typing import Any, Callable, Literal, Sequence
from weakref import WeakKeyDictionary

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg

from .cell_geometry import ReferenceCell
from .errors import ConvergenceError, ParameterError, SolvabilityError
from .stencils import _along

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
Fields = tuple[FloatArray, ...]
MvForm = Literal["appendix", "theorem"]

COMPATIBILITY_TOLERANCE = 1e-10


@dataclass(frozen=True)
class CorrectorV:
    """Correctors ``xi_v^k`` for ``k = 1..d`` and their relative residuals."""

    fields: Fields
    residuals: tuple[float, ...]

    @property
    def dimension(self) -> int:
        return len(self.fields)


@dataclass(frozen=True)
class CorrectorWUnits:
    """Affine split ``xi_w^k = chi_a^k + r * chi_b^k`` of the second corrector.

    Attributes:
        chi_a: Ratio-independent parts.
        chi_b: Coefficients of the ratio ``r``.
        lam: Interface width used for the loads.
        mobility: Isotropic mobility used for the loads.
        residuals: Relative residuals of the ``2 d`` solves.
    """

    chi_a: Fields
    chi_b: Fields
    lam: float
    mobility: float
    residuals: tuple[float, ...]

    def recombine(self, ratio: float) -> Fields:
        """Return ``xi_w`` for a spatially constant ratio value."""

        return tuple(a + ratio * b for a, b in zip(self.chi_a, self.chi_b))


@dataclass(frozen=True)
class EffectiveTensors:
    """Porosity and effective tensors of a reference cell.

    ``M_w`` depends on the macroscopic state through ``r(phi_0)``; it is stored
    as the affine pair ``(mw_a, mw_b)`` and rebuilt by :meth:`mw_at`.
    """

    porosity: float
    diffusion: FloatArray
    mv: FloatArray
    mw_a: FloatArray
    mw_b: FloatArray
    mobility: float
    lam: float
    mv_form: MvForm = "appendix"

    @property
    def dimension(self) -> int:
        return int(self.diffusion.shape[0])

    @classmethod
    def trivial(cls, dimension: int, mobility: float, lam: float) -> "EffectiveTensors":
        """Tensors of a cell without perforation."""

        identity = np.eye(dimension)
        return cls(
            porosity=1.0,
            diffusion=identity,
            mv=np.zeros((dimension, dimension)),
            mw_a=mobility * identity,
            mw_b=np.zeros((dimension, dimension)),
            mobility=mobility,
            lam=lam,
        )

    def mw_at(self, ratio: float | npt.ArrayLike) -> FloatArray:
        """Evaluate ``M_w = M_w_a + r M_w_b``.

        A scalar ratio yields a ``(d, d)`` matrix, a ratio field of shape ``S``
        a ``(d, d, *S)`` tensor field.
        """

        r = np.asarray(ratio, dtype=float)
        if r.ndim == 0:
            return self.mw_a + float(r) * self.mw_b
        expand = (slice(None), slice(None)) + (None,) * r.ndim
        return self.mw_a[expand] + r[None, None] * self.mw_b[expand]

    def to_dict(self) -> dict[str, Any]:
        return {
            "theta1": self.porosity,
            "D": self.diffusion.tolist(),
            "Mv": self.mv.tolist(),
            "Mw_a": self.mw_a.tolist(),
            "Mw_b": self.mw_b.tolist(),
            "mobility": self.mobility,
            "lambda": self.lam,
            "mv_form": self.mv_form,
        }

    def to_json(self) -> str:
        # repr-based float encoding keeps the file lossless.
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "EffectiveTensors":
        try:
            tensors = cls(
                porosity=float(payload["theta1"]),
                diffusion=np.array(payload["D"], dtype=float),
                mv=np.array(payload["Mv"], dtype=float),
                mw_a=np.array(payload["Mw_a"], dtype=float),
                mw_b=np.array(payload["Mw_b"], dtype=float),
                mobility=float(payload["mobility"]),
                lam=float(payload["lambda"]),
                mv_form=payload.get("mv_form", "appendix"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            msg = f"invalid tensor payload: {exc}"
            raise ParameterError(msg) from exc
        d = tensors.dimension
        for name in ("diffusion", "mv", "mw_a", "mw_b"):
            if getattr(tensors, name).shape != (d, d):
                msg = f"tensor '{name}' must be {d}x{d}"
                raise ParameterError(msg)
        if not 0.0 < tensors.porosity <= 1.0:
            msg = f"porosity must lie in (0, 1], got {tensors.porosity}"
            raise ParameterError(msg)
        return tensors

    @classmethod
    def from_json(cls, text: str) -> "EffectiveTensors":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            msg = "tensor file is not valid JSON"
            raise ParameterError(msg) from exc
        return cls.from_dict(payload)


@dataclass(frozen=True)
class CellSolution:
    """Bundle returned by :func:`assemble_tensors`."""

    tensors: EffectiveTensors
    corrector_v: CorrectorV
    corrector_w: CorrectorWUnits


class _CellSystem:
    """Pore-restricted stiffness matrix of one reference cell."""

    def __init__(self, cell: ReferenceCell) -> None:
        grid = cell.grid
        self.cell = cell
        self.index = np.flatnonzero(cell.pore.ravel())
        stiffness = -grid.cell_volume * grid.laplacian_matrix()
        self.matrix = sp.csr_matrix(stiffness[self.index][:, self.index])
        size = self.index.size
        self.projector = LinearOperator(
            (size, size), matvec=lambda v: v - v.mean(), dtype=np.float64
        )
        self.maxiter = 50 * cell.resolution**cell.dimension

    def rhs(
        self,
        source: FloatArray | None = None,
        flux: npt.ArrayLike | None = None,
        load: Sequence[FloatArray] | None = None,
    ) -> FloatArray:
        grid = self.cell.grid
        total = np.zeros(grid.shape)
        if source is not None:
            total = total + np.asarray(source, dtype=float)
        if flux is not None and len(self.cell.interface):
            total = total + grid.div(self.cell.interface_face_arrays(flux))
        if load is not None:
            opened = [np.where(grid.face_open[k], load[k], 0.0) for k in range(grid.dim)]
            total = total - grid.div(opened)
        b = grid.cell_volume * total.ravel()[self.index]
        imbalance = abs(float(b.sum()))
        if imbalance > COMPATIBILITY_TOLERANCE * max(1.0, float(np.abs(b).sum())):
            msg = f"cell problem data is incompatible (net source {imbalance:.3e})"
            raise SolvabilityError(msg)
        return b - b.mean()

    def solve(self, b: FloatArray, tol: float) -> tuple[FloatArray, float]:
        field = np.zeros(self.cell.pore.size)
        norm = float(np.linalg.norm(b))
        if norm == 0.0:
            return field.reshape(self.cell.pore.shape), 0.0
        x, info = cg(
            self.matrix, b, rtol=tol, atol=0.0, maxiter=self.maxiter, M=self.projector
        )
        if info != 0:
            msg = f"conjugate gradient stopped with info={info} (tol {tol:g})"
            raise ConvergenceError(msg)
        x = x - x.mean()
        residual = float(np.linalg.norm(b - self.matrix @ x)) / norm
        logger.debug("Cell solve: %d unknowns, relative residual %.3e", x.size, residual)
        field[self.index] = x
        return field.reshape(self.cell.pore.shape), residual


_SYSTEMS: WeakKeyDictionary[ReferenceCell, _CellSystem] = WeakKeyDictionary()
_SYSTEMS_LOCK = threading.Lock()


def _system(cell: ReferenceCell) -> _CellSystem:
    with _SYSTEMS_LOCK:
        system = _SYSTEMS.get(cell)
        if system is None:
            system = _CellSystem(cell)
            _SYSTEMS[cell] = system
        return system


def _solve_all(
    cell: ReferenceCell,
    loads: Sequence[Sequence[FloatArray]],
    tol: float,
    threads: int,
) -> list[tuple[FloatArray, float]]:
    system = _system(cell)
    jobs: list[Callable[[], tuple[FloatArray, float]]] = [
        (lambda load=load: system.solve(system.rhs(load=load), tol)) for load in loads
    ]
    if threads <= 1 or len(jobs) == 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: job(), jobs))


def axis_load(cell: ReferenceCell, axis: int, scale: float = 1.0) -> list[FloatArray]:
    """Face load ``scale * e_axis`` on the open faces of the cell."""

    grid = cell.grid
    return [
        np.where(grid.face_open[k], scale if k == axis else 0.0, 0.0) for k in range(grid.dim)
    ]


def gradient_load(cell: ReferenceCell, field: FloatArray, scale: float = 1.0) -> list[FloatArray]:
    """Face load ``scale * grad(field)`` on the open faces of the cell."""

    grid = cell.grid
    return [scale * grid.grad(field, k) for k in range(grid.dim)]


def solve_cell_poisson(
    cell: ReferenceCell,
    source: FloatArray | None = None,
    flux: npt.ArrayLike | None = None,
    tol: float = 1e-10,
) -> FloatArray:
    """Solve ``-laplace(u) = source`` on the pore cells with interface flux data.

    Args:
        cell: Reference cell.
        source: Volumetric source on the cell grid (ignored on solid cells).
        flux: Outward normal derivative on each interface face, ordered as
            :attr:`ReferenceCell.interface`, or a scalar for all faces.
        tol: Relative residual tolerance of the conjugate gradient solve.

    Returns:
        Periodic zero-mean solution, zero on solid cells.

    Raises:
        SolvabilityError: If source and flux do not balance.
        ConvergenceError: If the iteration cap is reached.
    """

    system = _system(cell)
    source = np.where(cell.pore, source, 0.0) if source is not None else None
    field, _ = system.solve(system.rhs(source=source, flux=flux), tol)
    return field


def solve_corrector_v(cell: ReferenceCell, tol: float = 1e-10, threads: int = 1) -> CorrectorV:
    """Solve for the ``d`` correctors driven by the unit loads ``e_k``."""

    loads = [axis_load(cell, k) for k in range(cell.dimension)]
    results = _solve_all(cell, loads, tol, threads)
    logger.info("Solved %d first correctors on n=%d", cell.dimension, cell.resolution)
    return CorrectorV(
        fields=tuple(field for field, _ in results),
        residuals=tuple(residual for _, residual in results),
    )


def _check_transport(lam: float, mobility: float) -> None:
    if lam < 0.0:
        msg = f"interface width must be non-negative, got {lam}"
        raise ParameterError(msg)
    if mobility <= 0.0:
        msg = f"mobility must be positive, got {mobility}"
        raise ParameterError(msg)


def solve_corrector_w_units(
    cell: ReferenceCell,
    xi_v: CorrectorV,
    lam: float,
    mobility: float,
    tol: float = 1e-10,
    threads: int = 1,
) -> CorrectorWUnits:
    """Solve the ``2 d`` unit problems of the affine split of ``xi_w``.

    ``chi_a^k`` carries the load ``(1 + lam^2 m) e_k`` and ``chi_b^k`` the load
    ``-lam^2 m grad(xi_v^k)``.
    """

    _check_transport(lam, mobility)
    coupling = lam**2 * mobility
    d = cell.dimension
    loads = [axis_load(cell, k, 1.0 + coupling) for k in range(d)]
    loads += [gradient_load(cell, xi_v.fields[k], -coupling) for k in range(d)]
    results = _solve_all(cell, loads, tol, threads)
    fields = [field for field, _ in results]
    return CorrectorWUnits(
        chi_a=tuple(fields[:d]),
        chi_b=tuple(fields[d:]),
        lam=lam,
        mobility=mobility,
        residuals=tuple(residual for _, residual in results),
    )


def solve_corrector_w(
    cell: ReferenceCell,
    xi_v: CorrectorV,
    lam: float,
    mobility: float,
    ratio: float,
    tol: float = 1e-10,
) -> Fields:
    """Solve for ``xi_w`` directly at a fixed ratio value."""

    _check_transport(lam, mobility)
    coupling = lam**2 * mobility
    loads = []
    for k in range(cell.dimension):
        unit = axis_load(cell, k, 1.0 + coupling)
        slope = gradient_load(cell, xi_v.fields[k], -coupling * ratio)
        loads.append([u + s for u, s in zip(unit, slope)])
    return tuple(field for field, _ in _solve_all(cell, loads, tol, 1))


def gradient_moments(cell: ReferenceCell, fields: Sequence[FloatArray]) -> FloatArray:
    """Return ``G[i, k] = h^d * sum over open axis-i faces of d_i fields[k]``."""

    grid = cell.grid
    d = cell.dimension
    moments = np.zeros((d, d))
    for i in range(d):
        for k, field in enumerate(fields):
            # Face N duplicates the wrap face 0.
            faces = _along(grid.grad(field, i), i, slice(None, -1))
            moments[i, k] = grid.cell_volume * float(np.sum(faces))
    return moments


def correction_tensor(
    cell: ReferenceCell, fields: Sequence[FloatArray], scale: float = 1.0
) -> FloatArray:
    """Return ``scale * (theta1 I - G(fields))``."""

    return scale * (cell.porosity * np.eye(cell.dimension) - gradient_moments(cell, fields))


def effective_D(cell: ReferenceCell, xi_v: CorrectorV) -> FloatArray:
    return correction_tensor(cell, xi_v.fields)


def effective_Mv(
    cell: ReferenceCell, xi_v: CorrectorV, mobility: float, form: MvForm = "appendix"
) -> FloatArray:
    """Assemble ``M_v``.

    ``"appendix"`` keeps only the gradient term ``m G(xi_v)``; ``"theorem"``
    adds the porosity term, giving ``m (theta1 I - G(xi_v))``.
    """

    if form == "theorem":
        return correction_tensor(cell, xi_v.fields, mobility)
    return mobility * gradient_moments(cell, xi_v.fields)


def effective_Mw(
    cell: ReferenceCell, units: CorrectorWUnits, mobility: float
) -> tuple[FloatArray, FloatArray]:
    """Return ``(M_w_a, M_w_b)`` with ``M_w = M_w_a + r M_w_b``."""

    mw_a = correction_tensor(cell, units.chi_a, mobility)
    mw_b = -mobility * gradient_moments(cell, units.chi_b)
    return mw_a, mw_b


def dirichlet_energy(
    cell: ReferenceCell, field: FloatArray, load: Sequence[FloatArray]
) -> float:
    """Discrete functional ``1/2 |grad u|^2 - V . grad u`` summed over open faces.

    The corrector driven by ``load`` is its unique zero-mean minimiser.
    """

    grid = cell.grid
    total = 0.0
    for k in range(grid.dim):
        gradient = _along(grid.grad(field, k), k, slice(None, -1))
        weight = _along(np.where(grid.face_open[k], load[k], 0.0), k, slice(None, -1))
        total += float(np.sum(0.5 * gradient**2 - weight * gradient))
    return grid.cell_volume * total


def assemble_tensors(
    cell: ReferenceCell,
    lam: float,
    mobility: float,
    tol: float = 1e-10,
    threads: int = 1,
    mv_form: MvForm = "appendix",
) -> CellSolution:
    """Run every cell problem of ``cell`` and assemble the effective tensors."""

    xi_v = solve_corrector_v(cell, tol, threads)
    units = solve_corrector_w_units(cell, xi_v, lam, mobility, tol, threads)
    mw_a, mw_b = effective_Mw(cell, units, mobility)
    tensors = EffectiveTensors(
        porosity=cell.porosity,
        diffusion=effective_D(cell, xi_v),
        mv=effective_Mv(cell, xi_v, mobility, mv_form),
        mw_a=mw_a,
        mw_b=mw_b,
        mobility=mobility,
        lam=lam,
        mv_form=mv_form,
    )
    logger.info(
        "Assembled tensors: theta1=%.6f D diag=%s", tensors.porosity, np.diag(tensors.diffusion)
    )
    return CellSolution(tensors=tensors, corrector_v=xi_v, corrector_w=units)
