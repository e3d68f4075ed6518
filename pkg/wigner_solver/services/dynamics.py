"""
Time evolution of the coefficient field a_k(t, x_j).

Streaming runs on the characteristic variables b = T^T a, where every
component moves with one Gauss-Hermite node speed. Forcing rotates the
coefficient vector at each grid point. The two are composed as a
first-order product or as a Strang half-kick / stream / half-kick step.
"""

import logging
import math
from dataclasses import dataclass, field as dataclass_field
from typing import Callable, Iterable, Optional

import numpy as np

from wigner_solver.errors import CFLViolationError, ConfigError, DimensionError, NumericalAbortError
from wigner_solver.models.schemas import BasisSpec, ForcingMethod, GridConfig, PolynomialPotential, Splitting, StreamScheme
from wigner_solver.services.basis import basis_integrals
from wigner_solver.services.operators import (
    AdvectionOperator,
    ForcingOperator,
    advection_operator,
    build_forcing_operator,
)

logger = logging.getLogger(__name__)

COURANT_SLACK = 1e-12

Observer = Callable[[float, "CoefficientField"], None]


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid x_j = x_min + j*dx, j = 0..nx-1."""
    x_min: float
    x_max: float
    nx: int

    def __post_init__(self):
        if self.nx < 4:
            raise ConfigError("grid needs at least 4 points", key="grid.nx")
        if not self.x_max > self.x_min:
            raise ConfigError("x_max must be larger than x_min", key="grid.x_max")

    @classmethod
    def from_config(cls, config: GridConfig) -> "GridSpec":
        return cls(x_min=config.x_min, x_max=config.x_max, nx=config.resolved_nx)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def nodes(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.nx)


@dataclass(frozen=True)
class CoefficientField:
    """a_k(x_j) as an N x nx real array on a periodic grid."""
    data: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[1] != self.grid.nx:
            raise DimensionError(f"field of shape {data.shape} does not fit a grid of {self.grid.nx} points")
        if not np.all(np.isfinite(data)):
            raise NumericalAbortError("coefficient field contains NaN or Inf")
        object.__setattr__(self, "data", data)

    @property
    def n_basis(self) -> int:
        return self.data.shape[0]

    def frozen_copy(self) -> "CoefficientField":
        data = self.data.copy()
        data.setflags(write=False)
        return CoefficientField(data=data, grid=self.grid)


@dataclass(frozen=True)
class StepPlan:
    """Time step, schemes and the resulting Courant number |lambda|max dt / dx."""
    dt: float
    scheme: StreamScheme
    splitting: Splitting
    courant: float
    n_steps: int = 0

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ConfigError("dt must be positive", key="time.dt")
        if self.courant > 1.0 + COURANT_SLACK:
            raise CFLViolationError(self.courant)

    @classmethod
    def from_speed(
        cls,
        max_speed: float,
        dx: float,
        t_end: float,
        scheme: StreamScheme = StreamScheme.LAX_WENDROFF,
        splitting: Splitting = Splitting.STRANG,
        courant: Optional[float] = None,
        dt: Optional[float] = None,
    ) -> "StepPlan":
        """
        Pick dt so that t_end is an integer number of steps.

        With a target Courant number the step count is
        ceil(t_end |lambda|max / (courant dx)); an explicit dt is rounded
        down to the nearest divisor of t_end.
        """
        if t_end < 0.0:
            raise ConfigError("t_end must be non-negative", key="time.t_end")
        if dt is None:
            target = 0.9 if courant is None else courant
            if max_speed == 0.0:
                dt = dx
            else:
                dt = target * dx / max_speed
        n_steps = 0 if t_end == 0.0 else math.ceil(t_end / dt - 1e-9)
        if n_steps:
            dt = t_end / n_steps
        return cls(
            dt=dt,
            scheme=StreamScheme(scheme),
            splitting=Splitting(splitting),
            courant=max_speed * dt / dx,
            n_steps=n_steps,
        )


@dataclass(frozen=True)
class OperatorSet:
    """Everything a run needs: grid, basis, advection and forcing operators."""
    spec: BasisSpec
    potential: PolynomialPotential
    grid: GridSpec
    advection: AdvectionOperator
    forcing: ForcingOperator
    integrals: np.ndarray
    forcing_char: Optional[ForcingOperator] = dataclass_field(repr=False, default=None)

    def __post_init__(self):
        if self.forcing.n_points != self.grid.nx:
            raise DimensionError("forcing operator does not match the grid")
        if self.forcing_char is None:
            object.__setattr__(self, "forcing_char", self.forcing.in_frame(self.advection.eigvecs))


def build_operator_set(
    spec: BasisSpec,
    potential: PolynomialPotential,
    grid: GridSpec,
    dt: float,
    method: ForcingMethod = ForcingMethod.CAYLEY,
) -> OperatorSet:
    advection = advection_operator(spec.n_basis)
    forcing = build_forcing_operator(spec, potential, grid.nodes, dt, method)
    return OperatorSet(
        spec=spec,
        potential=potential,
        grid=grid,
        advection=advection,
        forcing=forcing,
        integrals=basis_integrals(spec),
    )


# ---------------------------------------------------------------------------
# Elementary steps
# ---------------------------------------------------------------------------

def _check_frame(field: CoefficientField, t: np.ndarray) -> None:
    if t.shape != (field.n_basis, field.n_basis):
        raise DimensionError(f"transform of shape {t.shape} does not match N={field.n_basis}")


def to_characteristic(field: CoefficientField, t: np.ndarray) -> CoefficientField:
    """b(x_j) = T^T a(x_j)."""
    _check_frame(field, t)
    return CoefficientField(data=t.T @ field.data, grid=field.grid)


def from_characteristic(field: CoefficientField, t: np.ndarray) -> CoefficientField:
    """a(x_j) = T b(x_j)."""
    _check_frame(field, t)
    return CoefficientField(data=t @ field.data, grid=field.grid)


def _stream(data: np.ndarray, nu: np.ndarray, scheme: StreamScheme) -> np.ndarray:
    right = np.roll(data, -1, axis=1)
    left = np.roll(data, 1, axis=1)
    if scheme == StreamScheme.UPWIND:
        forward = nu[:, None] > 0.0
        flux = np.where(forward, data - left, right - data)
        return data - nu[:, None] * flux
    nu = nu[:, None]
    return data - 0.5 * nu * (right - left) + 0.5 * nu * nu * (right - 2.0 * data + left)


def _force(data: np.ndarray, rotations: np.ndarray) -> np.ndarray:
    return np.einsum("jkl,lj->kj", rotations, data)


def stream_step(field: CoefficientField, eigvals: np.ndarray, plan: StepPlan) -> CoefficientField:
    """Advance each characteristic component by dt with speed eigvals[i]."""
    eigvals = np.asarray(eigvals, dtype=float)
    if eigvals.shape != (field.n_basis,):
        raise DimensionError("one speed per characteristic component is required")
    courant = float(np.max(np.abs(eigvals))) * plan.dt / field.grid.dx
    if courant > 1.0 + COURANT_SLACK:
        raise CFLViolationError(courant)
    nu = eigvals * plan.dt / field.grid.dx
    return CoefficientField(data=_stream(field.data, nu, plan.scheme), grid=field.grid)


def force_step(field: CoefficientField, forcing: ForcingOperator, half: bool = False) -> CoefficientField:
    """a(x_j) <- R(x_j) a(x_j), with the dt/2 propagator when half is set."""
    if forcing.n_points != field.grid.nx or forcing.m_matrices.shape[-1] != field.n_basis:
        raise DimensionError("forcing operator does not match the field")
    rotations = forcing.half_rotations if half else forcing.rotations
    return CoefficientField(data=_force(field.data, rotations), grid=field.grid)


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------

def evolve(
    initial: CoefficientField,
    ops: OperatorSet,
    plan: StepPlan,
    t_end: float,
    observers: Iterable[Observer] = (),
    every: int = 1,
    nan_check_every: int = 1,
    extra_steps: Iterable[int] = (),
) -> CoefficientField:
    """
    Integrate from t = 0 to t_end with plan.dt.

    Observers get (t, physical field) at t = 0, every `every` steps and at
    t_end, plus at every step listed in extra_steps. Non-finite values
    abort with the offending step index.
    """
    if t_end < 0.0:
        raise ConfigError("t_end must be non-negative", key="time.t_end")
    if initial.grid != ops.grid or initial.n_basis != ops.spec.n_basis:
        raise DimensionError("initial field does not match the operator set")
    if every < 1:
        raise ConfigError("observer cadence must be at least one step", key="time.observe_interval")
    n_steps = int(round(t_end / plan.dt))
    if not math.isclose(n_steps * plan.dt, t_end, rel_tol=1e-9, abs_tol=1e-12):
        raise ConfigError(f"dt={plan.dt:.6g} does not divide t_end={t_end:.6g}", key="time.dt")
    courant = ops.advection.max_speed * plan.dt / ops.grid.dx
    if courant > 1.0 + COURANT_SLACK:
        raise CFLViolationError(courant)
    if not math.isclose(ops.forcing.dt, plan.dt, rel_tol=1e-12):
        raise ConfigError(
            f"forcing propagators were built for dt={ops.forcing.dt:.6g}, the plan steps with dt={plan.dt:.6g}",
            key="time.dt",
        )
    if not ops.forcing.is_unitary:
        logger.warning("forcing method '%s' is not norm-preserving", ops.forcing.method.value)
    observers = list(observers)
    extra_steps = set(extra_steps)
    t = ops.advection.eigvecs
    nu = ops.advection.eigvals * plan.dt / ops.grid.dx
    forcing = ops.forcing_char
    strang = plan.splitting == Splitting.STRANG

    def notify(step: int, b: np.ndarray) -> None:
        if not observers:
            return
        snapshot = CoefficientField(data=t @ b, grid=ops.grid).frozen_copy()
        for observer in observers:
            observer(step * plan.dt, snapshot)

    logger.info(
        "evolving %d steps: dt=%.6g courant=%.4f scheme=%s splitting=%s",
        n_steps, plan.dt, courant, plan.scheme.value, plan.splitting.value,
    )
    b = t.T @ initial.data
    notify(0, b)
    for step in range(1, n_steps + 1):
        if strang:
            b = _force(b, forcing.half_rotations)
            b = _stream(b, nu, plan.scheme)
            b = _force(b, forcing.half_rotations)
        else:
            b = _force(b, forcing.rotations)
            b = _stream(b, nu, plan.scheme)
        if (step % nan_check_every == 0 or step == n_steps) and not np.all(np.isfinite(b)):
            logger.error("non-finite coefficients at step %d (t=%.6g)", step, step * plan.dt)
            raise NumericalAbortError("coefficient field became non-finite", step=step)
        if step % every == 0 or step == n_steps or step in extra_steps:
            notify(step, b)
    return CoefficientField(data=t @ b, grid=ops.grid)
