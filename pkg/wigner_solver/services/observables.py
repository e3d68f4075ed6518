"""Reconstruction of W on grids, density, mass, the error metric and phase-space moments."""

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from numpy.typing import ArrayLike

from wigner_solver.errors import DimensionError
from wigner_solver.models.schemas import BasisSpec, MomentReport
from wigner_solver.services.basis import basis_integrals, hermite_functions
from wigner_solver.services.dynamics import CoefficientField, OperatorSet
from wigner_solver.services.operators import advection_matrix

VARIANCE_FLOOR = 1e-14


@dataclass(frozen=True)
class WignerSnapshot:
    """W(t, x_i, v_j) on a tensor grid."""
    time: float
    x_grid: np.ndarray
    v_grid: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        for name in ("x_grid", "v_grid"):
            values = np.asarray(getattr(self, name), dtype=float)
            if values.ndim != 1 or np.any(np.diff(values) <= 0.0):
                raise DimensionError(f"{name} must be a strictly increasing 1-d array")
            object.__setattr__(self, name, values)
        if self.w.shape != (self.x_grid.size, self.v_grid.size):
            raise DimensionError(f"W of shape {self.w.shape} does not match the grids")


def reconstruct(field: CoefficientField, v_grid: ArrayLike, time: float = 0.0) -> WignerSnapshot:
    """w[i][j] = sum_k a_k(x_i) phi_k(v_j)."""
    v_grid = np.asarray(v_grid, dtype=float)
    w = field.data.T @ hermite_functions(field.n_basis, v_grid)
    return WignerSnapshot(time=time, x_grid=field.grid.nodes, v_grid=v_grid, w=w)


def density(field: CoefficientField, integrals: np.ndarray) -> np.ndarray:
    """rho_W(x_j) = sum_k a_k(x_j) w_k."""
    if integrals.shape != (field.n_basis,):
        raise DimensionError("one basis integral per coefficient is required")
    return integrals @ field.data


def mass(field: CoefficientField, integrals: np.ndarray) -> float:
    """Rectangle-rule integral of rho_W over the periodic grid."""
    return float(np.sum(density(field, integrals)) * field.grid.dx)


ExactW = Union[np.ndarray, WignerSnapshot, Callable[[np.ndarray, np.ndarray], np.ndarray]]


def _exact_values(snapshot: WignerSnapshot, exact: ExactW) -> np.ndarray:
    if isinstance(exact, WignerSnapshot):
        if not (np.array_equal(exact.x_grid, snapshot.x_grid) and np.array_equal(exact.v_grid, snapshot.v_grid)):
            raise DimensionError("snapshots live on different grids")
        return exact.w
    if callable(exact):
        return np.asarray(exact(snapshot.x_grid, snapshot.v_grid), dtype=float)
    values = np.asarray(exact, dtype=float)
    if values.shape != snapshot.w.shape:
        raise DimensionError(f"exact W of shape {values.shape} does not match {snapshot.w.shape}")
    return values


def error_field(snapshot: WignerSnapshot, exact: ExactW) -> np.ndarray:
    """Pointwise difference W - W_exact."""
    return snapshot.w - _exact_values(snapshot, exact)


def error_metric(snapshot: WignerSnapshot, exact: ExactW) -> float:
    """RMS difference sqrt(1/(N_x N_v) sum |dW|^2)."""
    diff = error_field(snapshot, exact)
    return float(np.sqrt(np.mean(diff * diff)))


def velocity_integrals(spec: BasisSpec, order: int) -> np.ndarray:
    """
    int v^order phi_k dv for k < N, from (A^order w) on a basis padded
    by `order`, where A is the multiplication-by-v matrix.
    """
    padded = spec.model_copy(update={"n_basis": spec.n_basis + order})
    values = basis_integrals(padded)
    if order:
        values = np.linalg.matrix_power(advection_matrix(padded.n_basis), order) @ values
    return values[: spec.n_basis]


def moments(field: CoefficientField, ops: OperatorSet, time: float = 0.0) -> MomentReport:
    """
    Means, variances and covariance of x and v under W, normalized by the
    mass. x integrals use the rectangle rule; v integrals are exact.
    """
    dx = field.grid.dx
    x = field.grid.nodes
    rho = ops.integrals @ field.data
    first = velocity_integrals(ops.spec, 1) @ field.data
    second = velocity_integrals(ops.spec, 2) @ field.data
    total = float(np.sum(rho) * dx)
    mean_x = float(np.sum(x * rho) * dx / total)
    mean_v = float(np.sum(first) * dx / total)
    var_x = max(float(np.sum((x - mean_x) ** 2 * rho) * dx / total), 0.0)
    var_v = max(float(np.sum(second) * dx / total) - mean_v * mean_v, 0.0)
    cov = float(np.sum(x * first) * dx / total) - mean_x * mean_v
    product = var_x * var_v
    degenerate = product < VARIANCE_FLOOR
    return MomentReport(
        time=time,
        mass=total,
        mean_x=mean_x,
        mean_v=mean_v,
        var_x=var_x,
        var_v=var_v,
        cov_xv=cov,
        uncertainty=math.sqrt(product),
        normalized_cov=0.0 if degenerate else cov / math.sqrt(product),
        degenerate=degenerate,
    )
