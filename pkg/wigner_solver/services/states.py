"""
Wave states in the harmonic-oscillator eigenbasis.

Eigenstates of V = c x^2 + K x^4 come from diagonalizing the Hamiltonian
in that basis; a superposition is evolved with the phases exp(-i E t).
The module also turns a state into the initial coefficient field of the
solver and provides the two exact Wigner oracles: the Laguerre closed
form for harmonic eigenstates and a quadrature Wigner transform for any
state.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from numpy.typing import ArrayLike
from scipy import linalg, special

from wigner_solver.errors import ConfigError, ConvergenceError, NumericalError
from wigner_solver.models.schemas import BasisFamily, BasisSpec, EigenSource, RunConfig
from wigner_solver.services import potential as pot
from wigner_solver.services.basis import gauss_hermite, hermite_function, hermite_series, normalized_hermite
from wigner_solver.services.dynamics import CoefficientField, GridSpec
from wigner_solver.services.operators import advection_matrix

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-12
RESIDUAL_TOLERANCE = 1e-10
IMAG_TOLERANCE_COEFFS = 1e-10
IMAG_TOLERANCE_WIGNER = 1e-9
TRANSFORM_EXTRA_NODES = 100


@dataclass(frozen=True)
class WaveState:
    """
    Psi = sum_k c_k Psi_k over harmonic eigenfunctions.

    energies/modes describe the time evolution: the columns of modes are
    eigenvectors (harmonic coordinates) with the given energies. Without
    modes the harmonic eigenfunctions themselves are the eigenvectors.
    """
    harmonic_coeffs: np.ndarray
    energies: Optional[np.ndarray] = None
    modes: Optional[np.ndarray] = None

    def __post_init__(self):
        coeffs = np.asarray(self.harmonic_coeffs, dtype=complex)
        object.__setattr__(self, "harmonic_coeffs", coeffs)
        norm = float(np.sum(np.abs(coeffs) ** 2))
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise ConfigError(f"state norm {norm:.15g} differs from 1", key="initial_state.components")
        if self.modes is not None:
            if self.energies is None or self.modes.shape != (coeffs.size, len(self.energies)):
                raise ConfigError("modes need one energy per column and one row per coefficient", key="modes")
        elif self.energies is not None and len(self.energies) != coeffs.size:
            raise ConfigError("one energy per harmonic coefficient is required", key="energies")

    @property
    def n_basis(self) -> int:
        return self.harmonic_coeffs.size

    def coeffs_at(self, t: float) -> np.ndarray:
        """c(t) in harmonic coordinates."""
        if t == 0.0:
            return self.harmonic_coeffs
        if self.energies is None:
            raise ConfigError("state has no energies; only t = 0 is available", key="energies")
        phases = np.exp(-1j * np.asarray(self.energies) * t)
        if self.modes is None:
            return phases * self.harmonic_coeffs
        return self.modes @ (phases * (self.modes.T @ self.harmonic_coeffs))

    def evaluate(self, x: ArrayLike, t: float = 0.0) -> np.ndarray:
        """Psi(t, x)."""
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * x * x) * hermite_series(self.coeffs_at(t), x)


@dataclass(frozen=True)
class EigenResult:
    """Lowest eigenpairs; vectors hold one harmonic-coordinate eigenvector per column."""
    energies: np.ndarray
    vectors: np.ndarray
    n_basis_used: int
    residuals: Optional[np.ndarray] = None

    @property
    def states(self) -> List[WaveState]:
        return [
            WaveState(harmonic_coeffs=self.vectors[:, i], energies=self.energies, modes=self.vectors)
            for i in range(len(self.energies))
        ]


def harmonic_eigenfunction(n: int, x: ArrayLike) -> np.ndarray:
    """Psi_n(x) of the dimensionless oscillator; the same functions as phi_n."""
    return hermite_function(n, x)


def harmonic_energy(n: int) -> float:
    """E_n = n + 1/2."""
    if n < 0:
        raise ConfigError("eigen index must be non-negative", key="n")
    return n + 0.5


def hamiltonian_matrix(c: float, K: float, n_b: int) -> np.ndarray:
    """
    H = diag(n + 1/2) + (c - 1/2) X^2 + K X^4 in the harmonic basis.

    X^2 and X^4 are formed at size n_b + 4 and then truncated, so every
    retained entry is the exact matrix element and H stays a variational
    projection.
    """
    if n_b < 2:
        raise ConfigError("eigen basis needs at least 2 states", key="n_eigen_basis")
    x = advection_matrix(n_b + 4)
    x2 = x @ x
    h = np.diag(np.arange(n_b) + 0.5)
    h = h + (c - 0.5) * x2[:n_b, :n_b]
    if K != 0.0:
        h = h + K * (x2 @ x2)[:n_b, :n_b]
    return 0.5 * (h + h.T)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    rows = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[rows, np.arange(vectors.shape[1])])
    signs[signs == 0.0] = 1.0
    return vectors * signs


def solve_eigenstates(c: float, K: float, n_b: int, count: int = 2) -> EigenResult:
    """Lowest `count` eigenpairs of hamiltonian_matrix(c, K, n_b), energies ascending."""
    if not 1 <= count <= n_b:
        raise ConfigError(f"count must lie in 1..{n_b}", key="count")
    h = hamiltonian_matrix(c, K, n_b)
    try:
        energies, vectors = linalg.eigh(h, subset_by_index=[0, count - 1])
    except linalg.LinAlgError as exc:
        raise ConvergenceError(f"Hamiltonian eigen-solve failed: {exc}") from exc
    vectors = _fix_signs(vectors)
    residuals = np.linalg.norm(h @ vectors - vectors * energies, axis=0)
    scale = max(1.0, float(np.max(np.abs(h))))
    worst = int(np.argmax(residuals))
    if residuals[worst] > RESIDUAL_TOLERANCE * scale:
        raise ConvergenceError(f"eigenpair residual {residuals[worst]:.3e} too large", index=worst)
    logger.debug("eigenstates c=%g K=%g N_b=%d: E=%s", c, K, n_b, energies)
    return EigenResult(energies=energies, vectors=vectors, n_basis_used=n_b, residuals=residuals)


def eigen_convergence(c: float, K: float, n_b: int, count: int = 2) -> np.ndarray:
    """|c_{N_b+2} - c_{N_b}| per eigenstate, the shorter vector padded with zeros."""
    small = solve_eigenstates(c, K, n_b, count)
    large = solve_eigenstates(c, K, n_b + 2, count)
    padded = np.zeros_like(large.vectors)
    padded[:n_b] = small.vectors
    return np.linalg.norm(large.vectors - padded, axis=0)


# ---------------------------------------------------------------------------
# States from configuration
# ---------------------------------------------------------------------------

def harmonic_superposition(components, n_b: int) -> WaveState:
    """Superposition of harmonic eigenstates with energies n + 1/2."""
    coeffs = np.zeros(n_b, dtype=complex)
    for index, weight in components:
        if index >= n_b:
            raise ConfigError(f"eigen index {index} exceeds the eigen basis", key="initial_state.components")
        coeffs[index] = weight
    return WaveState(harmonic_coeffs=coeffs, energies=np.arange(n_b) + 0.5)


def eigen_superposition(components, result: EigenResult) -> WaveState:
    """Superposition of numerical eigenstates, kept with their energies for evolution."""
    coeffs = np.zeros(result.n_basis_used, dtype=complex)
    for index, weight in components:
        if index >= len(result.energies):
            raise ConfigError(f"eigen index {index} was not solved for", key="initial_state.components")
        coeffs += weight * result.vectors[:, index]
    coeffs /= np.linalg.norm(coeffs)
    return WaveState(harmonic_coeffs=coeffs, energies=result.energies, modes=result.vectors)


def state_from_config(config: RunConfig) -> WaveState:
    components = config.initial_state.components
    if config.initial_state.source == EigenSource.HARMONIC:
        return harmonic_superposition(components, config.n_eigen_basis)
    c, K = pot.quadratic_quartic(pot.from_config(config.potential))
    count = max(i for i, _ in components) + 1
    result = solve_eigenstates(c, K, config.n_eigen_basis, count)
    logger.info("eigen energies (N_b=%d): %s", config.n_eigen_basis, np.array2string(result.energies, precision=6))
    return eigen_superposition(components, result)


# ---------------------------------------------------------------------------
# Wigner-space views of a state
# ---------------------------------------------------------------------------

def initial_coefficients(state: WaveState, spec: BasisSpec, grid: GridSpec, t: float = 0.0) -> CoefficientField:
    """
    a_k(x_j) = Re{ eps i^k / sqrt(2 pi) int Psi*(x + eps y/2) Psi(x - eps y/2) phi_k(y) dy }.

    With Psi = exp(-z^2/2) P(z) the Gaussian factors combine to
    exp(-x^2) exp(-alpha y^2), alpha = 1/2 + eps^2/4, and the remaining
    integrand is a polynomial, integrated exactly on 2 N_b + N + 8 nodes.
    """
    if spec.family != BasisFamily.SYMMETRIC_HERMITE:
        raise ConfigError("initial coefficients need the symmetric Hermite basis", key="family")
    eps = spec.epsilon
    alpha = 0.5 + 0.25 * eps * eps
    quad = gauss_hermite(2 * state.n_basis + spec.n_basis + 8)
    y = quad.nodes / math.sqrt(alpha)
    x = grid.nodes
    coeffs = state.coeffs_at(t)
    shift = 0.5 * eps * y
    plus = hermite_series(coeffs, x[:, None] + shift[None, :])
    minus = hermite_series(coeffs, x[:, None] - shift[None, :])
    kernel = np.exp(-x * x)[:, None] * np.conj(plus) * minus * quad.weights
    raw = normalized_hermite(spec.n_basis, y) @ kernel.T
    raw *= (1j ** np.arange(spec.n_basis))[:, None] * (eps / math.sqrt(2.0 * math.pi * alpha))
    scale = max(1.0, float(np.max(np.abs(raw.real))))
    residual = float(np.max(np.abs(raw.imag)))
    if residual > IMAG_TOLERANCE_COEFFS * scale:
        raise NumericalError(f"initial coefficients have imaginary residual {residual:.3e}")
    return CoefficientField(data=raw.real, grid=grid)


def exact_wigner_eigenstate(n: int, x: ArrayLike, v: ArrayLike) -> np.ndarray:
    """W_n(x, v) = (-1)^n / pi * L_n(2(x^2 + v^2)) exp(-x^2 - v^2), eps = 1."""
    if n < 0:
        raise ConfigError("eigen index must be non-negative", key="n")
    r2 = np.asarray(x, dtype=float) ** 2 + np.asarray(v, dtype=float) ** 2
    return (-1.0) ** n / math.pi * special.eval_laguerre(n, 2.0 * r2) * np.exp(-r2)


def _transform_quadrature(state: WaveState):
    return gauss_hermite(2 * state.n_basis + TRANSFORM_EXTRA_NODES)


def _check_real(values: np.ndarray) -> np.ndarray:
    residual = float(np.max(np.abs(values.imag))) if values.size else 0.0
    if residual > IMAG_TOLERANCE_WIGNER:
        raise NumericalError(f"Wigner transform has imaginary residual {residual:.3e}")
    return values.real


def wigner_transform_grid(
    state: WaveState, t: float, x: ArrayLike, v: ArrayLike, epsilon: float = 1.0
) -> np.ndarray:
    """
    W(t, x_i, v_j) = 1/(2 pi) int Psi*(t, x + y/2) Psi(t, x - y/2) exp(i v y / eps) dy
    on the tensor grid x by v, shape (len(x), len(v)).

    With y = 2u the Gaussian factors give exp(-x^2) exp(-u^2), leaving
    the plane wave and a polynomial under a Gauss-Hermite rule.
    """
    if epsilon <= 0.0:
        raise ConfigError("epsilon must be positive", key="epsilon")
    quad = _transform_quadrature(state)
    u = quad.nodes
    coeffs = state.coeffs_at(t)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    waves = np.exp(2j * np.outer(u, v) / epsilon)
    out = np.empty((x.size, v.size), dtype=complex)
    for i, xi in enumerate(x):
        kernel = np.conj(hermite_series(coeffs, xi + u)) * hermite_series(coeffs, xi - u) * quad.weights
        out[i] = (kernel @ waves) * math.exp(-xi * xi) / math.pi
    return _check_real(out)


def numerical_wigner_transform(state: WaveState, t: float, x: float, v: float, epsilon: float = 1.0) -> float:
    """Wigner transform of the state at a single phase-space point."""
    return float(wigner_transform_grid(state, t, [x], [v], epsilon)[0, 0])


def wave_density(state: WaveState, x: ArrayLike, t: float = 0.0) -> np.ndarray:
    """|Psi(t, x)|^2."""
    return np.abs(state.evaluate(x, t)) ** 2
