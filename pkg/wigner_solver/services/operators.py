"""
Matrix operators of the reaction-advection system

    d/dt a + A d/dx a + M_V(x) a = 0

for the symmetric Hermite basis: the advection matrix A and its
eigendecomposition, the moment matrices M_n, the forcing matrix M_V(x),
one-step forcing propagators and their amplification factors, and the
lower-triangular forcing of the asymmetric Hermite basis.
"""

import logging
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike
from scipy import linalg

from wigner_solver.errors import ConfigError, ConvergenceError, DimensionError, NumericalError
from wigner_solver.models.schemas import BasisFamily, BasisSpec, ForcingMethod, PolynomialPotential
from wigner_solver.services import potential as pot
from wigner_solver.services.basis import gauss_hermite, normalized_hermite

logger = logging.getLogger(__name__)

SKEW_TOLERANCE = 1e-12
DENSE_NORM_LIMIT = 64


@dataclass(frozen=True)
class AdvectionOperator:
    """A = T diag(D) T^T with ascending D and sign-fixed columns of T."""
    a_matrix: np.ndarray
    eigvecs: np.ndarray
    eigvals: np.ndarray

    @property
    def n_basis(self) -> int:
        return self.a_matrix.shape[0]

    @property
    def max_speed(self) -> float:
        """|lambda|max, the largest characteristic speed."""
        return float(np.max(np.abs(self.eigvals)))


@dataclass(frozen=True)
class ForcingOperator:
    """
    Per-grid-point forcing matrices and their one-step propagators.

    rotations[j] advances a(x_j) by dt, half_rotations[j] by dt/2. For the
    cayley and exact methods both are orthogonal.
    """
    m_matrices: np.ndarray
    rotations: np.ndarray
    half_rotations: np.ndarray
    method: ForcingMethod
    dt: float

    @property
    def n_points(self) -> int:
        return self.m_matrices.shape[0]

    @property
    def is_unitary(self) -> bool:
        return self.method.is_unitary

    def in_frame(self, t: np.ndarray) -> "ForcingOperator":
        """The same operator acting on b = T^T a."""
        return replace(
            self,
            m_matrices=t.T @ self.m_matrices @ t,
            rotations=t.T @ self.rotations @ t,
            half_rotations=t.T @ self.half_rotations @ t,
        )


# ---------------------------------------------------------------------------
# Advection
# ---------------------------------------------------------------------------

def advection_matrix(n: int) -> np.ndarray:
    """A[k][l] = int phi_k v phi_l dv; A[k][k+1] = sqrt((k+1)/2), zero elsewhere off the band."""
    if n < 1:
        raise ConfigError("basis size must be positive", key="n_basis")
    off = np.sqrt(np.arange(1, n) / 2.0)
    return np.diag(off, 1) + np.diag(off, -1)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so each one's largest-magnitude entry is positive."""
    rows = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[rows, np.arange(vectors.shape[1])])
    signs[signs == 0.0] = 1.0
    return vectors * signs


@lru_cache(maxsize=32)
def advection_operator(n: int) -> AdvectionOperator:
    """A with its eigendecomposition; eigenvalues equal the n Gauss-Hermite nodes."""
    a = advection_matrix(n)
    if n == 1:
        return AdvectionOperator(a_matrix=a, eigvecs=np.ones((1, 1)), eigvals=np.zeros(1))
    try:
        eigvals, eigvecs = linalg.eigh_tridiagonal(np.zeros(n), np.diag(a, 1))
    except linalg.LinAlgError as exc:
        raise ConvergenceError(f"advection eigen-solve failed: {exc}") from exc
    return AdvectionOperator(a_matrix=a, eigvecs=_fix_signs(eigvecs), eigvals=eigvals)


# ---------------------------------------------------------------------------
# Forcing matrices
# ---------------------------------------------------------------------------

def _parity_phase(n_basis: int) -> np.ndarray:
    """i^(k-l-1) for k-l odd (a real sign), zero for k-l even."""
    k = np.arange(n_basis)
    diff = k[:, None] - k[None, :]
    phase = np.zeros((n_basis, n_basis))
    odd = diff % 2 != 0
    phase[odd] = np.where(((diff[odd] - 1) // 2) % 2 == 0, 1.0, -1.0)
    return phase


@lru_cache(maxsize=128)
def _moment_matrix_cached(n: int, n_basis: int) -> np.ndarray:
    quad = gauss_hermite(n_basis + n + 1)
    rows = normalized_hermite(n_basis, quad.nodes)
    kernel = quad.weights * quad.nodes ** (2 * n + 1) / math.factorial(2 * n + 1)
    m = _parity_phase(n_basis) * ((rows * kernel) @ rows.T)
    m.setflags(write=False)
    return m


def moment_matrix(n: int, n_basis: int) -> np.ndarray:
    """
    (M_n)_{k,l} = i^(k-l-1) int eta^(2n+1)/(2n+1)! phi_k(eta) phi_l(eta) d eta.

    Real and skew-symmetric; entries vanish unless k-l is odd and
    |k-l| <= 2n+1.
    """
    if n < 0:
        raise ConfigError("moment index must be non-negative", key="n")
    if n_basis < 1:
        raise ConfigError("basis size must be positive", key="n_basis")
    return _moment_matrix_cached(int(n), int(n_basis)).copy()


def _require_symmetric(spec: BasisSpec, potential: PolynomialPotential) -> None:
    if not isinstance(potential, PolynomialPotential):
        raise ConfigError("only polynomial potentials are supported", key="potential")
    if spec.family != BasisFamily.SYMMETRIC_HERMITE:
        raise ConfigError("forcing matrices need the symmetric Hermite basis", key="family")


def pseudo_diff_matrices(spec: BasisSpec, potential: PolynomialPotential, x: ArrayLike) -> np.ndarray:
    """
    M_V(x) = B sum_n (eps/2)^(2n) M_n V^(2n+1)(x) for every x.

    Returns shape shape(x) + (N, N). The sum terminates at the degree of V.
    """
    _require_symmetric(spec, potential)
    x = np.asarray(x, dtype=float)
    n_basis = spec.n_basis
    derivs = pot.odd_derivatives(potential, x)
    out = np.zeros(x.shape + (n_basis, n_basis))
    for n, values in enumerate(derivs):
        scale = spec.b_strength * (0.5 * spec.epsilon) ** (2 * n)
        out += scale * values[..., None, None] * _moment_matrix_cached(n, n_basis)
    return out


def pseudo_diff_matrix(spec: BasisSpec, potential: PolynomialPotential, x: float) -> np.ndarray:
    """M_V at a single point x."""
    return pseudo_diff_matrices(spec, potential, float(x))


def pseudo_diff_matrix_quadrature(spec: BasisSpec, potential: PolynomialPotential, x: float) -> np.ndarray:
    """
    M_V(x) straight from the integral form

        (M_V)_{k,l} = (B/eps) i^(k-l-1) int dV(x, eta) phi_k(eta) phi_l(eta) d eta,

    independent of the Taylor/moment route.
    """
    _require_symmetric(spec, potential)
    n_basis = spec.n_basis
    degree = max(potential.degree, 0)
    quad = gauss_hermite(math.ceil((2 * n_basis + degree) / 2) + 1)
    rows = normalized_hermite(n_basis, quad.nodes)
    dv = pot.delta_v(potential, float(x), quad.nodes, spec.epsilon)
    integral = (rows * (quad.weights * dv)) @ rows.T
    return (spec.b_strength / spec.epsilon) * _parity_phase(n_basis) * integral


def skew_defect(m: np.ndarray) -> float:
    """max |M + M^T|."""
    return float(np.max(np.abs(m + np.swapaxes(m, -1, -2)))) if m.size else 0.0


def _check_skew(m: np.ndarray) -> None:
    if m.shape[-1] != m.shape[-2]:
        raise DimensionError(f"forcing matrix must be square, got {m.shape[-2:]}")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if skew_defect(m) > SKEW_TOLERANCE * scale:
        raise ConfigError("forcing matrix is not skew-symmetric", key="M")


# ---------------------------------------------------------------------------
# One-step propagators
# ---------------------------------------------------------------------------

def cayley_rotation(m: np.ndarray, dt: float) -> np.ndarray:
    """
    R = (I + dt/2 M)^-1 (I - dt/2 M), orthogonal for skew-symmetric M.

    Accepts a single matrix or a stack (..., N, N).
    """
    m = np.asarray(m, dtype=float)
    _check_skew(m)
    eye = np.eye(m.shape[-1])
    half = 0.5 * dt * m
    try:
        return np.linalg.solve(eye + half, np.broadcast_to(eye - half, m.shape))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Cayley solve failed for a skew-symmetric matrix: {exc}") from exc


def exact_rotation(m: np.ndarray, dt: float) -> np.ndarray:
    """
    exp(-dt M) for skew-symmetric M via the eigendecomposition of the
    Hermitian matrix iM.
    """
    m = np.asarray(m, dtype=float)
    _check_skew(m)
    lam, u = np.linalg.eigh(1j * m)
    phases = np.exp(1j * dt * lam)
    expm = (u * phases[..., None, :]) @ np.conj(np.swapaxes(u, -1, -2))
    return expm.real


def euler_propagator(m: np.ndarray, dt: float) -> np.ndarray:
    """I - dt M."""
    m = np.asarray(m, dtype=float)
    return np.eye(m.shape[-1]) - dt * m


def rk4_propagator(m: np.ndarray, dt: float) -> np.ndarray:
    """I + sum_{j=1..4} (-dt M)^j / j!."""
    m = np.asarray(m, dtype=float)
    step = -dt * m
    term = np.broadcast_to(np.eye(m.shape[-1]), m.shape).copy()
    total = term.copy()
    for j in range(1, 5):
        term = term @ step / j
        total += term
    return total


_PROPAGATORS = {
    ForcingMethod.CAYLEY: cayley_rotation,
    ForcingMethod.EXACT: exact_rotation,
    ForcingMethod.EULER: euler_propagator,
    ForcingMethod.RK4: rk4_propagator,
}


def forcing_propagator(method: ForcingMethod, m: np.ndarray, dt: float) -> np.ndarray:
    """One-step propagator of da/dt = -M a for the chosen method."""
    return _PROPAGATORS[ForcingMethod(method)](m, dt)


def spectral_norm(matrix: np.ndarray, seed: int = 0, tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """
    ||P||_2. Dense SVD up to N = 64, power iteration on P^T P above.
    """
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    if n <= DENSE_NORM_LIMIT:
        return float(np.linalg.norm(matrix, 2))
    gram = matrix.T @ matrix
    rng = np.random.default_rng(seed)
    vec = rng.standard_normal(n)
    vec /= np.linalg.norm(vec)
    estimate = 0.0
    for _ in range(max_iter):
        nxt = gram @ vec
        value = float(np.linalg.norm(nxt))
        if value == 0.0:
            return 0.0
        vec = nxt / value
        if abs(value - estimate) <= tol * value:
            return math.sqrt(value)
        estimate = value
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")


def amplification_factor(method: ForcingMethod, m: np.ndarray, dt: float) -> float:
    """Spectral norm g of the one-step forcing propagator."""
    if dt <= 0.0:
        raise ConfigError("dt must be positive", key="dt")
    return spectral_norm(forcing_propagator(method, m, dt))


# ---------------------------------------------------------------------------
# Asymmetric Hermite basis
# ---------------------------------------------------------------------------

def asymmetric_forcing_matrix(n_basis: int, x: float) -> np.ndarray:
    """
    Harmonic forcing in the asymmetric basis: M_V = -x L, with L strictly
    lower triangular and L[k+1][k] = sqrt(2(k+1)).
    """
    if n_basis < 1:
        raise ConfigError("basis size must be positive", key="n_basis")
    sub = np.sqrt(2.0 * np.arange(1, n_basis))
    return -float(x) * np.diag(sub, -1)


def asymmetric_propagator(n_basis: int, x: float, dt: float) -> np.ndarray:
    """exp(-M_V dt) from the terminating series of the nilpotent M_V."""
    step = -dt * asymmetric_forcing_matrix(n_basis, x)
    term = np.eye(n_basis)
    total = term.copy()
    for j in range(1, n_basis):
        term = term @ step / j
        total += term
    return total


# ---------------------------------------------------------------------------
# Assembly over a grid
# ---------------------------------------------------------------------------

def build_forcing_operator(
    spec: BasisSpec,
    potential: PolynomialPotential,
    x_nodes: ArrayLike,
    dt: float,
    method: ForcingMethod = ForcingMethod.CAYLEY,
    m_matrices: Optional[np.ndarray] = None,
) -> ForcingOperator:
    """Assemble M_V on the grid and precompute the full- and half-step propagators."""
    method = ForcingMethod(method)
    if m_matrices is None:
        m_matrices = pseudo_diff_matrices(spec, potential, np.asarray(x_nodes, dtype=float))
    rotations = forcing_propagator(method, m_matrices, dt)
    half_rotations = forcing_propagator(method, m_matrices, 0.5 * dt)
    logger.debug(
        "forcing operator: %d points, N=%d, method=%s, dt=%.6g",
        m_matrices.shape[0], spec.n_basis, method.value, dt,
    )
    return ForcingOperator(
        m_matrices=m_matrices,
        rotations=rotations,
        half_rotations=half_rotations,
        method=method,
        dt=dt,
    )
