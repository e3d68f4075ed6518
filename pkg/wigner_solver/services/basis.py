"""
Hermite polynomials and functions, Gauss-Hermite quadrature and the basis
integrals every other module builds on.

Conventions: physicists' Hermite polynomials, H_{k+1} = 2v H_k - 2k H_{k-1},
and orthonormal Hermite functions

    phi_k(v) = exp(-v^2/2) H_k(v) / sqrt(pi^(1/2) 2^k k!).

phi_k is evaluated through the normalized recursion on h_k = phi_k exp(v^2/2)
so that large k stays in floating-point range.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike
from scipy import linalg

from wigner_solver.errors import ConfigError, ConvergenceError
from wigner_solver.models.schemas import BasisFamily, BasisSpec

logger = logging.getLogger(__name__)

PI_QUARTER = math.pi ** -0.25
SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class Quadrature:
    """Gauss-Hermite rule for the weight exp(-v^2)."""
    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.nodes)

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Sum of weights * values over the last axis."""
        return values @ self.weights


def hermite_polynomial(k: int, v: ArrayLike) -> np.ndarray:
    """Physicists' Hermite polynomial H_k(v) by three-term recursion."""
    if k < 0:
        raise ConfigError("Hermite index must be non-negative", key="k")
    v = np.asarray(v, dtype=float)
    h_prev = np.zeros_like(v)
    h = np.ones_like(v)
    for j in range(k):
        h_prev, h = h, 2.0 * v * h - 2.0 * j * h_prev
    return h


def normalized_hermite(n: int, v: ArrayLike) -> np.ndarray:
    """
    Rows h_0..h_{n-1} of the normalized Hermite polynomials at v.

    h_k(v) = H_k(v) / sqrt(pi^(1/2) 2^k k!), so phi_k = h_k exp(-v^2/2).
    Returns an array of shape (n,) + shape(v).
    """
    v = np.asarray(v, dtype=float)
    out = np.empty((n,) + v.shape)
    if n == 0:
        return out
    out[0] = PI_QUARTER
    if n > 1:
        out[1] = math.sqrt(2.0) * v * out[0]
    for k in range(1, n - 1):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * v * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def hermite_functions(n: int, v: ArrayLike) -> np.ndarray:
    """Rows phi_0..phi_{n-1} at v, shape (n,) + shape(v)."""
    v = np.asarray(v, dtype=float)
    return normalized_hermite(n, v) * np.exp(-0.5 * v * v)


def hermite_function(k: int, v: ArrayLike) -> np.ndarray:
    """Orthonormal Hermite function phi_k(v)."""
    if k < 0:
        raise ConfigError("Hermite index must be non-negative", key="k")
    return hermite_functions(k + 1, v)[k]


def hermite_series(coeffs: ArrayLike, v: ArrayLike) -> np.ndarray:
    """
    sum_k coeffs[k] h_k(v) without materializing every row.

    coeffs may be complex; the Gaussian factor is left to the caller.
    """
    coeffs = np.asarray(coeffs)
    v = np.asarray(v, dtype=float)
    total = np.zeros(v.shape, dtype=np.result_type(coeffs.dtype, float))
    if coeffs.size == 0:
        return total
    h_prev = np.zeros_like(v)
    h = np.full_like(v, PI_QUARTER)
    total += coeffs[0] * h
    for k in range(coeffs.size - 1):
        h_prev, h = h, math.sqrt(2.0 / (k + 1)) * v * h - math.sqrt(k / (k + 1)) * h_prev
        total += coeffs[k + 1] * h
    return total


@lru_cache(maxsize=64)
def _gauss_hermite_cached(n: int) -> Quadrature:
    k = np.arange(1, n)
    off_diagonal = np.sqrt(k / 2.0)
    try:
        nodes = linalg.eigvalsh_tridiagonal(np.zeros(n), off_diagonal)
    except linalg.LinAlgError as exc:
        raise ConvergenceError(f"Jacobi eigen-solve failed for {n}-node Gauss-Hermite rule: {exc}") from exc
    # symmetrize against roundoff
    nodes = 0.5 * (nodes - nodes[::-1])
    # Christoffel numbers: 1 / sum_k h_k(x_i)^2 = exp(-x_i^2) / sum_k phi_k(x_i)^2
    weights = np.exp(-nodes * nodes) / np.sum(hermite_functions(n, nodes) ** 2, axis=0)
    weights = 0.5 * (weights + weights[::-1])
    if not np.all(np.isfinite(weights)) or np.any(weights < 0.0):
        raise ConvergenceError("invalid Gauss-Hermite weight", index=int(np.argmin(np.nan_to_num(weights, nan=-1.0))))
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return Quadrature(nodes=nodes, weights=weights)


def gauss_hermite(n: int) -> Quadrature:
    """
    n-node Gauss-Hermite rule, exact for polynomials of degree <= 2n-1
    against exp(-v^2).

    Nodes are eigenvalues of the symmetric Jacobi matrix with off-diagonals
    sqrt(k/2). Weights come from the Christoffel formula, so the outer ones
    keep full relative accuracy for large n; they underflow to zero only
    where exp(-x^2) itself does.
    """
    if n < 1:
        raise ConfigError("quadrature needs at least one node", key="n")
    return _gauss_hermite_cached(int(n))


def scaled_moments(n: int, order: int = 0) -> np.ndarray:
    """
    mu_k = int v^order phi_k(v) dv for k < n, exact.

    With v = sqrt(2) u the integrand becomes a polynomial of degree
    k + order against exp(-u^2).
    """
    quad = gauss_hermite(math.ceil((n + order + 2) / 2))
    v = math.sqrt(2.0) * quad.nodes
    rows = normalized_hermite(n, v) * v ** order
    return math.sqrt(2.0) * quad.integrate(rows)


def basis_integrals(spec: BasisSpec) -> np.ndarray:
    """w_k = int phi_k(v) dv for k < N; zero for odd k."""
    if spec.family != BasisFamily.SYMMETRIC_HERMITE:
        raise ConfigError("basis integrals are defined for the symmetric Hermite basis", key="family")
    w = scaled_moments(spec.n_basis, 0)
    w[1::2] = 0.0
    return w


def gram_matrix(n: int) -> np.ndarray:
    """Quadrature Gram matrix of phi_0..phi_{n-1}; identity for an orthonormal set."""
    quad = gauss_hermite(n)
    rows = normalized_hermite(n, quad.nodes)
    return (rows * quad.weights) @ rows.T
