"""Polynomial potentials, their exact derivatives and the symbol difference dV."""

from typing import Iterable, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from numpy.typing import ArrayLike

from wigner_solver.errors import ConfigError
from wigner_solver.models.schemas import PolynomialPotential, PotentialConfig, PotentialKind


def harmonic(c: float = 0.5) -> PolynomialPotential:
    """V = c x^2."""
    return PolynomialPotential(coeffs=(0.0, 0.0, c))


def anharmonic(c: float = 0.5, K: float = 0.5) -> PolynomialPotential:
    """V = c x^2 + K x^4."""
    return PolynomialPotential(coeffs=(0.0, 0.0, c, 0.0, K))


def double_well(c: float = -0.4, K: float = 0.05) -> PolynomialPotential:
    """V = c x^2 + K x^4 with c < 0 < K."""
    if not (c < 0.0 < K):
        raise ConfigError("a double well needs c < 0 < K", key="potential")
    return anharmonic(c, K)


def from_terms(terms: Iterable[Tuple[int, float]]) -> PolynomialPotential:
    """Build V from (power, coefficient) pairs; repeated powers add up."""
    terms = list(terms)
    if not terms:
        return PolynomialPotential(coeffs=())
    if any(p < 0 for p, _ in terms):
        raise ConfigError("powers must be non-negative", key="potential.terms")
    coeffs = [0.0] * (max(p for p, _ in terms) + 1)
    for power, value in terms:
        coeffs[power] += float(value)
    return PolynomialPotential(coeffs=tuple(coeffs))


def from_config(config: PotentialConfig) -> PolynomialPotential:
    """Build the potential a run configuration describes."""
    if config.kind == PotentialKind.FREE:
        return PolynomialPotential(coeffs=())
    if config.kind == PotentialKind.RAW:
        return from_terms(config.terms)
    if config.kind == PotentialKind.HARMONIC:
        return anharmonic(0.5 if config.c is None else config.c, 0.0 if config.K is None else config.K)
    if config.kind == PotentialKind.ANHARMONIC:
        return anharmonic(0.5 if config.c is None else config.c, 0.5 if config.K is None else config.K)
    return double_well(-0.4 if config.c is None else config.c, 0.05 if config.K is None else config.K)


def quadratic_quartic(potential: PolynomialPotential) -> Tuple[float, float]:
    """(c, K) of V = c x^2 + K x^4; other shapes are rejected."""
    coeffs = list(potential.coeffs) + [0.0] * max(0, 5 - len(potential.coeffs))
    if len(coeffs) > 5 or coeffs[0] != 0.0 or coeffs[1] != 0.0 or coeffs[3] != 0.0:
        raise ConfigError("eigenstates need a potential of the form c x^2 + K x^4", key="potential")
    return coeffs[2], coeffs[4]


def evaluate(potential: PolynomialPotential, x: ArrayLike) -> np.ndarray:
    """V(x)."""
    x = np.asarray(x, dtype=float)
    if potential.is_zero:
        return np.zeros_like(x)
    return P.polyval(x, potential.coeffs)


def derivative(potential: PolynomialPotential, order: int) -> PolynomialPotential:
    """Exact derivative of the given order; the zero polynomial once order > degree."""
    if order < 0:
        raise ConfigError("derivative order must be non-negative", key="order")
    if order == 0 or potential.is_zero:
        return potential
    if order > potential.degree:
        return PolynomialPotential(coeffs=())
    return PolynomialPotential(coeffs=tuple(P.polyder(potential.coeffs, order)))


def delta_v(potential: PolynomialPotential, x: ArrayLike, eta: ArrayLike, epsilon: float) -> np.ndarray:
    """V(x + eps*eta/2) - V(x - eps*eta/2); odd in eta."""
    x = np.asarray(x, dtype=float)
    shift = 0.5 * epsilon * np.asarray(eta, dtype=float)
    return evaluate(potential, x + shift) - evaluate(potential, x - shift)


def odd_derivatives(potential: PolynomialPotential, x: ArrayLike) -> np.ndarray:
    """
    Rows V^(1)(x), V^(3)(x), ..., V^(2n+1)(x) up to the last non-vanishing
    odd derivative. Shape (n_terms,) + shape(x); empty when V' == 0.
    """
    x = np.asarray(x, dtype=float)
    rows = []
    order = 1
    while order <= potential.degree:
        rows.append(evaluate(derivative(potential, order), x))
        order += 2
    if not rows:
        return np.zeros((0,) + x.shape)
    return np.stack(rows)
