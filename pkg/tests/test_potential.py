import numpy as np
import pytest
from pydantic import ValidationError

from wigner_solver.errors import ConfigError
from wigner_solver.models.schemas import PolynomialPotential, PotentialConfig, PotentialKind
from wigner_solver.services import potential as pot


def test_trailing_zeros_are_trimmed():
    assert PolynomialPotential(coeffs=(0.0, 0.0, 0.5, 0.0, 0.0)).degree == 2
    assert PolynomialPotential(coeffs=(0.0,)).is_zero


def test_degree_above_limit_is_rejected():
    with pytest.raises(ValidationError):
        PolynomialPotential(coeffs=(0.0,) * 9 + (1.0,))


def test_evaluate_quartic(quartic):
    x = np.array([-1.0, 0.0, 2.0])
    np.testing.assert_allclose(pot.evaluate(quartic, x), 0.5 * x**2 + 0.5 * x**4)


def test_derivative_beyond_degree_is_zero(quartic):
    assert pot.derivative(quartic, 5).is_zero
    assert pot.derivative(quartic, 4).coeffs == (12.0,)


def test_delta_v_is_odd_in_eta(quartic):
    eta = np.linspace(-2.0, 2.0, 7)
    d = pot.delta_v(quartic, 0.7, eta, 1.0)
    np.testing.assert_allclose(d, -d[::-1], atol=1e-13)


def test_odd_derivatives_of_quartic(quartic):
    x = np.array([0.0, 1.0, -2.0])
    rows = pot.odd_derivatives(quartic, x)
    assert rows.shape == (2, 3)
    np.testing.assert_allclose(rows[0], x + 2 * x**3)
    np.testing.assert_allclose(rows[1], 12 * x)


def test_odd_derivatives_of_free_potential_are_empty():
    rows = pot.odd_derivatives(PolynomialPotential(coeffs=()), np.zeros(4))
    assert rows.shape == (0, 4)


def test_double_well_needs_negative_curvature():
    assert pot.double_well(-0.4, 0.05).coeffs == (0.0, 0.0, -0.4, 0.0, 0.05)
    with pytest.raises(ConfigError):
        pot.double_well(0.4, 0.05)


def test_from_config_named_and_raw():
    named = pot.from_config(PotentialConfig(kind=PotentialKind.HARMONIC))
    assert pot.quadratic_quartic(named) == (0.5, 0.0)
    raw = pot.from_config(PotentialConfig(kind=PotentialKind.RAW, terms=[(2, 0.25), (6, 0.01), (2, 0.25)]))
    assert raw.coeffs == (0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.01)


def test_quadratic_quartic_rejects_odd_terms():
    with pytest.raises(ConfigError):
        pot.quadratic_quartic(pot.from_terms([(2, 0.5), (3, 0.1)]))
