import math

import numpy as np
import pytest
from scipy import special

from wigner_solver.errors import ConfigError
from wigner_solver.models.schemas import BasisFamily, BasisSpec
from wigner_solver.services.basis import (
    basis_integrals,
    gauss_hermite,
    gram_matrix,
    hermite_function,
    hermite_functions,
    hermite_polynomial,
    hermite_series,
    scaled_moments,
)


def test_ground_state_value_at_origin():
    assert hermite_function(0, 0.0) == pytest.approx(math.pi ** -0.25, abs=1e-15)


def test_hermite_polynomials_match_closed_forms():
    v = np.linspace(-2.0, 2.0, 9)
    np.testing.assert_allclose(hermite_polynomial(2, v), 4 * v**2 - 2, atol=1e-13)
    np.testing.assert_allclose(hermite_polynomial(3, v), 8 * v**3 - 12 * v, atol=1e-13)


def test_hermite_functions_are_orthonormal():
    np.testing.assert_allclose(gram_matrix(24), np.eye(24), atol=1e-12)


def test_high_order_functions_stay_finite():
    values = hermite_functions(200, np.linspace(-20.0, 20.0, 41))
    assert np.all(np.isfinite(values))


def test_gauss_hermite_integrates_polynomials_exactly():
    quad = gauss_hermite(6)
    assert quad.integrate(np.ones(6)) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    assert quad.integrate(quad.nodes**2) == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-14)
    # degree 10 = 2n - 2
    assert quad.integrate(quad.nodes**10) == pytest.approx(945 * math.sqrt(math.pi) / 32, rel=1e-12)


def test_gauss_hermite_nodes_are_symmetric():
    quad = gauss_hermite(11)
    np.testing.assert_allclose(quad.nodes, -quad.nodes[::-1], atol=0)
    np.testing.assert_allclose(quad.weights, quad.weights[::-1], atol=0)
    assert quad.nodes[5] == 0.0


@pytest.mark.parametrize("n", [60, 104, 200, 212])
def test_large_gauss_hermite_rules(n):
    quad = gauss_hermite(n)
    assert np.all(quad.weights > 0.0)
    assert quad.integrate(np.ones(n)) == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    assert quad.integrate(quad.nodes**2) == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-12)
    nodes, weights = special.roots_hermite(n)
    np.testing.assert_allclose(quad.nodes, nodes, rtol=1e-12, atol=1e-12)
    significant = weights > 1e-30 * weights.max()
    np.testing.assert_allclose(quad.weights[significant], weights[significant], rtol=1e-8)


def test_gauss_hermite_rejects_empty_rule():
    with pytest.raises(ConfigError):
        gauss_hermite(0)


def test_basis_integrals_even_recursion():
    w = basis_integrals(BasisSpec(n_basis=12))
    assert w[0] == pytest.approx(math.sqrt(2.0) * math.pi ** 0.25, rel=1e-14)
    assert w[2] == pytest.approx(math.pi ** 0.25, rel=1e-13)
    np.testing.assert_array_equal(w[1::2], 0.0)
    for m in range(1, 6):
        assert w[2 * m] == pytest.approx(w[2 * m - 2] * math.sqrt((2 * m - 1) / (2 * m)), rel=1e-12)


def test_basis_integrals_need_symmetric_family():
    with pytest.raises(ConfigError):
        basis_integrals(BasisSpec(n_basis=4, family=BasisFamily.ASYMMETRIC_HERMITE))


def test_first_velocity_moment():
    # int v phi_1 dv = 2 pi^(1/4)
    mu = scaled_moments(4, 1)
    assert mu[1] == pytest.approx(2.0 * math.pi ** 0.25, rel=1e-13)
    assert mu[0] == pytest.approx(0.0, abs=1e-14)


def test_hermite_series_matches_explicit_sum(rng):
    coeffs = rng.normal(size=10) + 1j * rng.normal(size=10)
    v = np.linspace(-3.0, 3.0, 13)
    rows = hermite_functions(10, v) * np.exp(0.5 * v * v)
    np.testing.assert_allclose(hermite_series(coeffs, v), coeffs @ rows, atol=1e-12)
