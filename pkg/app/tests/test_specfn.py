"""Tests for Legendre, associated Legendre and Bessel functions"""

import math

import numpy as np
import pytest
from numpy.polynomial import legendre as npleg
from scipy import integrate

from app.services.specfn import (
    J0_FIRST_ZERO,
    assoc_legendre_norm,
    assoc_legendre_rows,
    bessel_j0,
    hilb_envelope_ratio,
    hilb_residual,
    legendre_p,
    select_hilb_prefactor,
)
from app.utils.errors import DomainError


def test_legendre_at_one():
    """P_n(1) = 1 up to degree 200"""
    for n in range(0, 201):
        assert legendre_p(n, 1.0) == pytest.approx(1.0, abs=1e-12)


def test_legendre_parity_at_minus_one():
    """P_n(-1) = (-1)^n"""
    for n in (0, 1, 7, 50, 151):
        assert legendre_p(n, -1.0) == pytest.approx((-1.0) ** n, abs=1e-12)


def test_legendre_matches_reference_polynomial():
    """Recurrence agrees with numpy's Legendre series at small degree"""
    x = np.linspace(-1.0, 1.0, 41)
    for n in (2, 5, 12):
        coeffs = np.zeros(n + 1)
        coeffs[n] = 1.0
        assert np.allclose(legendre_p(n, x), npleg.legval(x, coeffs), atol=1e-13)


def test_legendre_rejects_out_of_range():
    """|x| > 1 is a domain error"""
    with pytest.raises(DomainError):
        legendre_p(3, 1.5)


def test_assoc_legendre_orthonormal():
    """Each normalized row has unit mean square over the sphere"""
    n = 9
    nodes, weights = np.polynomial.legendre.leggauss(2 * n + 2)
    rows = assoc_legendre_rows(n, np.arccos(nodes))
    mean_square = 0.5 * np.sum(weights[:, None] * rows ** 2, axis=0)
    assert np.allclose(mean_square, 1.0, rtol=1e-10)


def test_assoc_legendre_zonal_column():
    """N_n^0 = sqrt(2n+1) P_n"""
    x = np.linspace(-0.95, 0.95, 11)
    for n in (3, 40):
        assert np.allclose(assoc_legendre_norm(n, 0, x), math.sqrt(2 * n + 1) * legendre_p(n, x), atol=1e-11)


def test_assoc_legendre_high_degree_is_finite():
    """No overflow at degree 2000 near the poles"""
    rows = assoc_legendre_rows(2000, np.array([1e-3, 0.5, np.pi / 2]))
    assert np.all(np.isfinite(rows))


def test_assoc_legendre_derivative():
    """Analytic theta-derivative matches a central difference"""
    n, h = 12, 1e-6
    theta = np.array([0.3, 1.1, 2.4])
    _, drows = assoc_legendre_rows(n, theta, derivative=True)
    numeric = (assoc_legendre_rows(n, theta + h) - assoc_legendre_rows(n, theta - h)) / (2 * h)
    assert np.allclose(drows, numeric, atol=1e-5)


def test_assoc_legendre_order_out_of_range():
    """k > n is rejected"""
    with pytest.raises(DomainError):
        assoc_legendre_norm(3, 4, 0.2)


def test_bessel_j0_values():
    """J0(0) = 1, first zero, and the circle-average integral"""
    assert bessel_j0(0.0) == 1.0
    assert abs(bessel_j0(J0_FIRST_ZERO)) < 1e-12
    for t in (0.7, 5.0, 31.0):
        integral, _ = integrate.quad(lambda s: math.cos(t * math.cos(s)), 0.0, math.pi)
        assert bessel_j0(t) == pytest.approx(integral / math.pi, abs=1e-10)


def test_bessel_j0_negative_argument():
    """t < 0 is a domain error"""
    with pytest.raises(DomainError):
        bessel_j0(-1.0)


def test_hilb_residual_small():
    """Residual is far below the Legendre amplitude in the bulk"""
    theta = np.linspace(0.2, np.pi / 2, 50)
    assert np.max(np.abs(hilb_residual(100, theta, "sqrt"))) < 5e-3


def test_hilb_residual_domain():
    """theta outside (0, pi/2] is rejected"""
    with pytest.raises(DomainError):
        hilb_residual(10, 2.0)


def test_hilb_prefactor_oracle():
    """The square-root prefactor gives an n-uniform envelope within a factor 3"""
    winner, ratios = select_hilb_prefactor((50, 100, 200))
    assert winner == "sqrt"
    spread = max(ratios["sqrt"]) / min(ratios["sqrt"])
    assert spread < 3.0
    assert hilb_envelope_ratio(50, "sqrt") == pytest.approx(ratios["sqrt"][0])
