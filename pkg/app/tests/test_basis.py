"""Tests for the real orthonormal spherical harmonic basis"""

import math

import numpy as np
import pytest

from app.services.basis import (
    NORTH_POLE,
    BasisKind,
    SpherePoint,
    angle_between,
    build_basis,
    eval_basis,
    from_unit_vectors,
    to_unit_vectors,
    two_point,
    uniform_points,
)
from app.services.specfn import legendre_p
from app.utils.errors import DomainError, UnsupportedDegreeError
from app.utils.seeding import generator


@pytest.mark.parametrize("n", [10, 40, 100])
def test_addition_theorem(n):
    """(2n+1)^-1 Sum_k Y_k(x) Y_k(y) = P_n(cos angle) for random pairs"""
    rng = generator(n)
    theta_x, phi_x = uniform_points(rng, 1000)
    theta_y, phi_y = uniform_points(rng, 1000)
    basis = build_basis(n)
    lhs = np.einsum("ij,ij->i", basis.evaluate(theta_x, phi_x), basis.evaluate(theta_y, phi_y)) / (2 * n + 1)
    cos_angle = np.einsum("ij,ij->i", to_unit_vectors(theta_x, phi_x), to_unit_vectors(theta_y, phi_y))
    rhs = legendre_p(n, np.clip(cos_angle, -1.0, 1.0))
    assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_addition_theorem_rotated_basis():
    """The rotated-pair basis is orthonormal too, so the kernel is unchanged"""
    n = 15
    rng = generator(3)
    theta, phi = uniform_points(rng, 200)
    standard = build_basis(n).evaluate(theta, phi)
    rotated = build_basis(n, BasisKind.POLE_ROTATED_PAIR).evaluate(theta, phi)
    assert np.allclose(standard @ standard.T, rotated @ rotated.T, atol=1e-10)


def test_orthonormality_by_quadrature():
    """Gram matrix over the probability measure is the identity"""
    n = 6
    nodes, weights = np.polynomial.legendre.leggauss(n + 2)
    phi = 2 * np.pi * np.arange(2 * n + 2) / (2 * n + 2)
    theta = np.repeat(np.arccos(nodes), phi.size)
    phis = np.tile(phi, nodes.size)
    w = np.repeat(weights, phi.size) / (2.0 * phi.size)
    values = build_basis(n).evaluate(theta, phis)
    gram = values.T @ (values * w[:, None])
    assert np.allclose(gram, np.eye(2 * n + 1), atol=1e-12)


def test_pole_values():
    """Only Y_0 is nonzero at the north pole, with value sqrt(2n+1)"""
    n = 25
    standard = eval_basis(build_basis(n), NORTH_POLE)
    expected = np.zeros(2 * n + 1)
    expected[n] = math.sqrt(2 * n + 1)
    assert np.allclose(standard, expected, atol=1e-12)

    rotated = eval_basis(build_basis(n, BasisKind.POLE_ROTATED_PAIR), NORTH_POLE)
    assert rotated[n] == pytest.approx(math.sqrt(2 * n + 1) / math.sqrt(2))
    assert rotated[n + 1] == pytest.approx(math.sqrt(2 * n + 1) / math.sqrt(2))


def test_gradient_matches_finite_difference():
    """Orthonormal-frame gradient components against central differences"""
    basis = build_basis(8)
    theta, phi, h = np.array([0.7, 2.0]), np.array([1.3, 4.1]), 1e-6
    _, d_theta, d_phi = basis.evaluate_with_gradient(theta, phi)
    num_theta = (basis.evaluate(theta + h, phi) - basis.evaluate(theta - h, phi)) / (2 * h)
    num_phi = (basis.evaluate(theta, phi + h) - basis.evaluate(theta, phi - h)) / (2 * h) / np.sin(theta)[:, None]
    assert np.allclose(d_theta, num_theta, atol=1e-5)
    assert np.allclose(d_phi, num_phi, atol=1e-5)


def test_evaluate_ring_matches_evaluate():
    """Ring evaluation equals pointwise evaluation at constant colatitude"""
    basis = build_basis(7, BasisKind.POLE_ROTATED_PAIR)
    phi = np.linspace(0.0, 2 * np.pi, 9)
    assert np.allclose(basis.evaluate_ring(1.1, phi), basis.evaluate(np.full(phi.size, 1.1), phi), atol=1e-13)


def test_degree_zero_unsupported():
    """n = 0 is rejected"""
    with pytest.raises(UnsupportedDegreeError):
        build_basis(0)


def test_two_point_and_angles():
    """Two-point function at 0 is 1; antipodes are pi apart"""
    assert two_point(30, 0.0) == pytest.approx(1.0)
    south = SpherePoint(theta=math.pi, phi=0.0)
    assert angle_between(NORTH_POLE, south) == pytest.approx(math.pi)
    with pytest.raises(DomainError):
        two_point(3, 4.0)


def test_unit_vector_round_trip_and_validation():
    """Coordinates survive the 3-vector map; colatitude is range checked"""
    theta, phi = np.array([0.4, 2.9]), np.array([0.1, 5.5])
    back_theta, back_phi = from_unit_vectors(to_unit_vectors(theta, phi))
    assert np.allclose(back_theta, theta) and np.allclose(back_phi, phi)
    assert SpherePoint(theta=1.0, phi=-np.pi / 2).phi == pytest.approx(3 * np.pi / 2)
    with pytest.raises(ValueError):
        SpherePoint(theta=-0.1)
