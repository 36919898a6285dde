"""Tests for coefficient laws, random fields and local patches"""

import math

import numpy as np
import pytest

from app.services.basis import NORTH_POLE, SpherePoint, angle_between, build_basis, from_unit_vectors
from app.services.ensemble import (
    GAUSSIAN,
    GEODESIC_MARGIN,
    RADEMACHER,
    CoefficientDistribution,
    DistributionKind,
    PatchSpec,
    eval_field,
    eval_field_grad,
    eval_patch,
    exp_map,
    patch_to_sphere,
    random_field,
    sample_coefficients,
    zonal_field,
)
from app.services.specfn import legendre_p
from app.utils.errors import ConfigurationError, DimensionError
from app.utils.seeding import generator


@pytest.mark.parametrize("name", ["gaussian", "rademacher", "uniform", "two-point-asymmetric"])
def test_laws_are_standardized(name):
    """Every law has mean 0 and variance 1"""
    draws = CoefficientDistribution.from_name(name, p=0.2).draw(generator(11), 200_000)
    assert abs(draws.mean()) < 0.01
    assert draws.var() == pytest.approx(1.0, abs=0.02)


def test_two_point_law_atoms():
    """Asymmetric law takes exactly two values"""
    dist = CoefficientDistribution(kind=DistributionKind.TWO_POINT_ASYMMETRIC, p=0.1)
    atoms = np.unique(dist.draw(generator(1), 1000))
    assert np.allclose(sorted(atoms), [-math.sqrt(0.1 / 0.9), 3.0])
    assert dist.label == "two-point-asymmetric(0.1)"


def test_invalid_laws():
    """Unknown names and p outside (0, 1) are configuration errors"""
    with pytest.raises(ConfigurationError):
        CoefficientDistribution.from_name("cauchy")
    with pytest.raises(ConfigurationError):
        CoefficientDistribution.from_name("two-point-asymmetric", p=1.5)


def test_coefficients_reproducible():
    """Same seed, same coefficients; different seed, different coefficients"""
    a = sample_coefficients(RADEMACHER, 12, seed=5)
    assert a.shape == (25,)
    assert np.array_equal(a, sample_coefficients(RADEMACHER, 12, seed=5))
    assert not np.array_equal(a, sample_coefficients(RADEMACHER, 12, seed=6))


def test_zonal_field_is_legendre():
    """The e_0 field equals P_n(cos theta)"""
    field = zonal_field(7)
    theta = np.linspace(0.0, np.pi, 13)
    assert np.allclose(field(theta, np.zeros_like(theta)), legendre_p(7, np.cos(theta)), atol=1e-12)
    assert eval_field(field, NORTH_POLE) == pytest.approx(1.0)


def test_grid_and_point_evaluation_agree():
    """Separable grid synthesis equals scattered evaluation"""
    field = random_field(9, GAUSSIAN, seed=2)
    theta = np.linspace(0.1, 3.0, 5)
    phi = np.linspace(0.0, 6.0, 7)
    grid = field.on_grid(theta, phi)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    assert np.allclose(grid, field(tt.ravel(), pp.ravel()).reshape(grid.shape), atol=1e-12)


def test_field_gradient():
    """Gradient of cos(theta) is -sin(theta) e_theta"""
    value, grad = eval_field_grad(zonal_field(1), SpherePoint(theta=1.0, phi=2.0))
    assert value == pytest.approx(math.cos(1.0))
    assert grad == pytest.approx([-math.sin(1.0), 0.0], abs=1e-9)


def test_field_gradient_matches_finite_differences():
    """Gradient at 100 random points agrees with central differences"""
    n, h = 30, 1e-6
    field = random_field(n, GAUSSIAN, seed=12)
    rng = generator(5)
    theta = rng.uniform(0.2, math.pi - 0.2, 100)
    phi = rng.uniform(0.0, 2 * math.pi, 100)
    _, grads = field.with_gradient(theta, phi)
    d_theta = (field(theta + h, phi) - field(theta - h, phi)) / (2 * h)
    d_phi = (field(theta, phi + h) - field(theta, phi - h)) / (2 * h * np.sin(theta))
    assert np.max(np.abs(grads[:, 0] - d_theta)) < 1e-5 * n ** 2
    assert np.max(np.abs(grads[:, 1] - d_phi)) < 1e-5 * n ** 2


@pytest.mark.parametrize("dist", [GAUSSIAN, RADEMACHER])
def test_pointwise_variance_is_one(dist):
    """E[f_n(p)^2] = 1 within three standard errors"""
    p = SpherePoint(theta=1.1, phi=0.3)
    squares = np.array([eval_field(random_field(12, dist, seed=s), p) ** 2 for s in range(4000)])
    se = squares.std(ddof=1) / math.sqrt(squares.size)
    assert abs(squares.mean() - 1.0) < 3.0 * se


def test_patch_covariance_is_two_point_function():
    """E[F_x(y1) F_x(y2)] = P_n(cos angle) for the images of y1, y2"""
    n = 20
    spec = PatchSpec(center=SpherePoint(theta=1.2, phi=0.5), scale_R=1.5, degree=n)
    y = np.array([[0.0, 0.0], [0.6, 0.2]])
    theta, phi = patch_to_sphere(spec, y)
    angle = angle_between(SpherePoint(theta=float(theta[0]), phi=float(phi[0])),
                          SpherePoint(theta=float(theta[1]), phi=float(phi[1])))
    values = np.array([eval_patch(random_field(n, GAUSSIAN, seed=s), spec, y) for s in range(4000)])
    products = values[:, 0] * values[:, 1]
    se = products.std(ddof=1) / math.sqrt(products.size)
    assert abs(products.mean() - legendre_p(n, math.cos(angle))) < 4.0 * se


def test_wrong_coefficient_length():
    """A coefficient vector of the wrong size is a dimension error"""
    from app.services.ensemble import build_field

    with pytest.raises(DimensionError):
        build_field(3, build_basis(3), np.zeros(5))


def test_exp_map_is_geodesic():
    """|v| is the geodesic distance from the centre"""
    center = SpherePoint(theta=0.8, phi=1.2)
    v = np.array([[0.3, -0.4], [0.0, 1.5]])
    theta, phi = from_unit_vectors(exp_map(center, v))
    for t, p, expected in zip(theta, phi, (0.5, 1.5)):
        assert angle_between(center, SpherePoint(theta=float(t), phi=float(p))) == pytest.approx(expected)


def test_patch_spec_margin():
    """R/n at or above the injectivity margin is rejected"""
    PatchSpec(center=NORTH_POLE, scale_R=5.0, degree=60)
    with pytest.raises(ConfigurationError):
        PatchSpec(center=NORTH_POLE, scale_R=10.0, degree=60)
    relaxed = PatchSpec(center=NORTH_POLE, scale_R=20.0, degree=80, margin=GEODESIC_MARGIN)
    assert relaxed.radius == pytest.approx(0.25)
    with pytest.raises(ConfigurationError):
        PatchSpec(center=NORTH_POLE, scale_R=200.0, degree=80, margin=GEODESIC_MARGIN)


def test_eval_patch_matches_sphere():
    """F_x(y) = f(exp_x(R y / n))"""
    field = random_field(80, GAUSSIAN, seed=4)
    spec = PatchSpec(center=SpherePoint(theta=1.3, phi=0.4), scale_R=5.0, degree=80)
    y = np.array([[0.0, 0.0], [0.5, -0.5], [1.5, 0.2]])
    theta, phi = patch_to_sphere(spec, y)
    assert np.allclose(eval_patch(field, spec, y), field(theta, phi))
    assert eval_patch(field, spec, y)[0] == pytest.approx(eval_field(field, spec.center))
