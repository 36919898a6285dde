"""Tests for the random wave model"""

import math

import numpy as np
import pytest
from scipy.special import jn_zeros

from app.services.nodal import zonal_zero_angles
from app.services.rwm import census_rwm, empirical_covariance, origin_values, rwm_census, sample_rwm
from app.services.specfn import bessel_j0
from app.utils import stats
from app.utils.errors import ConfigurationError


def test_unit_variance_everywhere():
    """sqrt(2/M) Sum cos(phase) has mean square 1 for any fixed point"""
    values = origin_values(4000, M=64, seed=3)
    assert np.mean(values ** 2) == pytest.approx(1.0, abs=0.1)
    assert stats.ks_normal(values) < 0.05


def test_sample_is_reproducible_and_immutable():
    """Same seed gives the same plane waves; arrays are read only"""
    a, b = sample_rwm(128, seed=9), sample_rwm(128, seed=9)
    assert np.array_equal(a.angles, b.angles) and np.array_equal(a.phases, b.phases)
    with pytest.raises(ValueError):
        a.phases[0] = 0.0
    x = np.linspace(-3, 3, 7)
    assert np.allclose(a(x, -x), b(x, -x))


def test_covariance_is_bessel():
    """E[F(0) F(d)] = J0(|d|) within four standard errors"""
    separations = [(1.0, 0.0), (0.0, 2.5), (3.0, 4.0)]
    means, ses = empirical_covariance(separations, samples=3000, M=256, seed=1)
    targets = bessel_j0(np.hypot(*np.asarray(separations).T))
    assert np.all(np.abs(means - targets) < 4.0 * ses)


def test_covariance_is_isotropic():
    """Axis-aligned and diagonal separations of equal length give the same covariance"""
    s = 1.0 / math.sqrt(2.0)
    separations = [(2.0, 0.0), (2.0 * s, 2.0 * s), (0.0, 5.0), (5.0 * s, -5.0 * s)]
    means, ses = empirical_covariance(separations, samples=4000, M=256, seed=4)
    for axis, diagonal in ((0, 1), (2, 3)):
        assert abs(means[axis] - means[diagonal]) < 3.0 * math.hypot(ses[axis], ses[diagonal])


def test_truncation_is_gaussian_at_default_waves():
    """At M = 1024 the law of F(0) is within KS 0.03 of N(0, 1)"""
    assert stats.ks_normal(origin_values(4000, M=1024, seed=6)) < 0.03


def test_spatial_mean_square_over_box():
    """Mean of F^2 over a 40 x 40 box, averaged over 100 fields, is 1"""
    x = np.linspace(-20.0, 20.0, 41)
    x1, x2 = np.meshgrid(x, x, indexing="ij")
    box_means = [np.mean(sample_rwm(1024, seed=s)(x1, x2) ** 2) for s in range(100)]
    assert np.mean(box_means) == pytest.approx(1.0, abs=0.05)


def test_cosine_field_census():
    """cos(x1) on the radius-6 disk: five stripes, none contained"""
    census = rwm_census(lambda x1, x2: np.cos(x1), 6.0)
    assert census.count_total == 5
    assert census_rwm(lambda x1, x2: np.cos(x1), 6.0) == 0


def test_radial_bessel_field_census():
    """J0(|x|) on the radius-10 disk: disk plus two annuli contained, outer annulus cut"""
    field = lambda x1, x2: bessel_j0(np.hypot(x1, x2))  # noqa: E731
    census = rwm_census(field, 10.0)
    assert census.count_total == 4
    assert census.count_contained == 3


def test_guards():
    """Too few waves, small radii and coarse grids are rejected"""
    with pytest.raises(ConfigurationError):
        sample_rwm(M=16)
    with pytest.raises(ConfigurationError):
        rwm_census(sample_rwm(64, seed=0), 2.0)
    with pytest.raises(ConfigurationError):
        rwm_census(sample_rwm(64, seed=0), 10.0, q=4)


def test_scaling_limit_of_zonal_bands():
    """Zeros of P_n(cos(r/n)) approach the zeros of J0(r)"""
    n = 400
    scaled = (n + 0.5) * zonal_zero_angles(n)[:3]
    assert np.allclose(scaled, jn_zeros(0, 3), rtol=1e-3)
    assert math.isclose(bessel_j0(scaled[0]), 0.0, abs_tol=1e-3)
