"""Random coefficient laws, the random field f_n and its local patches F_x"""

import logging
from enum import Enum
from typing import Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.services.basis import HarmonicBasis, SpherePoint, build_basis, from_unit_vectors
from app.utils.config import settings
from app.utils.errors import ConfigurationError, DimensionError, DomainError
from app.utils.seeding import generator

logger = logging.getLogger(__name__)

SQRT3 = np.sqrt(3.0)

# R/n bound that keeps exp_x injective on the whole |y| <= 2 evaluation disk
GEODESIC_MARGIN = np.pi / 2


class DistributionKind(str, Enum):
    GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"
    UNIFORM = "uniform"
    TWO_POINT_ASYMMETRIC = "two-point-asymmetric"


class CoefficientDistribution(BaseModel):
    """A seedable mean-zero, unit-variance coefficient law"""

    model_config = ConfigDict(frozen=True)

    kind: DistributionKind = Field(..., description="Law family")
    p: float = Field(0.5, description="Atom probability of the two-point-asymmetric law")

    @model_validator(mode="after")
    def _atom_probability(self):
        if self.kind is DistributionKind.TWO_POINT_ASYMMETRIC and not 0.0 < self.p < 1.0:
            raise ConfigurationError(f"two-point-asymmetric law needs 0 < p < 1, got {self.p}")
        return self

    @property
    def label(self) -> str:
        if self.kind is DistributionKind.TWO_POINT_ASYMMETRIC:
            return f"{self.kind.value}({self.p:g})"
        return self.kind.value

    @classmethod
    def from_name(cls, name: str, p: float = 0.1) -> "CoefficientDistribution":
        try:
            kind = DistributionKind(name)
        except ValueError as e:
            raise ConfigurationError(f"unknown coefficient law '{name}'") from e
        return cls(kind=kind, p=p)

    def draw(self, rng: np.random.Generator, size: Union[int, Tuple[int, ...]]) -> np.ndarray:
        """i.i.d. draws of the law"""
        if self.kind is DistributionKind.GAUSSIAN:
            return rng.standard_normal(size)
        if self.kind is DistributionKind.RADEMACHER:
            return 2.0 * rng.integers(0, 2, size=size).astype(float) - 1.0
        if self.kind is DistributionKind.UNIFORM:
            return rng.uniform(-SQRT3, SQRT3, size)
        high = np.sqrt((1.0 - self.p) / self.p)
        low = -np.sqrt(self.p / (1.0 - self.p))
        return np.where(rng.random(size) < self.p, high, low)


GAUSSIAN = CoefficientDistribution(kind=DistributionKind.GAUSSIAN)
RADEMACHER = CoefficientDistribution(kind=DistributionKind.RADEMACHER)


def sample_coefficients(dist: CoefficientDistribution, n: int, seed: int) -> np.ndarray:
    """2n+1 i.i.d. draws from a counter-based stream keyed by seed"""
    return dist.draw(generator(seed), 2 * n + 1)


class RandomField:
    """f_n = c_n Sum_k a_k Y_k with c_n = (2n+1)^(-1/2)"""

    def __init__(self, n: int, basis: HarmonicBasis, coeffs: np.ndarray):
        coeffs = np.array(coeffs, dtype=float)
        if basis.degree != n:
            raise DimensionError(f"basis degree {basis.degree} does not match field degree {n}")
        if coeffs.shape != (2 * n + 1,):
            raise DimensionError(f"expected {2 * n + 1} coefficients, got shape {coeffs.shape}")
        self.degree = int(n)
        self.basis = basis
        self.coeffs = coeffs
        self.coeffs.flags.writeable = False
        self.normalizer = 1.0 / np.sqrt(2 * n + 1)

    def __call__(self, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
        return self.normalizer * self.basis.synthesize_points(self.coeffs, theta, phi)

    def on_grid(self, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
        """Values on the product grid theta x phi, shape (len(theta), len(phi))"""
        return self.normalizer * self.basis.synthesize_grid(self.coeffs, theta, phi)

    def with_gradient(self, theta: np.ndarray, phi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Values and orthonormal-frame gradients (e_theta, e_phi components)

        Returns:
            (values (P,), gradients (P, 2))
        """
        theta = np.atleast_1d(np.asarray(theta, dtype=float)).ravel()
        phi = np.atleast_1d(np.asarray(phi, dtype=float)).ravel()
        values = np.empty(theta.size)
        grads = np.empty((theta.size, 2))
        for start in range(0, theta.size, settings.EVAL_CHUNK):
            stop = start + settings.EVAL_CHUNK
            y, d_theta, d_phi = self.basis.evaluate_with_gradient(theta[start:stop], phi[start:stop])
            values[start:stop] = y @ self.coeffs
            grads[start:stop, 0] = d_theta @ self.coeffs
            grads[start:stop, 1] = d_phi @ self.coeffs
        return self.normalizer * values, self.normalizer * grads


def build_field(n: int, basis: HarmonicBasis, coeffs: np.ndarray) -> RandomField:
    return RandomField(n, basis, coeffs)


def zonal_field(n: int) -> RandomField:
    """Coefficients e_0 in the standard basis: f = P_n(cos theta)"""
    coeffs = np.zeros(2 * n + 1)
    coeffs[n] = 1.0
    return RandomField(n, build_basis(n), coeffs)


def random_field(n: int, dist: CoefficientDistribution, seed: int, basis: HarmonicBasis = None) -> RandomField:
    basis = basis or build_basis(n)
    return RandomField(n, basis, sample_coefficients(dist, n, seed))


def eval_field(field: RandomField, p: SpherePoint) -> float:
    return float(field(np.array([p.theta]), np.array([p.phi]))[0])


def eval_field_grad(field: RandomField, p: SpherePoint) -> Tuple[float, np.ndarray]:
    values, grads = field.with_gradient(np.array([p.theta]), np.array([p.phi]))
    return float(values[0]), grads[0]


class PatchSpec(BaseModel):
    """A rescaled local patch y -> exp_x(R y / n)"""

    model_config = ConfigDict(frozen=True)

    center: SpherePoint = Field(..., description="Patch centre x")
    scale_R: float = Field(..., gt=0, description="Patch radius R in wavelength units")
    degree: int = Field(..., ge=1, description="Field degree n")
    margin: float = Field(
        default_factory=lambda: settings.INJECTIVITY_MARGIN,
        gt=0,
        le=GEODESIC_MARGIN,
        description="Upper bound on R/n",
    )

    @model_validator(mode="after")
    def _injectivity_margin(self):
        if self.scale_R / self.degree >= self.margin:
            raise ConfigurationError(
                f"R/n = {self.scale_R / self.degree:.4f} violates the injectivity margin {self.margin:g}"
            )
        return self

    @property
    def radius(self) -> float:
        """Geodesic radius of the unit patch disk"""
        return self.scale_R / self.degree


def rotation_to(center: SpherePoint) -> np.ndarray:
    """Rotation Rz(phi) Ry(theta) taking the north pole to centre; maps e_x, e_y to e_theta, e_phi"""
    ct, st = np.cos(center.theta), np.sin(center.theta)
    cp, sp = np.cos(center.phi), np.sin(center.phi)
    rz = np.array([[cp, -sp, 0.0], [sp, cp, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[ct, 0.0, st], [0.0, 1.0, 0.0], [-st, 0.0, ct]])
    return rz @ ry


def exp_map(center: SpherePoint, v: np.ndarray) -> np.ndarray:
    """
    Exponential map at centre applied to tangent vectors v (..., 2) in the
    (e_theta, e_phi) frame; returns unit 3-vectors. Exact for every |v|.
    """
    v = np.asarray(v, dtype=float)
    r = np.linalg.norm(v, axis=-1)
    # sin(r)/r, finite at r = 0
    ratio = np.sinc(r / np.pi)
    local = np.stack([ratio * v[..., 0], ratio * v[..., 1], np.cos(r)], axis=-1)
    return local @ rotation_to(center).T


def patch_to_sphere(spec: PatchSpec, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Colatitude / longitude of exp_x(R y / n)"""
    return from_unit_vectors(exp_map(spec.center, spec.radius * np.asarray(y, dtype=float)))


def eval_patch(field: RandomField, spec: PatchSpec, y: np.ndarray) -> Union[float, np.ndarray]:
    """F_x(y) = f(exp_x(R y / n)) for |y| <= 2"""
    y_arr = np.asarray(y, dtype=float)
    if spec.degree != field.degree:
        raise ConfigurationError(f"patch degree {spec.degree} differs from field degree {field.degree}")
    if np.any(np.linalg.norm(y_arr, axis=-1) > 2.0 + 1e-12):
        raise DomainError("patch coordinates must satisfy |y| <= 2")
    theta, phi = patch_to_sphere(spec, y_arr)
    values = field(theta.ravel(), phi.ravel()).reshape(theta.shape)
    return float(values) if y_arr.ndim == 1 else values
