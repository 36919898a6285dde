"""Degree-n real orthonormal spherical-harmonic basis"""

import logging
from enum import Enum
from functools import lru_cache
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.services.specfn import assoc_legendre_rows, legendre_p
from app.utils.config import settings
from app.utils.errors import DomainError, UnsupportedDegreeError

logger = logging.getLogger(__name__)

# Colatitude clamp for gradient rows at the poles
POLE_CLAMP = 1e-8


class BasisKind(str, Enum):
    STANDARD = "standard"
    POLE_ROTATED_PAIR = "pole-rotated-pair"


class SpherePoint(BaseModel):
    """A point on the unit sphere in colatitude / longitude"""

    model_config = ConfigDict(frozen=True)

    theta: float = Field(..., description="Colatitude in [0, pi]")
    phi: float = Field(0.0, description="Longitude in [0, 2 pi)")

    @field_validator("theta")
    @classmethod
    def _colatitude_range(cls, value: float) -> float:
        if not 0.0 <= value <= np.pi:
            raise ValueError(f"colatitude {value} outside [0, pi]")
        return value

    @field_validator("phi")
    @classmethod
    def _wrap_longitude(cls, value: float) -> float:
        return float(np.mod(value, 2 * np.pi))

    def unit_vector(self) -> np.ndarray:
        return to_unit_vectors(np.array([self.theta]), np.array([self.phi]))[0]


NORTH_POLE = SpherePoint(theta=0.0, phi=0.0)


def to_unit_vectors(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    sin_t = np.sin(theta)
    return np.stack([sin_t * np.cos(phi), sin_t * np.sin(phi), np.cos(theta)], axis=-1)


def from_unit_vectors(xyz: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Colatitude and longitude of (normalized) 3-vectors"""
    xyz = np.asarray(xyz, dtype=float)
    norm = np.linalg.norm(xyz, axis=-1)
    z = np.clip(xyz[..., 2] / norm, -1.0, 1.0)
    theta = np.arccos(z)
    phi = np.mod(np.arctan2(xyz[..., 1], xyz[..., 0]), 2 * np.pi)
    return theta, phi


def angle_between(p: SpherePoint, q: SpherePoint) -> float:
    """Great-circle angle by the spherical law of cosines, in [0, pi]"""
    cos_angle = np.cos(p.theta) * np.cos(q.theta) + np.sin(p.theta) * np.sin(q.theta) * np.cos(p.phi - q.phi)
    return float(np.arccos(np.clip(cos_angle, -1.0, 1.0)))


def uniform_points(rng: np.random.Generator, count: int) -> Tuple[np.ndarray, np.ndarray]:
    """Points drawn from the uniform probability measure on the sphere"""
    z = rng.uniform(-1.0, 1.0, count)
    phi = rng.uniform(0.0, 2 * np.pi, count)
    return np.arccos(z), phi


class HarmonicBasis:
    """
    Real orthonormal basis {Y_k}, k = -n..n, for the uniform probability measure

    Standard kind: Y_0 = sqrt(2n+1) P_n(cos t), Y_{+k} = sqrt(2) N_n^k cos(k p),
    Y_{-k} = sqrt(2) N_n^k sin(k p). The pole-rotated-pair kind replaces
    (Y_0, Y_1) by ((Y_0 + Y_1)/sqrt 2, (Y_0 - Y_1)/sqrt 2).

    Vectors are ordered k = -n..n, so Y_k sits at index k + n.
    """

    def __init__(self, degree: int, kind: BasisKind = BasisKind.STANDARD):
        if degree < 1:
            raise UnsupportedDegreeError(f"degree {degree} is not supported; need n >= 1")
        self.degree = int(degree)
        self.kind = BasisKind(kind)
        self.size = 2 * self.degree + 1
        self.orders = np.arange(self.degree + 1, dtype=float)

        # Orthogonal mixing from standard to this basis; symmetric, so it is its own inverse
        self.mixing = np.eye(self.size)
        if self.kind is BasisKind.POLE_ROTATED_PAIR:
            i0, i1 = self.index(0), self.index(1)
            s = 1.0 / np.sqrt(2.0)
            self.mixing[np.ix_([i0, i1], [i0, i1])] = [[s, s], [s, -s]]

    def index(self, k: int) -> int:
        if abs(k) > self.degree:
            raise DomainError(f"basis index {k} outside -{self.degree}..{self.degree}")
        return k + self.degree

    def to_standard(self, coeffs: np.ndarray) -> np.ndarray:
        """Coefficients of the same function in the standard basis"""
        return self.mixing.T @ np.asarray(coeffs, dtype=float)

    def _assemble(self, rows: np.ndarray, cos_k: np.ndarray, sin_k: np.ndarray) -> np.ndarray:
        n = self.degree
        out = np.empty((rows.shape[0], self.size))
        out[:, n] = rows[:, 0]
        out[:, n + 1:] = np.sqrt(2.0) * rows[:, 1:] * cos_k[:, 1:]
        out[:, :n] = (np.sqrt(2.0) * rows[:, 1:] * sin_k[:, 1:])[:, ::-1]
        return out

    def evaluate(self, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
        """Matrix (points, 2n+1) of basis values"""
        theta = np.atleast_1d(np.asarray(theta, dtype=float)).ravel()
        phi = np.atleast_1d(np.asarray(phi, dtype=float)).ravel()
        rows = assoc_legendre_rows(self.degree, theta)
        angles = np.outer(phi, self.orders)
        values = self._assemble(rows, np.cos(angles), np.sin(angles))
        return values @ self.mixing.T

    def evaluate_ring(self, theta: float, phi: np.ndarray) -> np.ndarray:
        """Basis matrix (len(phi), 2n+1) along one colatitude ring"""
        rows = assoc_legendre_rows(self.degree, np.array([float(theta)]))
        angles = np.outer(np.asarray(phi, dtype=float), self.orders)
        rows = np.broadcast_to(rows, angles.shape)
        return self._assemble(rows, np.cos(angles), np.sin(angles)) @ self.mixing.T

    def evaluate_with_gradient(self, theta: np.ndarray, phi: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Basis values and orthonormal-frame gradient components

        Returns:
            (values, d/dtheta, (1/sin theta) d/dphi), each (points, 2n+1)
        """
        n = self.degree
        theta = np.atleast_1d(np.asarray(theta, dtype=float)).ravel()
        phi = np.atleast_1d(np.asarray(phi, dtype=float)).ravel()
        clamped = np.clip(theta, POLE_CLAMP, np.pi - POLE_CLAMP)
        rows, drows = assoc_legendre_rows(n, clamped, derivative=True)
        angles = np.outer(phi, self.orders)
        cos_k, sin_k = np.cos(angles), np.sin(angles)

        values = self._assemble(rows, cos_k, sin_k)
        d_theta = self._assemble(drows, cos_k, sin_k)

        scaled = rows * (self.orders / np.sin(clamped)[:, None])
        d_phi = np.zeros_like(values)
        d_phi[:, n + 1:] = -np.sqrt(2.0) * scaled[:, 1:] * sin_k[:, 1:]
        d_phi[:, :n] = (np.sqrt(2.0) * scaled[:, 1:] * cos_k[:, 1:])[:, ::-1]
        return values @ self.mixing.T, d_theta @ self.mixing.T, d_phi @ self.mixing.T

    def synthesize_grid(self, coeffs: np.ndarray, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
        """
        Sum_k coeffs_k Y_k on the product grid theta x phi

        Separable: Legendre rows per colatitude times trigonometric columns per
        longitude, so the cost is two small matrix products.
        """
        n = self.degree
        std = self.to_standard(coeffs)
        rows = assoc_legendre_rows(n, theta)
        cos_weights = np.empty(n + 1)
        sin_weights = np.zeros(n + 1)
        cos_weights[0] = std[n]
        cos_weights[1:] = np.sqrt(2.0) * std[n + 1:]
        sin_weights[1:] = np.sqrt(2.0) * std[:n][::-1]
        angles = np.outer(self.orders, np.asarray(phi, dtype=float))
        return (rows * cos_weights) @ np.cos(angles) + (rows * sin_weights) @ np.sin(angles)

    def synthesize_points(self, coeffs: np.ndarray, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
        """Sum_k coeffs_k Y_k at scattered points, evaluated in bounded chunks"""
        n = self.degree
        std = self.to_standard(coeffs)
        theta = np.atleast_1d(np.asarray(theta, dtype=float)).ravel()
        phi = np.atleast_1d(np.asarray(phi, dtype=float)).ravel()
        cos_weights = np.empty(n + 1)
        sin_weights = np.zeros(n + 1)
        cos_weights[0] = std[n]
        cos_weights[1:] = np.sqrt(2.0) * std[n + 1:]
        sin_weights[1:] = np.sqrt(2.0) * std[:n][::-1]

        out = np.empty(theta.size)
        for start in range(0, theta.size, settings.EVAL_CHUNK):
            stop = start + settings.EVAL_CHUNK
            rows = assoc_legendre_rows(n, theta[start:stop])
            angles = np.outer(phi[start:stop], self.orders)
            out[start:stop] = np.sum(rows * (cos_weights * np.cos(angles) + sin_weights * np.sin(angles)), axis=1)
        return out


@lru_cache(maxsize=64)
def build_basis(n: int, kind: BasisKind = BasisKind.STANDARD) -> HarmonicBasis:
    """Get or create the (immutable) basis of degree n"""
    return HarmonicBasis(n, BasisKind(kind))


def eval_basis(basis: HarmonicBasis, p: SpherePoint) -> np.ndarray:
    """(Y_{-n}(p), ..., Y_n(p))"""
    return basis.evaluate(np.array([p.theta]), np.array([p.phi]))[0]


def two_point(n: int, theta_angle: float) -> float:
    """Normalized two-point function P_n(cos angle)"""
    if not 0.0 <= theta_angle <= np.pi:
        raise DomainError(f"angle {theta_angle} outside [0, pi]")
    return legendre_p(n, float(np.clip(np.cos(theta_angle), -1.0, 1.0)))
