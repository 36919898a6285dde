"""Random wave model: truncated plane-wave samples of the planar limit field"""

import logging
import math
from typing import Callable, Sequence, Tuple

import numpy as np

from app.services.nodal import CENSUS_MIN_OVERSAMPLE, NodalCensus, census_planar
from app.utils.config import settings
from app.utils.errors import ConfigurationError
from app.utils.seeding import generator, trial_seed

logger = logging.getLogger(__name__)

MIN_WAVES = 64
MIN_RADIUS = 5.0


class RwmField:
    """
    F(x) = sqrt(2/M) Sum_j cos(<xi_j, x> + phi_j)

    Directions xi_j uniform on the unit circle and phases uniform on
    [0, 2 pi). Variance is exactly 1 at every point and the covariance tends
    to J0(|x - y|) as M grows.
    """

    def __init__(self, directions: np.ndarray, phases: np.ndarray):
        self.angles = np.array(directions, dtype=float)
        self.phases = np.array(phases, dtype=float)
        self.angles.flags.writeable = False
        self.phases.flags.writeable = False
        self.n_waves = self.angles.size
        self.amplitude = math.sqrt(2.0 / self.n_waves)
        self._xi = np.stack([np.cos(self.angles), np.sin(self.angles)], axis=0)

    def __call__(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        flat1, flat2 = x1.ravel(), x2.ravel()
        out = np.empty(flat1.size)
        for start in range(0, flat1.size, settings.EVAL_CHUNK):
            stop = start + settings.EVAL_CHUNK
            phase = np.outer(flat1[start:stop], self._xi[0]) + np.outer(flat2[start:stop], self._xi[1])
            out[start:stop] = np.cos(phase + self.phases).sum(axis=1)
        return (self.amplitude * out).reshape(x1.shape)


def sample_rwm(M: int = None, seed: int = 0) -> RwmField:
    M = settings.RWM_WAVES if M is None else int(M)
    if M < MIN_WAVES:
        raise ConfigurationError(f"RWM truncation needs M >= {MIN_WAVES}, got {M}")
    rng = generator(seed)
    return RwmField(rng.uniform(0.0, 2 * np.pi, M), rng.uniform(0.0, 2 * np.pi, M))


def census_rwm(field: Callable[[np.ndarray, np.ndarray], np.ndarray], R: float, q: int = None) -> int:
    """Number of nodal domains of F fully inside B(R)"""
    return rwm_census(field, R, q).count_contained


def rwm_census(field: Callable[[np.ndarray, np.ndarray], np.ndarray], R: float, q: int = None) -> NodalCensus:
    """Full disk census of a wavenumber-1 planar field"""
    q = CENSUS_MIN_OVERSAMPLE if q is None else int(q)
    if R < MIN_RADIUS:
        raise ConfigurationError(f"RWM census needs R >= {MIN_RADIUS}, got {R}")
    if q < CENSUS_MIN_OVERSAMPLE:
        raise ConfigurationError(f"RWM census needs q >= {CENSUS_MIN_OVERSAMPLE}, got {q}")
    return census_planar(field, R, q)


def empirical_covariance(
    separations: Sequence[Tuple[float, float]],
    samples: int,
    M: int = None,
    seed: int = 0,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Monte Carlo E[F(0) F(d)] over independent fields, one per sample

    Returns:
        (means, standard errors), one entry per separation vector d
    """
    d = np.asarray(separations, dtype=float).reshape(-1, 2)
    products = np.empty((samples, d.shape[0]))
    for i in range(samples):
        field = sample_rwm(M, trial_seed(seed, i, "rwm-covariance"))
        at_origin = field(np.zeros(1), np.zeros(1))[0]
        products[i] = at_origin * field(d[:, 0], d[:, 1])
    means = products.mean(axis=0)
    ses = products.std(axis=0, ddof=1) / np.sqrt(samples)
    return means, ses


def origin_values(samples: int, M: int = None, seed: int = 0) -> np.ndarray:
    """F(0) over independent fields"""
    return np.array([
        sample_rwm(M, trial_seed(seed, i, "rwm-origin"))(np.zeros(1), np.zeros(1))[0]
        for i in range(samples)
    ])
