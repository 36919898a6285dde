"""Special functions: Legendre polynomials, normalized associated Legendre
functions, Bessel J0 and the Hilb-type asymptotic residual

Conventions
-----------
N_n^k denotes the normalized associated Legendre function such that the
real basis sqrt(2) N_n^k(cos t) {cos, sin}(k p), together with
N_n^0(cos t) = sqrt(2n+1) P_n(cos t), is orthonormal for the uniform
probability measure on the sphere. No Condon-Shortley phase.

J0 is the standard Bessel function (wavenumber 1). Writing the circle
average with e(t) = exp(2 pi i t) rescales the argument by 2 pi, which is
not the convention under which the Hilb asymptotic holds.
"""

import logging
from typing import Dict, Sequence, Tuple, Union

import numpy as np
from scipy import special

from app.utils.config import settings
from app.utils.errors import DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]

# First positive zero of J0
J0_FIRST_ZERO = float(special.jn_zeros(0, 1)[0])

HILB_PREFACTORS = {
    "linear": lambda theta: theta / np.sin(theta),
    "sqrt": lambda theta: np.sqrt(theta / np.sin(theta)),
}


def _check_abscissa(x: np.ndarray) -> None:
    if np.any(~np.isfinite(x)) or np.any(np.abs(x) > 1.0):
        raise DomainError("Legendre abscissa must lie in [-1, 1]")


class LegendreTable:
    """Legendre polynomials P_0..P_{n_max} evaluated at a set of abscissae"""

    def __init__(self, degree_max: int, x: ArrayLike):
        if degree_max < 0:
            raise DomainError(f"degree must be non-negative, got {degree_max}")
        self.degree_max = int(degree_max)
        self.abscissae = np.atleast_1d(np.asarray(x, dtype=float))
        _check_abscissa(self.abscissae)
        self.values = self._recurrence()

    def _recurrence(self) -> np.ndarray:
        x = self.abscissae
        values = np.empty((self.degree_max + 1, x.size))
        values[0] = 1.0
        if self.degree_max >= 1:
            values[1] = x
        for l in range(2, self.degree_max + 1):
            values[l] = ((2.0 * l - 1.0) * x * values[l - 1] - (l - 1.0) * values[l - 2]) / l
        return values

    def __getitem__(self, n: int) -> np.ndarray:
        return self.values[n]


def legendre_p(n: int, x: ArrayLike) -> Union[float, np.ndarray]:
    """P_n(x) by the three-term recurrence; scalar in, scalar out"""
    table = LegendreTable(n, x)
    out = table[n]
    return float(out[0]) if np.ndim(x) == 0 else out


def _recurrence_coefficients(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """a[l, m], b[l, m] of the column recurrence for m <= l - 2"""
    l = np.arange(n + 1, dtype=float)[:, None]
    m = np.arange(n + 1, dtype=float)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.sqrt((2 * l - 1) * (2 * l + 1) / ((l - m) * (l + m)))
        b = np.sqrt((2 * l + 1) * (l + m - 1) * (l - m - 1) / ((l - m) * (l + m) * (2 * l - 3)))
    valid = m <= l - 2
    return np.where(valid, a, 0.0), np.where(valid, b, 0.0)


def assoc_legendre_rows(
    n: int, theta: ArrayLike, derivative: bool = False
) -> Union[np.ndarray, Tuple[np.ndarray, np.ndarray]]:
    """
    N_n^k(cos theta) for every order k = 0..n

    The fully normalized column recurrence is advanced in the degree for all
    orders at once; normalization lives in the recurrence coefficients, so
    no factorial is ever formed. Sectorial seeds underflow to zero only where
    the true value is below the double range.

    Args:
        n: degree
        theta: colatitudes (any shape, flattened)
        derivative: also return d/dtheta of every row

    Returns:
        array (points, n+1), and optionally its theta-derivative
    """
    if n < 0:
        raise DomainError(f"degree must be non-negative, got {n}")
    theta = np.atleast_1d(np.asarray(theta, dtype=float)).ravel()
    x = np.cos(theta)
    u = np.sin(theta)

    # Sectorial values Pbar_mm (geodesy normalization, sqrt(2) included for m > 0)
    m = np.arange(1, n + 1, dtype=float)
    growth = np.ones((x.size, n + 1))
    if n >= 1:
        factors = np.sqrt((2 * m + 1) / (2 * m))
        factors[0] = np.sqrt(3.0)
        growth[:, 1:] = u[:, None] * factors[None, :]
    sectorial = np.cumprod(growth, axis=1)

    a, b = _recurrence_coefficients(n)
    prev2 = np.zeros((x.size, n + 1))
    prev1 = np.zeros((x.size, n + 1))
    prev1[:, 0] = 1.0
    for l in range(1, n + 1):
        cur = np.zeros((x.size, n + 1))
        if l >= 2:
            cur[:, : l - 1] = a[l, : l - 1] * x[:, None] * prev1[:, : l - 1] - b[l, : l - 1] * prev2[:, : l - 1]
        cur[:, l - 1] = x * np.sqrt(2.0 * l + 1.0) * sectorial[:, l - 1]
        cur[:, l] = sectorial[:, l]
        prev2, prev1 = prev1, cur

    # prev1 holds degree n, prev2 degree n-1
    scale = np.full(n + 1, 1.0 / np.sqrt(2.0))
    scale[0] = 1.0
    rows = prev1 * scale
    if not derivative:
        return rows

    orders = np.arange(n + 1, dtype=float)
    if n >= 1:
        f = np.sqrt((n ** 2 - orders ** 2) * (2.0 * n + 1.0) / (2.0 * n - 1.0))
    else:
        f = np.zeros(1)
    lower = prev2 * scale if n >= 1 else np.zeros_like(rows)
    safe_u = np.where(np.abs(u) < np.finfo(float).eps, np.finfo(float).eps, u)
    drows = (n * x[:, None] * rows - f[None, :] * lower) / safe_u[:, None]
    return rows, drows


def assoc_legendre_norm(n: int, k: int, x: ArrayLike) -> Union[float, np.ndarray]:
    """Normalized associated Legendre value N_n^k(x)"""
    if k < 0 or k > n:
        raise DomainError(f"order k={k} outside 0..{n}")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    _check_abscissa(xs)
    rows = assoc_legendre_rows(n, np.arccos(xs))
    out = rows[:, k]
    return float(out[0]) if np.ndim(x) == 0 else out


def bessel_j0(t: ArrayLike) -> Union[float, np.ndarray]:
    """Standard Bessel function J0 (Cephes rational and Hankel-asymptotic kernels)"""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(~np.isfinite(t_arr)):
        raise DomainError("bessel_j0 is defined here for t >= 0")
    out = special.j0(t_arr)
    return float(out) if np.ndim(t) == 0 else out


def bessel_j1(t: ArrayLike) -> Union[float, np.ndarray]:
    t_arr = np.asarray(t, dtype=float)
    out = special.j1(t_arr)
    return float(out) if np.ndim(t) == 0 else out


def hilb_residual(n: int, theta: ArrayLike, prefactor: str = None) -> Union[float, np.ndarray]:
    """
    F = P_n(cos theta) - pref(theta) J0((n + 1/2) theta)

    Args:
        n: degree
        theta: angle(s) in (0, pi/2]
        prefactor: "sqrt" for (theta/sin theta)^(1/2), "linear" for theta/sin theta
    """
    prefactor = prefactor or settings.HILB_PREFACTOR
    if prefactor not in HILB_PREFACTORS:
        raise DomainError(f"unknown Hilb prefactor '{prefactor}'")
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if np.any(th <= 0) or np.any(th > np.pi / 2 + 1e-15):
        raise DomainError("hilb_residual needs 0 < theta <= pi/2")
    th = np.minimum(th, np.pi / 2)
    pn = LegendreTable(n, np.cos(th))[n]
    residual = pn - HILB_PREFACTORS[prefactor](th) * special.j0((n + 0.5) * th)
    return float(residual[0]) if np.ndim(theta) == 0 else residual


def hilb_envelope_ratio(n: int, prefactor: str, samples: int = 4000) -> float:
    """max over theta in [10/n, pi/2] of |F| / (theta^(1/2) n^(-3/2))"""
    theta = np.linspace(10.0 / n, np.pi / 2, samples)
    residual = np.abs(hilb_residual(n, theta, prefactor))
    return float(np.max(residual / (np.sqrt(theta) * n ** -1.5)))


def select_hilb_prefactor(degrees: Sequence[int] = (50, 100, 200)) -> Tuple[str, Dict[str, list]]:
    """
    Pick the prefactor whose envelope constant is uniform in n

    For each candidate the envelope ratio is computed at every degree; the
    winner is the candidate with the smallest max/min spread.

    Returns:
        (winner, {prefactor: [ratio per degree]})
    """
    ratios = {name: [hilb_envelope_ratio(n, name) for n in degrees] for name in HILB_PREFACTORS}
    spreads = {name: max(values) / min(values) for name, values in ratios.items()}
    winner = min(spreads, key=spreads.get)
    logger.info(f"Hilb prefactor oracle: spreads {spreads}, selected '{winner}'")
    return winner, ratios
