"""Statistics helpers shared by the experiments"""

from typing import Dict, Sequence, Tuple

import numpy as np
from scipy import stats

from app.utils.config import settings
from app.utils.errors import StatisticsError
from app.utils.seeding import generator


def mean_se(values: Sequence[float]) -> Tuple[float, float]:
    """Sample mean and its standard error (ddof=1)"""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise StatisticsError(f"need at least 2 values for a standard error, got {values.size}")
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size))


def normal_ci(mean: float, se: float, level: float = None) -> Tuple[float, float]:
    """Two-sided normal interval; wider for higher levels"""
    level = settings.CONFIDENCE_LEVEL if level is None else level
    z = stats.norm.ppf(0.5 + level / 2.0)
    return mean - z * se, mean + z * se


def _canonical_order(a: np.ndarray, b: np.ndarray) -> bool:
    """True when (a, b) is already in canonical order"""
    key_a = (a.size, a.tobytes())
    key_b = (b.size, b.tobytes())
    return key_a <= key_b


def bootstrap_mean_difference(
    a: Sequence[float],
    b: Sequence[float],
    seed: int,
    resamples: int = None,
    level: float = None,
) -> Tuple[float, float, float]:
    """
    Percentile bootstrap CI for mean(a) - mean(b)

    Resample indices are drawn for the two samples in a canonical order, so
    swapping the arguments mirrors the interval and negates the difference.

    Returns:
        (difference, ci_low, ci_high)
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    resamples = settings.BOOTSTRAP_RESAMPLES if resamples is None else resamples
    level = settings.CONFIDENCE_LEVEL if level is None else level
    if a.size < 2 or b.size < 2:
        raise StatisticsError("bootstrap needs at least 2 values per sample")

    swapped = not _canonical_order(a, b)
    first, second = (b, a) if swapped else (a, b)

    rng = generator(seed)
    idx_first = rng.integers(0, first.size, size=(resamples, first.size))
    idx_second = rng.integers(0, second.size, size=(resamples, second.size))
    diffs = first[idx_first].mean(axis=1) - second[idx_second].mean(axis=1)

    tail = 100.0 * (1.0 - level) / 2.0
    low, high = np.percentile(diffs, [tail, 100.0 - tail])
    difference = float(first.mean() - second.mean())
    if swapped:
        return -difference, float(-high), float(-low)
    return difference, float(low), float(high)


def welch_statistic(a: Sequence[float], b: Sequence[float]) -> float:
    result = stats.ttest_ind(np.asarray(a, float), np.asarray(b, float), equal_var=False)
    return float(result.statistic)


def fit_finite_size(degrees: Sequence[int], means: Sequence[float], ses: Sequence[float]) -> Dict[str, float]:
    """
    Weighted least squares fit of mean/n^2 = c + b/n

    Returns the intercept c, slope b, their standard errors and the
    residuals in degree order.
    """
    degrees = np.asarray(degrees, dtype=float)
    y = np.asarray(means, dtype=float)
    se = np.asarray(ses, dtype=float)
    if degrees.size < 2:
        raise StatisticsError("finite-size fit needs at least two degrees")

    design = np.column_stack([np.ones_like(degrees), 1.0 / degrees])
    weights = 1.0 / np.maximum(se, 1e-12) ** 2
    wd = design * weights[:, None]
    normal = design.T @ wd
    beta = np.linalg.solve(normal, wd.T @ y)
    residuals = y - design @ beta

    if degrees.size > 2:
        # Scale by the reduced chi-square so a poor fit widens the interval
        dof = degrees.size - 2
        scale = max(1.0, float(np.sum(weights * residuals ** 2)) / dof)
    else:
        scale = 1.0
    cov = np.linalg.inv(normal) * scale
    return {
        "c": float(beta[0]),
        "b": float(beta[1]),
        "c_se": float(np.sqrt(cov[0, 0])),
        "b_se": float(np.sqrt(cov[1, 1])),
        "residuals": residuals.tolist(),
    }


def residual_trend_pvalue(degrees: Sequence[int], residuals: Sequence[float]) -> float:
    """
    Sign test for a systematic trend of residuals against 1/n

    Counts sign agreements between consecutive residual differences and the
    direction of 1/n; a two-sided binomial test against 1/2.
    """
    order = np.argsort(1.0 / np.asarray(degrees, dtype=float))
    r = np.asarray(residuals, dtype=float)[order]
    steps = np.sign(np.diff(r))
    steps = steps[steps != 0]
    if steps.size == 0:
        return 1.0
    ups = int(np.sum(steps > 0))
    return float(stats.binomtest(ups, steps.size, 0.5).pvalue)


def ks_normal(samples: Sequence[float]) -> float:
    """KS distance to the standard normal CDF"""
    return float(stats.kstest(np.asarray(samples, dtype=float), "norm").statistic)


def ks_two_sample(a: Sequence[float], b: Sequence[float]) -> float:
    return float(stats.ks_2samp(np.asarray(a, dtype=float), np.asarray(b, dtype=float)).statistic)
