"""Monte Carlo campaigns over the random field ensemble

Every campaign is split in two halves: a trial runner that produces
TrialRecords (or a scalar report for non-count experiments) and a
summarizer that turns those into a report. The summarizers are the only
place statistics are computed, so a replay from stored records reproduces
the original summary exactly.
"""

import logging
import math
import time
from functools import partial
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.services.basis import NORTH_POLE, BasisKind, SpherePoint, build_basis, eval_basis, from_unit_vectors, uniform_points
from app.services.ensemble import (
    GAUSSIAN,
    GEODESIC_MARGIN,
    CoefficientDistribution,
    DistributionKind,
    PatchSpec,
    exp_map,
    random_field,
    sample_coefficients,
)
from app.services.nodal import build_patch_grid, build_sphere_grid, census_global, census_patch
from app.services.rwm import rwm_census, sample_rwm
from app.services.specfn import J0_FIRST_ZERO, bessel_j0, bessel_j1
from app.utils import stats
from app.utils.config import settings
from app.utils.errors import ConfigurationError, DomainError, StatisticsError
from app.utils.pool import run_trials
from app.utils.seeding import trial_generator, trial_seed

logger = logging.getLogger(__name__)

# Envelopes for the Weyl-normalized constant E[N(f_n)] / n^2
CNS_LOWER_BOUND = 1.39e-4
PLEIJEL_BOUND = (2.0 / J0_FIRST_ZERO) ** 2
BOGOMOLNY_SCHMIT = (3.0 * math.sqrt(3.0) - 5.0) / math.pi

MIN_CNS_TRIALS = 50
MIN_UNIVERSALITY_TRIALS = 200
MIN_CLT_SAMPLES = 1000
SMALL_DEGREE = 20
GAUSSIAN_CONTROL_SAMPLES = 20_000
FD_STEP = 1e-4

STANDARD_POLE_ATOMS = (-1.0, 1.0)
ROTATED_POLE_ATOMS = (-math.sqrt(2.0), 0.0, math.sqrt(2.0))


class Check(BaseModel):
    """One machine-readable acceptance criterion"""

    model_config = ConfigDict(populate_by_name=True)

    name: str
    passed: bool = Field(..., alias="pass")
    value: Optional[float] = None
    threshold: Optional[float] = None


def make_check(name: str, passed: bool, value: float = None, threshold: float = None) -> Check:
    return Check(
        name=name,
        passed=bool(passed),
        value=None if value is None else float(value),
        threshold=None if threshold is None else float(threshold),
    )


class SummaryEntry(BaseModel):
    """Per-experiment object of summary.json"""

    estimate: Optional[float] = None
    se: Optional[float] = None
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None
    n_trials: int = 0
    checks: List[Check] = Field(default_factory=list)
    details: Dict[str, Any] = Field(default_factory=dict)


class TrialRecord(BaseModel):
    """One realization of one campaign"""

    config_hash: str = Field(..., description="Hash of the run configuration")
    experiment: str = Field(..., description="Experiment name")
    degree: Optional[int] = Field(None, description="Degree n; empty for planar trials")
    dist: str = Field(..., description="Coefficient law or planar radius label")
    trial_index: int = Field(..., description="Unique index within the run")
    seed: int = Field(..., description="Derived 64-bit trial seed")
    count_total: Optional[int] = None
    count_contained: Optional[int] = None
    length_estimate: Optional[float] = None
    runtime_ms: Optional[float] = None


def _elapsed_ms(start: float) -> Optional[float]:
    return round((time.perf_counter() - start) * 1000.0, 3) if settings.RECORD_RUNTIME else None


def _sphere_trial(
    index: int,
    experiment: str,
    n: int,
    dist: CoefficientDistribution,
    stream: str,
    master_seed: int,
    grid,
    config_hash: str,
    index_offset: int,
    length_circles: int,
) -> TrialRecord:
    seed = trial_seed(master_seed, index, stream)
    start = time.perf_counter()
    field = random_field(n, dist, seed)
    census = census_global(field, grid, length_circles=length_circles, seed=seed)
    record = TrialRecord(
        config_hash=config_hash,
        experiment=experiment,
        degree=n,
        dist=dist.label,
        trial_index=index + index_offset,
        seed=seed,
        count_total=census.count_total,
        length_estimate=census.length_estimate,
        runtime_ms=_elapsed_ms(start),
    )
    logger.debug(f"{experiment} n={n} trial {record.trial_index}: {census.count_total} domains")
    return record


def run_sphere_trials(
    experiment: str,
    n: int,
    dist: CoefficientDistribution,
    trials: int,
    master_seed: int,
    stream: str,
    q: int = None,
    threads: int = None,
    config_hash: str = "",
    index_offset: int = 0,
    length_circles: int = 0,
) -> List[TrialRecord]:
    """Global censuses of independent realizations, in trial order"""
    grid = build_sphere_grid(n, q)
    worker = partial(
        _sphere_trial,
        experiment=experiment,
        n=n,
        dist=dist,
        stream=stream,
        master_seed=master_seed,
        grid=grid,
        config_hash=config_hash,
        index_offset=index_offset,
        length_circles=length_circles,
    )
    return run_trials(worker, range(trials), threads)


# ---------------------------------------------------------------------------
# Nodal count constant
# ---------------------------------------------------------------------------


class CnsEstimate(BaseModel):
    """Per-degree normalized counts and the extrapolated constant"""

    dist: str
    degrees: List[int]
    means: List[float] = Field(..., description="Mean count / n^2 per degree")
    ses: List[float]
    trials: List[int]
    c_hat: float = Field(..., description="Extrapolated E[N] / n^2")
    c_hat_se: float
    ci_low: float
    ci_high: float
    slope: float = Field(..., description="Finite-size coefficient b of c + b/n")
    c_hat_over_4pi: float = Field(..., description="Planar density per unit area at wavenumber 1")
    residual_trend_p: Optional[float] = None
    checks: List[Check] = Field(default_factory=list)

    def summary_entry(self) -> SummaryEntry:
        return SummaryEntry(
            estimate=self.c_hat,
            se=self.c_hat_se,
            ci_low=self.ci_low,
            ci_high=self.ci_high,
            n_trials=sum(self.trials),
            checks=self.checks,
            details={
                "dist": self.dist,
                "degrees": self.degrees,
                "means": self.means,
                "ses": self.ses,
                "slope": self.slope,
                "c_hat_over_4pi": self.c_hat_over_4pi,
                "residual_trend_p": self.residual_trend_p,
            },
        )


def run_cns_trials(
    degrees: Sequence[int],
    dist: CoefficientDistribution,
    trials: int,
    seed: int,
    q: int = None,
    threads: int = None,
    config_hash: str = "",
) -> List[TrialRecord]:
    if trials < MIN_CNS_TRIALS:
        raise StatisticsError(f"estimate_cns needs at least {MIN_CNS_TRIALS} trials per degree, got {trials}")
    records = []
    for n in degrees:
        logger.info(f"cns: degree {n}, {trials} trials of {dist.label}")
        records.extend(
            run_sphere_trials("cns", n, dist, trials, seed, f"cns:{n}", q, threads, config_hash,
                              index_offset=len(records))
        )
    return records


def summarize_cns(records: Sequence[TrialRecord], level: float = None) -> CnsEstimate:
    """Weighted fit of mean(count)/n^2 = c + b/n over the degree ladder"""
    degrees = sorted({r.degree for r in records})
    if not degrees:
        raise StatisticsError("no cns records to summarize")
    means, ses, counts = [], [], []
    for n in degrees:
        values = [r.count_total / n ** 2 for r in records if r.degree == n]
        mean, se = stats.mean_se(values)
        means.append(mean)
        ses.append(se)
        counts.append(len(values))

    if len(degrees) >= 2:
        fit = stats.fit_finite_size(degrees, means, ses)
        c_hat, c_se, slope = fit["c"], fit["c_se"], fit["b"]
        residuals = fit["residuals"]
    else:
        c_hat, c_se, slope = means[0], ses[0], 0.0
        residuals = []
    ci_low, ci_high = stats.normal_ci(c_hat, c_se, level)
    trend_p = stats.residual_trend_pvalue(degrees, residuals) if len(degrees) >= 3 else None

    checks = [
        make_check("cns_lower_bound", c_hat > CNS_LOWER_BOUND, c_hat, CNS_LOWER_BOUND),
        make_check("pleijel_upper_bound", c_hat < PLEIJEL_BOUND, c_hat, PLEIJEL_BOUND),
        make_check("bogomolny_schmit_factor_2", 0.5 <= c_hat / BOGOMOLNY_SCHMIT <= 2.0, c_hat, BOGOMOLNY_SCHMIT),
    ]
    if trend_p is not None:
        checks.append(make_check("fit_residuals_without_trend", trend_p > 0.05, trend_p, 0.05))

    return CnsEstimate(
        dist=records[0].dist,
        degrees=degrees,
        means=means,
        ses=ses,
        trials=counts,
        c_hat=c_hat,
        c_hat_se=c_se,
        ci_low=ci_low,
        ci_high=ci_high,
        slope=slope,
        c_hat_over_4pi=c_hat / (4.0 * math.pi),
        residual_trend_p=trend_p,
        checks=checks,
    )


def estimate_cns(
    degrees: Sequence[int],
    dist: CoefficientDistribution,
    trials: int,
    seed: int,
    q: int = None,
    threads: int = None,
) -> CnsEstimate:
    """Monte Carlo estimate of the constant in E[N(f_n)] = c n^2 (1 + o(1))"""
    return summarize_cns(run_cns_trials(degrees, dist, trials, seed, q, threads))


# ---------------------------------------------------------------------------
# Universality
# ---------------------------------------------------------------------------


class UniversalityReport(BaseModel):
    """Two-sample comparison of count / n^2 between coefficient laws"""

    n: int
    dist_a: str
    dist_b: str
    trials_a: int
    trials_b: int
    mean_a: float
    mean_b: float
    se_a: float
    se_b: float
    pooled_se: float
    welch: float
    difference: float
    ci_low: float
    ci_high: float
    consistent: bool = Field(..., description="Zero lies in the bootstrap interval")
    warning: Optional[str] = None
    checks: List[Check] = Field(default_factory=list)

    def summary_entry(self) -> SummaryEntry:
        return SummaryEntry(
            estimate=self.difference,
            se=self.pooled_se,
            ci_low=self.ci_low,
            ci_high=self.ci_high,
            n_trials=self.trials_a + self.trials_b,
            checks=self.checks,
            details=self.model_dump(exclude={"checks", "difference", "pooled_se", "ci_low", "ci_high"}),
        )


def arm_streams(prefix: str, label_a: str, label_b: str) -> Tuple[str, str]:
    """
    Streams keyed by law, not by arm position

    Swapping the laws therefore swaps the samples, and a law compared
    with itself still gets two independent arms.
    """
    stream_a = f"{prefix}:{label_a}"
    stream_b = f"{prefix}:{label_b}"
    if stream_a == stream_b:
        stream_b += ":split"
    return stream_a, stream_b


def _small_degree_warning(n: int) -> Optional[str]:
    if n < SMALL_DEGREE:
        return f"n={n} is below {SMALL_DEGREE}; o(1) corrections dominate the comparison"
    return None


def run_universality_trials(
    dist_a: CoefficientDistribution,
    dist_b: CoefficientDistribution,
    n: int,
    trials: int,
    seed: int,
    q: int = None,
    threads: int = None,
    config_hash: str = "",
) -> List[TrialRecord]:
    if trials < MIN_UNIVERSALITY_TRIALS:
        raise StatisticsError(f"universality_test needs at least {MIN_UNIVERSALITY_TRIALS} trials per arm, got {trials}")
    warning = _small_degree_warning(n)
    if warning:
        logger.warning(warning)
    stream_a, stream_b = arm_streams("universality", dist_a.label, dist_b.label)
    logger.info(f"universality: n={n}, {dist_a.label} vs {dist_b.label}, {trials} trials per arm")
    records = run_sphere_trials("universality", n, dist_a, trials, seed, stream_a, q, threads, config_hash)
    records += run_sphere_trials("universality", n, dist_b, trials, seed, stream_b, q, threads, config_hash,
                                 index_offset=trials)
    return records


def compare_samples(a: np.ndarray, b: np.ndarray, seed: int, level: float = None) -> Dict[str, float]:
    """Means, standard errors, Welch statistic and bootstrap CI of mean(a) - mean(b)"""
    mean_a, se_a = stats.mean_se(a)
    mean_b, se_b = stats.mean_se(b)
    difference, low, high = stats.bootstrap_mean_difference(a, b, seed, level=level)
    if np.ptp(a) == 0 and np.ptp(b) == 0:
        welch = 0.0 if mean_a == mean_b else math.copysign(math.inf, mean_a - mean_b)
    else:
        welch = stats.welch_statistic(a, b)
    return {
        "mean_a": mean_a,
        "mean_b": mean_b,
        "se_a": se_a,
        "se_b": se_b,
        "pooled_se": math.sqrt(se_a ** 2 + se_b ** 2),
        "welch": welch,
        "difference": difference,
        "ci_low": low,
        "ci_high": high,
    }


def summarize_universality(records: Sequence[TrialRecord], trials: int, seed: int,
                           level: float = None) -> UniversalityReport:
    arm_a = [r for r in records if r.trial_index < trials]
    arm_b = [r for r in records if r.trial_index >= trials]
    if not arm_a or not arm_b:
        raise StatisticsError("universality records must contain both arms")
    n = arm_a[0].degree
    a = np.array([r.count_total / r.degree ** 2 for r in arm_a])
    b = np.array([r.count_total / r.degree ** 2 for r in arm_b])
    result = compare_samples(a, b, trial_seed(seed, 0, "universality-bootstrap"), level)
    consistent = result["ci_low"] <= 0.0 <= result["ci_high"]
    return UniversalityReport(
        n=n,
        dist_a=arm_a[0].dist,
        dist_b=arm_b[0].dist,
        trials_a=len(arm_a),
        trials_b=len(arm_b),
        consistent=consistent,
        warning=_small_degree_warning(n),
        checks=[make_check("zero_in_ci", consistent, result["difference"], 0.0)],
        **result,
    )


def universality_test(
    dist_a: CoefficientDistribution,
    dist_b: CoefficientDistribution,
    n: int,
    trials: int,
    seed: int,
    q: int = None,
    threads: int = None,
) -> UniversalityReport:
    """Is the mean normalized nodal count the same under both coefficient laws?"""
    records = run_universality_trials(dist_a, dist_b, n, trials, seed, q, threads)
    return summarize_universality(records, trials, seed)


# ---------------------------------------------------------------------------
# Pointwise CLT
# ---------------------------------------------------------------------------


def pointwise_samples(n: int, dist: CoefficientDistribution, count: int, seed: int) -> np.ndarray:
    """f_n(x_i) with fresh coefficients and an independent uniform x_i per sample"""
    basis = build_basis(n)
    coeffs = np.stack([
        sample_coefficients(dist, n, trial_seed(seed, i, f"clt:{n}:{dist.label}")) for i in range(count)
    ])
    theta, phi = uniform_points(trial_generator(seed, n, "clt-points"), count)
    values = np.empty(count)
    for start in range(0, count, settings.EVAL_CHUNK):
        stop = start + settings.EVAL_CHUNK
        rows = basis.evaluate(theta[start:stop], phi[start:stop])
        values[start:stop] = np.einsum("ij,ij->i", rows, coeffs[start:stop])
    return values / math.sqrt(2 * n + 1)


def clt_diagnostic(n: int, dist: CoefficientDistribution, n_samples: int, seed: int) -> float:
    """KS distance between pointwise values of f_n and the standard normal"""
    if n_samples < MIN_CLT_SAMPLES:
        raise StatisticsError(f"clt_diagnostic needs at least {MIN_CLT_SAMPLES} samples, got {n_samples}")
    return stats.ks_normal(pointwise_samples(n, dist, n_samples, seed))


class CltReport(BaseModel):
    dist: str
    degrees: List[int]
    samples: int
    ks: List[float]
    gaussian_ks: List[float] = Field(..., description="Exactly normal control arm")
    checks: List[Check] = Field(default_factory=list)

    def summary_entry(self) -> SummaryEntry:
        return SummaryEntry(
            estimate=self.ks[-1],
            n_trials=self.samples * len(self.degrees),
            checks=self.checks,
            details={"dist": self.dist, "degrees": self.degrees, "ks": self.ks, "gaussian_ks": self.gaussian_ks},
        )


def run_clt(degrees: Sequence[int], dist: CoefficientDistribution, n_samples: int, seed: int) -> CltReport:
    degrees = sorted(degrees)
    ks = [clt_diagnostic(n, dist, n_samples, seed) for n in degrees]
    control = ks if dist.kind is DistributionKind.GAUSSIAN else [
        clt_diagnostic(n, GAUSSIAN, n_samples, seed) for n in degrees
    ]
    logger.info(f"clt: {dist.label} KS {ks}, gaussian control {control}")

    checks = [make_check("gaussian_control_ks_below_0.03", max(control) < 0.03, max(control), 0.03)]
    if dist.kind is not DistributionKind.GAUSSIAN:
        if len(degrees) >= 2:
            decreasing = all(later < earlier for earlier, later in zip(ks, ks[1:]))
            checks.append(make_check("ks_strictly_decreasing", decreasing, ks[-1]))
        checks.append(make_check("ks_below_0.05_at_top_degree", ks[-1] < 0.05, ks[-1], 0.05))
    return CltReport(dist=dist.label, degrees=degrees, samples=n_samples, ks=ks, gaussian_ks=control, checks=checks)


# ---------------------------------------------------------------------------
# Patch covariances
# ---------------------------------------------------------------------------

Pair = Tuple[Tuple[float, float], Tuple[float, float]]


def default_pairs(R: float) -> List[Pair]:
    """Six point pairs in the unit disk; includes the diagonal and a J0 zero"""
    return [
        ((0.0, 0.0), (0.0, 0.0)),
        ((0.0, 0.0), (J0_FIRST_ZERO / R, 0.0)),
        ((-0.3, 0.2), (-0.3 + 0.5 / R, 0.2)),
        ((0.1, -0.4), (0.1, -0.4 + 2.0 / R)),
        ((0.25, 0.25), (0.25 + 3.0 / (R * math.sqrt(2.0)), 0.25 + 3.0 / (R * math.sqrt(2.0)))),
        ((-0.5, -0.5), (0.5, 0.5)),
    ]


def covariance_targets(d: np.ndarray, R: float) -> np.ndarray:
    """
    Limits of E[F F], E[dF/dy1 dF/dy1] and E[dF/dy2 dF/dy2] at separation d

    Derivative covariances are -d^2/dd_i^2 of J0(R|d|), divided by their
    value R^2/2 at d = 0.
    """
    rho = float(np.hypot(d[0], d[1]))
    z = R * rho
    if z < 1e-12:
        return np.array([1.0, 1.0, 1.0])
    j0, j1_over_z = bessel_j0(z), bessel_j1(z) / z
    out = [j0]
    for component in (d[0], d[1]):
        u2 = (component / rho) ** 2
        out.append(2.0 * (j0 * u2 + j1_over_z * (1.0 - 2.0 * u2)))
    return np.array(out)


def patch_points(center: SpherePoint, radius: float, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """exp_x(radius * y) for planar points y (..., 2)"""
    if radius >= GEODESIC_MARGIN:
        raise ConfigurationError(f"patch radius {radius:.3f} is not injective on |y| <= 2")
    return from_unit_vectors(exp_map(center, radius * np.asarray(y, dtype=float)))


def _stencil(pairs: Sequence[Pair]) -> np.ndarray:
    """For each pair endpoint: y, y +- h e1, y +- h e2"""
    offsets = np.array([[0, 0], [FD_STEP, 0], [-FD_STEP, 0], [0, FD_STEP], [0, -FD_STEP]])
    ends = np.array(pairs, dtype=float).reshape(-1, 2)
    return (ends[:, None, :] + offsets[None, :, :]).reshape(-1, 2)


def _covariance_trial(index: int, n: int, R: float, dist: CoefficientDistribution, stencil: np.ndarray,
                      n_pairs: int, seed: int) -> np.ndarray:
    field = random_field(n, dist, trial_seed(seed, index, f"covariance:{n}"))
    theta, phi = uniform_points(trial_generator(seed, index, f"covariance-centre:{n}"), 1)
    center = SpherePoint(theta=float(theta[0]), phi=float(phi[0]))
    values = field(*patch_points(center, R / n, stencil)).reshape(n_pairs, 2, 5)
    grad1 = (values[..., 1] - values[..., 2]) / (2 * FD_STEP)
    grad2 = (values[..., 3] - values[..., 4]) / (2 * FD_STEP)
    scale = R ** 2 / 2.0
    return np.stack([
        values[:, 0, 0] * values[:, 1, 0],
        grad1[:, 0] * grad1[:, 1] / scale,
        grad2[:, 0] * grad2[:, 1] / scale,
    ], axis=1)


class CovarianceReport(BaseModel):
    n: int
    R: float
    dist: str
    trials: int
    pairs: List[List[List[float]]]
    targets: List[List[float]] = Field(..., description="Per pair: value, d/dy1, d/dy2 targets")
    empirical: List[List[float]]
    ses: List[List[float]]
    max_deviation: float
    max_deviation_se: float
    within_3se: float = Field(..., description="Fraction of entries within three standard errors")


def covariance_check(
    n: int,
    R: float,
    dist: CoefficientDistribution,
    pairs: Sequence[Pair],
    trials: int,
    seed: int,
    threads: int = None,
) -> CovarianceReport:
    """Empirical patch covariances of values and first derivatives against J0(R|y1 - y2|)"""
    pairs = [tuple(tuple(float(c) for c in end) for end in pair) for pair in pairs]
    for pair in pairs:
        if any(math.hypot(*end) > 1.0 + 1e-12 for end in pair):
            raise DomainError(f"covariance pair {pair} leaves the unit disk")
    if trials < 2:
        raise StatisticsError("covariance_check needs at least 2 trials")

    worker = partial(_covariance_trial, n=n, R=R, dist=dist, stencil=_stencil(pairs), n_pairs=len(pairs), seed=seed)
    products = np.stack(run_trials(worker, range(trials), threads))
    empirical = products.mean(axis=0)
    ses = products.std(axis=0, ddof=1) / math.sqrt(trials)
    targets = np.stack([covariance_targets(np.subtract(p[0], p[1]), R) for p in pairs])

    deviation = np.abs(empirical - targets)
    worst = np.unravel_index(np.argmax(deviation), deviation.shape)
    logger.info(f"covariance: n={n}, R={R}, max deviation {deviation[worst]:.4f} (SE {ses[worst]:.4f})")
    return CovarianceReport(
        n=n,
        R=R,
        dist=dist.label,
        trials=trials,
        pairs=[[list(end) for end in pair] for pair in pairs],
        targets=targets.tolist(),
        empirical=empirical.tolist(),
        ses=ses.tolist(),
        max_deviation=float(deviation[worst]),
        max_deviation_se=float(ses[worst]),
        within_3se=float(np.mean(deviation <= 3.0 * ses)),
    )


def covariance_trend_check(reports: Sequence[CovarianceReport]) -> Check:
    """Max deviation non-increasing in n within combined three-SE error bars"""
    ordered = sorted(reports, key=lambda r: r.n)
    ok = all(
        b.max_deviation <= a.max_deviation + 3.0 * math.hypot(a.max_deviation_se, b.max_deviation_se)
        for a, b in zip(ordered, ordered[1:])
    )
    return make_check("max_deviation_non_increasing", ok, ordered[-1].max_deviation)


# ---------------------------------------------------------------------------
# Basis dependence at the pole
# ---------------------------------------------------------------------------


def pole_values(n: int, dist: CoefficientDistribution, kind: BasisKind, count: int, seed: int) -> np.ndarray:
    """f_n(north pole) over independent coefficient draws"""
    basis = build_basis(n, kind)
    pole = eval_basis(basis, NORTH_POLE)
    coeffs = np.stack([
        sample_coefficients(dist, n, trial_seed(seed, i, f"demo:{kind.value}:{dist.label}")) for i in range(count)
    ])
    return coeffs @ pole / math.sqrt(2 * n + 1)


def empirical_support(values: np.ndarray, decimals: int = 12) -> Tuple[List[float], List[float]]:
    """Atoms (rounded to absorb last-bit noise) and their frequencies"""
    atoms, counts = np.unique(np.round(values, decimals) + 0.0, return_counts=True)
    return atoms.tolist(), (counts / values.size).tolist()


def _same_support(atoms: Sequence[float], expected: Sequence[float], decimals: int = 12) -> bool:
    return set(np.round(atoms, decimals) + 0.0) == set(np.round(expected, decimals) + 0.0)


class BasisDemoReport(BaseModel):
    n: int
    trials: int
    standard_support: List[float]
    standard_frequencies: List[float]
    rotated_support: List[float]
    rotated_frequencies: List[float]
    gaussian_samples: int
    gaussian_ks: float = Field(..., description="Two-sample KS between bases, Gaussian coefficients")
    checks: List[Check] = Field(default_factory=list)

    def summary_entry(self) -> SummaryEntry:
        return SummaryEntry(
            estimate=self.gaussian_ks,
            n_trials=self.trials,
            checks=self.checks,
            details=self.model_dump(exclude={"checks"}),
        )


def basis_dependence_demo(n: int, trials: int, seed: int) -> BasisDemoReport:
    """
    Pole values under the standard and the pole-rotated-pair basis

    With Rademacher coefficients the law of f_n(pole) depends on the basis:
    a_0 in one case, (a_0 + a_1)/sqrt 2 in the other. The Gaussian control
    arm uses at least GAUSSIAN_CONTROL_SAMPLES draws per basis.
    """
    rademacher = CoefficientDistribution(kind=DistributionKind.RADEMACHER)
    standard = pole_values(n, rademacher, BasisKind.STANDARD, trials, seed)
    rotated = pole_values(n, rademacher, BasisKind.POLE_ROTATED_PAIR, trials, seed)
    std_atoms, std_freq = empirical_support(standard)
    rot_atoms, rot_freq = empirical_support(rotated)

    control = max(trials, GAUSSIAN_CONTROL_SAMPLES)
    ks = stats.ks_two_sample(
        pole_values(n, GAUSSIAN, BasisKind.STANDARD, control, seed),
        pole_values(n, GAUSSIAN, BasisKind.POLE_ROTATED_PAIR, control, seed),
    )
    logger.info(f"demo-basis: n={n}, supports {std_atoms} and {rot_atoms}, gaussian KS {ks:.4f}")
    return BasisDemoReport(
        n=n,
        trials=trials,
        standard_support=std_atoms,
        standard_frequencies=std_freq,
        rotated_support=rot_atoms,
        rotated_frequencies=rot_freq,
        gaussian_samples=control,
        gaussian_ks=ks,
        checks=[
            make_check("standard_support_exact", _same_support(std_atoms, STANDARD_POLE_ATOMS), len(std_atoms), 2),
            make_check("rotated_support_exact", _same_support(rot_atoms, ROTATED_POLE_ATOMS), len(rot_atoms), 3),
            make_check("gaussian_bases_ks_below_0.03", ks < 0.03, ks, 0.03),
        ],
    )


# ---------------------------------------------------------------------------
# Planar constant from the random wave model
# ---------------------------------------------------------------------------


def planar_label(R: float) -> str:
    return f"rwm(R={R:g})"


def _planar_trial(index: int, R: float, M: int, q: int, seed: int, config_hash: str, index_offset: int) -> TrialRecord:
    trial = trial_seed(seed, index, f"rwm:{R:g}")
    start = time.perf_counter()
    census = rwm_census(sample_rwm(M, trial), R, q)
    return TrialRecord(
        config_hash=config_hash,
        experiment="rwm",
        dist=planar_label(R),
        trial_index=index + index_offset,
        seed=trial,
        count_total=census.count_total,
        count_contained=census.count_contained,
        runtime_ms=_elapsed_ms(start),
    )


def run_planar_trials(
    radii: Sequence[float],
    M: int,
    trials: int,
    seed: int,
    q: int = None,
    threads: int = None,
    config_hash: str = "",
) -> List[TrialRecord]:
    records = []
    for R in radii:
        logger.info(f"rwm: R={R:g}, {trials} plane-wave samples with M={M}")
        worker = partial(_planar_trial, R=float(R), M=M, q=q, seed=seed, config_hash=config_hash,
                         index_offset=len(records))
        records.extend(run_trials(worker, range(trials), threads))
    return records


class PlanarCnsReport(BaseModel):
    radii: List[float]
    trials: List[int]
    mean_counts: List[float] = Field(..., description="Mean contained count per radius")
    densities: List[float] = Field(..., description="Mean contained count / (pi R^2)")
    ses: List[float]
    c_planar: float = Field(..., description="Density at the largest radius")
    c_planar_se: float
    ci_low: float
    ci_high: float
    c_planar_times_4pi: float = Field(..., description="Comparable to the spherical E[N] / n^2")
    doubling_ratios: List[float]
    checks: List[Check] = Field(default_factory=list)

    def summary_entry(self) -> SummaryEntry:
        return SummaryEntry(
            estimate=self.c_planar,
            se=self.c_planar_se,
            ci_low=self.ci_low,
            ci_high=self.ci_high,
            n_trials=sum(self.trials),
            checks=self.checks,
            details=self.model_dump(exclude={"checks", "c_planar", "c_planar_se", "ci_low", "ci_high"}),
        )


def summarize_planar(records: Sequence[TrialRecord], radii: Sequence[float], level: float = None) -> PlanarCnsReport:
    radii = sorted(float(R) for R in radii)
    mean_counts, densities, ses, trials = [], [], [], []
    for R in radii:
        counts = [r.count_contained for r in records if r.dist == planar_label(R)]
        mean, se = stats.mean_se(counts)
        area = math.pi * R ** 2
        mean_counts.append(mean)
        densities.append(mean / area)
        ses.append(se / area)
        trials.append(len(counts))

    ratios = []
    checks = []
    for (r1, m1), (r2, m2) in zip(zip(radii, mean_counts), zip(radii[1:], mean_counts[1:])):
        ratio = m2 / m1 if m1 > 0 else math.inf
        ratios.append(ratio)
        if math.isclose(r2, 2.0 * r1):
            checks.append(make_check(f"doubling_ratio_R{r1:g}", 2.0 <= ratio <= 8.0, ratio, 4.0))
    low, high = stats.normal_ci(densities[-1], ses[-1], level)
    return PlanarCnsReport(
        radii=radii,
        trials=trials,
        mean_counts=mean_counts,
        densities=densities,
        ses=ses,
        c_planar=densities[-1],
        c_planar_se=ses[-1],
        ci_low=low,
        ci_high=high,
        c_planar_times_4pi=4.0 * math.pi * densities[-1],
        doubling_ratios=ratios,
        checks=checks,
    )


def cns_planar(radii: Sequence[float], M: int, trials: int, q: int, seed: int, threads: int = None) -> PlanarCnsReport:
    """Planar constant E[N(F, R)] / (pi R^2) from truncated plane-wave samples"""
    return summarize_planar(run_planar_trials(radii, M, trials, seed, q, threads), radii)


def sphere_planar_agreement(sphere: CnsEstimate, planar: PlanarCnsReport) -> Check:
    """Spherical c / 4 pi and the planar density have overlapping confidence intervals"""
    low = sphere.ci_low / (4.0 * math.pi)
    high = sphere.ci_high / (4.0 * math.pi)
    overlap = low <= planar.ci_high and planar.ci_low <= high
    return make_check("sphere_planar_agree", overlap, sphere.c_hat_over_4pi, planar.c_planar)


# ---------------------------------------------------------------------------
# Local universality of patch counts
# ---------------------------------------------------------------------------


def _patch_count(index: int, n: int, R: float, dist: CoefficientDistribution, stream: str, seed: int, grid) -> int:
    field = random_field(n, dist, trial_seed(seed, index, stream))
    theta, phi = uniform_points(trial_generator(seed, index, stream + ":centre"), 1)
    spec = PatchSpec(center=SpherePoint(theta=float(theta[0]), phi=float(phi[0])), scale_R=R, degree=n,
                     margin=GEODESIC_MARGIN)
    return census_patch(field, spec, grid).count_contained


class LocalUniversalityReport(BaseModel):
    n: int
    R: float
    dist_a: str
    dist_b: str
    patches: int
    mean_a: float
    mean_b: float
    se_a: float
    se_b: float
    ks: float = Field(..., description="Two-sample KS distance of the contained counts")
    difference: float
    ci_low: float
    ci_high: float
    consistent: bool
    planar_mean: Optional[float] = Field(None, description="Mean N(F, R) of the limit field")
    checks: List[Check] = Field(default_factory=list)

    def summary_entry(self) -> SummaryEntry:
        return SummaryEntry(
            estimate=self.difference,
            se=math.hypot(self.se_a, self.se_b),
            ci_low=self.ci_low,
            ci_high=self.ci_high,
            n_trials=2 * self.patches,
            checks=self.checks,
            details=self.model_dump(exclude={"checks", "difference", "ci_low", "ci_high"}),
        )


def local_universality(
    dist_a: CoefficientDistribution,
    dist_b: CoefficientDistribution,
    n: int,
    R: float,
    n_patches: int,
    seed: int,
    q: int = None,
    threads: int = None,
    planar_trials: int = 0,
    M: int = None,
) -> LocalUniversalityReport:
    """Compare the laws of the contained patch count N(F_x) under two coefficient laws"""
    grid = build_patch_grid(R, q)
    stream_a, stream_b = arm_streams("local", dist_a.label, dist_b.label)
    counts = []
    for dist, stream in ((dist_a, stream_a), (dist_b, stream_b)):
        worker = partial(_patch_count, n=n, R=R, dist=dist, stream=stream, seed=seed, grid=grid)
        counts.append(np.array(run_trials(worker, range(n_patches), threads), dtype=float))

    result = compare_samples(counts[0], counts[1], trial_seed(seed, 0, "local-bootstrap"))
    consistent = result["ci_low"] <= 0.0 <= result["ci_high"]
    planar_mean = None
    if planar_trials:
        planar = [
            rwm_census(sample_rwm(M, trial_seed(seed, i, f"local-rwm:{R:g}")), R, q).count_contained
            for i in range(planar_trials)
        ]
        planar_mean = float(np.mean(planar))
    return LocalUniversalityReport(
        n=n,
        R=R,
        dist_a=dist_a.label,
        dist_b=dist_b.label,
        patches=n_patches,
        mean_a=result["mean_a"],
        mean_b=result["mean_b"],
        se_a=result["se_a"],
        se_b=result["se_b"],
        ks=stats.ks_two_sample(counts[0], counts[1]),
        difference=result["difference"],
        ci_low=result["ci_low"],
        ci_high=result["ci_high"],
        consistent=consistent,
        planar_mean=planar_mean,
        checks=[make_check("local_zero_in_ci", consistent, result["difference"], 0.0)],
    )
