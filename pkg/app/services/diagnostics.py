"""Inequality and geometry diagnostics for single degrees and degree ladders"""

import logging
import math
from functools import partial
from typing import List, Sequence

import numpy as np
from pydantic import BaseModel, Field
from scipy.special import roots_legendre

from app.services.basis import HarmonicBasis, SpherePoint, build_basis, from_unit_vectors, uniform_points
from app.services.ensemble import (
    GEODESIC_MARGIN,
    CoefficientDistribution,
    PatchSpec,
    RandomField,
    exp_map,
    random_field,
)
from app.services.experiments import (
    Check,
    SummaryEntry,
    TrialRecord,
    make_check,
    patch_points,
    run_sphere_trials,
)
from app.services.nodal import build_patch_grid, build_sphere_grid, census_global, census_patch
from app.utils import stats
from app.utils.config import settings
from app.utils.errors import ConfigurationError, StatisticsError
from app.utils.pool import run_trials
from app.utils.seeding import trial_generator, trial_seed

logger = logging.getLogger(__name__)

MIN_BADSET_POINTS = 1000
MIN_SEMILOCAL_CENTERS = 500
REFINEMENT_AGREEMENT = 0.95
MIN_SEMILOCAL_R = 10.0

# 5 x 5 lattice on [-1, 1]^2 restricted to the unit disk
_SUBGRID = np.array([(a, b) for a in np.linspace(-1, 1, 5) for b in np.linspace(-1, 1, 5) if a * a + b * b <= 1.0])


# ---------------------------------------------------------------------------
# Bad set of large basis values
# ---------------------------------------------------------------------------


class BadSetReport(BaseModel):
    n: int
    K: float
    R: float
    n_points: int
    threshold: float = Field(..., description="K^-1 n^(1/2)")
    value_fraction: float = Field(..., description="Share of x with max_k sup |Y_k| above threshold")
    gradient_fraction: float = Field(..., description="Same for n^-1 |grad Y_k|")


def badset_census(n: int, K: float, R: float, n_points: int, seed: int, basis: HarmonicBasis = None) -> BadSetReport:
    """
    Fraction of uniform centres x where some basis function is large on B(x, R/n)

    The supremum over the ball is approximated on a 21-point sub-grid.
    """
    if n_points < MIN_BADSET_POINTS:
        raise ConfigurationError(f"badset_census needs at least {MIN_BADSET_POINTS} points, got {n_points}")
    basis = basis or build_basis(n)
    threshold = math.sqrt(n) / K
    theta, phi = uniform_points(trial_generator(seed, n, "badset"), n_points)

    bad_value = np.zeros(n_points, dtype=bool)
    bad_grad = np.zeros(n_points, dtype=bool)
    batch = max(1, settings.EVAL_CHUNK // (len(_SUBGRID) * 8))
    for start in range(0, n_points, batch):
        stop = min(start + batch, n_points)
        centres = [SpherePoint(theta=float(t), phi=float(p)) for t, p in zip(theta[start:stop], phi[start:stop])]
        pts_theta, pts_phi = zip(*(patch_points(c, R / n, _SUBGRID) for c in centres))
        values, d_theta, d_phi = basis.evaluate_with_gradient(np.concatenate(pts_theta), np.concatenate(pts_phi))
        shape = (stop - start, len(_SUBGRID) * basis.size)
        bad_value[start:stop] = np.abs(values).reshape(shape).max(axis=1) > threshold
        grad = np.hypot(d_theta, d_phi) / n
        bad_grad[start:stop] = grad.reshape(shape).max(axis=1) > threshold

    report = BadSetReport(
        n=n,
        K=K,
        R=R,
        n_points=n_points,
        threshold=threshold,
        value_fraction=float(bad_value.mean()),
        gradient_fraction=float(bad_grad.mean()),
    )
    logger.info(f"badset: n={n}, K={K}, fractions {report.value_fraction:.4f} / {report.gradient_fraction:.4f}")
    return report


# ---------------------------------------------------------------------------
# L^4 norms of the basis
# ---------------------------------------------------------------------------


def l4_norms(basis: HarmonicBasis, order: int = None) -> np.ndarray:
    """
    Integral of Y_k^4 against the uniform probability measure, per k

    Gauss-Legendre in cos(theta) with at least 2n+1 nodes times a uniform
    longitude grid of 4n+1 points is exact for the degree-4n integrands.
    """
    n = basis.degree
    order = 2 * n + 1 if order is None else int(order)
    if order < 2 * n + 1:
        raise ConfigurationError(f"quadrature order {order} is not exact for degree {4 * n}; need {2 * n + 1}")
    nodes, weights = roots_legendre(order)
    phi = 2.0 * np.pi * np.arange(4 * n + 1) / (4 * n + 1)
    theta = np.arccos(nodes)

    out = np.zeros(basis.size)
    for t, w in zip(theta, weights):
        values = basis.evaluate_ring(t, phi)
        out += 0.5 * w * np.mean(values ** 4, axis=0)
    return out


def l4_census(basis: HarmonicBasis, order: int = None) -> float:
    """max over k of the integral of |Y_k|^4"""
    return float(np.max(l4_norms(basis, order)))


def l4_ratio(n: int) -> float:
    """max_k integral |Y_k|^4 / (n^(2/3) log n)"""
    return l4_census(build_basis(n)) / (n ** (2.0 / 3.0) * math.log(n))


# ---------------------------------------------------------------------------
# Local sup versus L^2 bound
# ---------------------------------------------------------------------------


def _disk_quadrature(center: SpherePoint, radius: float, radial: int, angular: int):
    """Geodesic polar quadrature on B(center, radius); area element sin(r) dr da"""
    nodes, weights = roots_legendre(radial)
    r = 0.5 * radius * (nodes + 1.0)
    wr = 0.5 * radius * weights * np.sin(r)
    alpha = 2.0 * np.pi * np.arange(angular) / angular
    v = r[:, None, None] * np.stack([np.cos(alpha), np.sin(alpha)], axis=-1)[None, :, :]
    points = exp_map(center, v.reshape(-1, 2))
    area = np.repeat(wr, angular) * (2.0 * np.pi / angular)
    return points, area


def _disk_samples(center: SpherePoint, radius: float, rings: int, angular: int) -> np.ndarray:
    r = np.linspace(0.0, radius, rings)
    alpha = 2.0 * np.pi * np.arange(angular) / angular
    v = r[:, None, None] * np.stack([np.cos(alpha), np.sin(alpha)], axis=-1)[None, :, :]
    return exp_map(center, v.reshape(-1, 2))


def local_sup_check(field: RandomField, x: SpherePoint, R: float, order: int = 0) -> float:
    """
    sup_{B(x,R/n)} |D^order f|^2 / ((nR)^(2 order + 2) * integral_{B(x,10R/n)} |f|^2)

    The integral uses the area measure of the unit sphere; the outer radius
    is capped at pi.
    """
    if R < 1.0:
        raise ConfigurationError(f"local_sup_check needs R >= 1, got {R}")
    if order not in (0, 1):
        raise ConfigurationError(f"local_sup_check supports order 0 or 1, got {order}")
    n = field.degree
    inner = R / n
    outer = min(10.0 * R / n, np.pi)

    points, area = _disk_quadrature(x, outer, max(32, int(math.ceil(8 * R))), max(64, int(math.ceil(24 * R))))
    integral = float(np.sum(area * field(*from_unit_vectors(points)) ** 2))

    sample = _disk_samples(x, inner, max(16, int(math.ceil(8 * R))), max(32, int(math.ceil(16 * R))))
    theta, phi = from_unit_vectors(sample)
    if order == 0:
        sup = float(np.max(field(theta, phi) ** 2))
    else:
        _, grads = field.with_gradient(theta, phi)
        sup = float(np.max(np.sum(grads ** 2, axis=1)))
    return sup / ((n * R) ** (2 * order + 2) * integral)


class LocalSupReport(BaseModel):
    n: int
    R: float
    order: int
    draws: int = Field(..., description="Independent (field, centre) draws")
    max_ratio: float
    mean_ratio: float


def _local_sup_draw(index: int, n: int, dist: CoefficientDistribution, R: float, order: int, seed: int) -> float:
    field = random_field(n, dist, trial_seed(seed, index, f"local-sup:{n}"))
    theta, phi = uniform_points(trial_generator(seed, index, f"local-sup-centre:{n}"), 1)
    return local_sup_check(field, SpherePoint(theta=float(theta[0]), phi=float(phi[0])), R, order)


def local_sup_census(n: int, dist: CoefficientDistribution, R: float, draws: int, seed: int, order: int = 0,
                     threads: int = None) -> LocalSupReport:
    """Largest local sup ratio over independent (field, centre) draws at one degree"""
    if draws < 1:
        raise ConfigurationError(f"local_sup_census needs at least one draw, got {draws}")
    worker = partial(_local_sup_draw, n=n, dist=dist, R=R, order=order, seed=seed)
    ratios = np.array(run_trials(worker, range(draws), threads))
    report = LocalSupReport(n=n, R=R, order=order, draws=draws, max_ratio=float(ratios.max()),
                            mean_ratio=float(ratios.mean()))
    logger.info(f"local-sup: n={n}, {draws} draws, max ratio {report.max_ratio:.4g}")
    return report


# ---------------------------------------------------------------------------
# Semi-locality
# ---------------------------------------------------------------------------


class SemilocalReport(BaseModel):
    n: int
    R: float
    centers: int
    global_count: int
    mean_contained: float
    mean_contained_se: float
    reconstructed: float = Field(..., description="(4 n^2 / R^2) E_x[N(F_x)]")
    discrepancy: float = Field(..., description="|reconstructed - global| / (n^2 / R)")


def _contained_at(index: int, field: RandomField, R: float, grid, seed: int) -> int:
    theta, phi = uniform_points(trial_generator(seed, index, "semilocal-centre"), 1)
    spec = PatchSpec(center=SpherePoint(theta=float(theta[0]), phi=float(phi[0])), scale_R=R, degree=field.degree,
                     margin=GEODESIC_MARGIN)
    return census_patch(field, spec, grid).count_contained


def semilocal_check(field: RandomField, R: float, n_centers: int, seed: int, q: int = None,
                    threads: int = None) -> SemilocalReport:
    """Reconstruct N(f_n) from averaged patch counts on one realization"""
    if n_centers < MIN_SEMILOCAL_CENTERS:
        raise ConfigurationError(f"semilocal_check needs at least {MIN_SEMILOCAL_CENTERS} centres, got {n_centers}")
    n = field.degree
    if R / n >= GEODESIC_MARGIN:
        raise ConfigurationError(f"semilocal_check needs 2R/n < pi, got R={R:g} at n={n}")
    if R < MIN_SEMILOCAL_R:
        logger.warning(f"semilocal: R={R:g} is below {MIN_SEMILOCAL_R:g}; the O(n^2/R) error term is large")
    if R / n >= settings.INJECTIVITY_MARGIN:
        logger.info(f"semilocal: R/n = {R / n:.3f}, patches use the geodesic margin {GEODESIC_MARGIN:.3f}")

    global_count = census_global(field, build_sphere_grid(n, q)).count_total
    grid = build_patch_grid(R, q)
    worker = partial(_contained_at, field=field, R=R, grid=grid, seed=seed)
    contained = np.array(run_trials(worker, range(n_centers), threads), dtype=float)
    mean = float(contained.mean())
    se = float(contained.std(ddof=1) / math.sqrt(n_centers))
    reconstructed = 4.0 * n ** 2 / R ** 2 * mean
    return SemilocalReport(
        n=n,
        R=R,
        centers=n_centers,
        global_count=global_count,
        mean_contained=mean,
        mean_contained_se=se,
        reconstructed=reconstructed,
        discrepancy=abs(reconstructed - global_count) / (n ** 2 / R),
    )


# ---------------------------------------------------------------------------
# Nodal length
# ---------------------------------------------------------------------------


def kac_rice_length(n: int) -> float:
    """Expected nodal length of the Gaussian ensemble on the unit sphere"""
    return math.sqrt(2.0) * math.pi * math.sqrt(n * (n + 1))


class LengthReport(BaseModel):
    dist: str
    degrees: List[int]
    means: List[float]
    ses: List[float]
    per_degree: List[float] = Field(..., description="Mean length / n")
    kac_rice_ratio: List[float]
    checks: List[Check] = Field(default_factory=list)

    def summary_entry(self) -> SummaryEntry:
        return SummaryEntry(
            estimate=self.per_degree[-1],
            se=self.ses[-1] / self.degrees[-1],
            n_trials=0,
            checks=self.checks,
            details=self.model_dump(exclude={"checks"}),
        )


def run_length_trials(
    degrees: Sequence[int],
    dist: CoefficientDistribution,
    trials: int,
    n_circles: int,
    seed: int,
    q: int = None,
    threads: int = None,
    config_hash: str = "",
) -> List[TrialRecord]:
    records = []
    for n in degrees:
        logger.info(f"length: degree {n}, {trials} trials, {n_circles} great circles")
        records.extend(
            run_sphere_trials("diagnostics", n, dist, trials, seed, f"length:{n}", q, threads, config_hash,
                              index_offset=len(records), length_circles=n_circles)
        )
    return records


def summarize_length(records: Sequence[TrialRecord]) -> LengthReport:
    """L/n bounded across degrees; Gaussian means match Kac-Rice within 5%"""
    degrees = sorted({r.degree for r in records if r.length_estimate is not None})
    if not degrees:
        raise StatisticsError("no length records to summarize")
    means, ses = [], []
    for n in degrees:
        mean, se = stats.mean_se([r.length_estimate for r in records if r.degree == n])
        means.append(mean)
        ses.append(se)
    per_degree = [m / n for m, n in zip(means, degrees)]
    ratios = [m / kac_rice_length(n) for m, n in zip(means, degrees)]
    spread = max(per_degree) / min(per_degree)
    checks = [make_check("length_over_n_bounded", spread < 1.5, spread, 1.5)]
    if records[0].dist == "gaussian":
        worst = max(abs(r - 1.0) for r in ratios)
        checks.append(make_check("kac_rice_within_5pct", worst < 0.05, worst, 0.05))
    return LengthReport(
        dist=records[0].dist,
        degrees=degrees,
        means=means,
        ses=ses,
        per_degree=per_degree,
        kac_rice_ratio=ratios,
        checks=checks,
    )


def nodal_length_scaling(degrees: Sequence[int], dist: CoefficientDistribution, trials: int, n_circles: int,
                         seed: int, q: int = None, threads: int = None) -> LengthReport:
    return summarize_length(run_length_trials(degrees, dist, trials, n_circles, seed, q, threads))


# ---------------------------------------------------------------------------
# Grid refinement and inner radii
# ---------------------------------------------------------------------------


class RefinementReport(BaseModel):
    n: int
    q: int
    trials: int
    agreement: float
    discrepant: List[int] = Field(default_factory=list, description="Trial indices whose counts changed")
    passed: bool


def _refinement_trial(index: int, n: int, dist: CoefficientDistribution, seed: int, coarse, fine) -> bool:
    field = random_field(n, dist, trial_seed(seed, index, f"refinement:{n}"))
    return census_global(field, coarse).count_total == census_global(field, fine).count_total


def refinement_check(n: int, dist: CoefficientDistribution, trials: int, q: int, seed: int,
                     threads: int = None) -> RefinementReport:
    """Census at q and 2q on the same realizations; discrepancies are listed, never averaged"""
    coarse, fine = build_sphere_grid(n, q), build_sphere_grid(n, 2 * q)
    worker = partial(_refinement_trial, n=n, dist=dist, seed=seed, coarse=coarse, fine=fine)
    agree = run_trials(worker, range(trials), threads)
    discrepant = [i for i, ok in enumerate(agree) if not ok]
    if discrepant:
        logger.warning(f"refinement: {len(discrepant)} of {trials} realizations change count between q={q} and {2 * q}")
    agreement = 1.0 - len(discrepant) / trials
    return RefinementReport(n=n, q=q, trials=trials, agreement=agreement, discrepant=discrepant,
                            passed=agreement >= REFINEMENT_AGREEMENT)


class InnerRadiusReport(BaseModel):
    degrees: List[int]
    trials: int
    min_scaled_radius: List[float] = Field(..., description="min over realizations and domains of radius * n")
    courant_violations: List[int] = Field(..., description="Realizations with count > (n+1)^2")
    checks: List[Check] = Field(default_factory=list)


def _inner_radius_trial(index: int, n: int, dist: CoefficientDistribution, seed: int, grid) -> tuple:
    field = random_field(n, dist, trial_seed(seed, index, f"inner-radius:{n}"))
    census = census_global(field, grid, with_geometry=True)
    return min(census.component_inner_radius) * n, census.count_total > (n + 1) ** 2


def inner_radius_check(degrees: Sequence[int], dist: CoefficientDistribution, trials: int, q: int, seed: int,
                       threads: int = None) -> InnerRadiusReport:
    """Smallest inner-radius proxy times n per degree, and the Courant bound per realization"""
    minima, violations = [], []
    for n in degrees:
        worker = partial(_inner_radius_trial, n=n, dist=dist, seed=seed, grid=build_sphere_grid(n, q))
        results = run_trials(worker, range(trials), threads)
        minima.append(float(min(r[0] for r in results)))
        violations.append(int(sum(r[1] for r in results)))
    checks = [
        make_check("inner_radius_bounded_below", min(minima) > 0.0, min(minima), 0.0),
        make_check("courant_bound", sum(violations) == 0, sum(violations), 0),
    ]
    if len(minima) >= 2:
        spread = max(minima) / min(minima) if min(minima) > 0 else math.inf
        checks.append(make_check("inner_radius_stable_in_n", spread < 3.0, spread, 3.0))
    return InnerRadiusReport(degrees=list(degrees), trials=trials, min_scaled_radius=minima,
                             courant_violations=violations, checks=checks)
