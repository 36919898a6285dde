"""Tests for the Monte Carlo campaigns"""

import math

import numpy as np
import pytest

from app.services.ensemble import GAUSSIAN, RADEMACHER
from app.services.experiments import (
    BOGOMOLNY_SCHMIT,
    PLEIJEL_BOUND,
    CovarianceReport,
    PlanarCnsReport,
    TrialRecord,
    arm_streams,
    basis_dependence_demo,
    cns_planar,
    covariance_check,
    covariance_targets,
    covariance_trend_check,
    default_pairs,
    local_universality,
    make_check,
    planar_label,
    run_clt,
    run_cns_trials,
    run_universality_trials,
    sphere_planar_agreement,
    summarize_cns,
    summarize_planar,
    summarize_universality,
)
from app.services.specfn import bessel_j0
from app.utils.errors import DomainError, StatisticsError


def _cns_records(means_by_degree, spread=2):
    records = []
    for n, mean in means_by_degree.items():
        for i in range(10):
            records.append(TrialRecord(config_hash="h", experiment="cns", degree=n, dist="gaussian",
                                       trial_index=len(records), seed=i,
                                       count_total=mean + (spread if i % 2 else -spread)))
    return records


def test_check_serializes_with_pass_key():
    """Checks dump as {name, pass, value, threshold}"""
    dumped = make_check("bound", True, 1, 2).model_dump(by_alias=True)
    assert dumped == {"name": "bound", "pass": True, "value": 1.0, "threshold": 2.0}


def test_envelope_constants():
    """Pleijel bound (2/j0)^2 and the percolation prediction"""
    assert PLEIJEL_BOUND == pytest.approx(0.6916, abs=1e-4)
    assert BOGOMOLNY_SCHMIT == pytest.approx(0.0624, abs=1e-4)


def test_summarize_cns_recovers_fit():
    """Exact means on c + b/n give back c and b"""
    estimate = summarize_cns(_cns_records({10: 11, 20: 34, 40: 116}))
    assert estimate.c_hat == pytest.approx(0.06, abs=1e-9)
    assert estimate.slope == pytest.approx(0.5, abs=1e-7)
    assert estimate.c_hat_over_4pi == pytest.approx(0.06 / (4 * math.pi))
    assert estimate.ci_low < 0.06 < estimate.ci_high
    assert all(check.passed for check in estimate.checks)
    entry = estimate.summary_entry()
    assert entry.n_trials == 30 and entry.details["degrees"] == [10, 20, 40]


def test_cns_needs_trials():
    """Fewer than 50 trials per degree is refused"""
    with pytest.raises(StatisticsError):
        run_cns_trials([10], GAUSSIAN, trials=10, seed=0)


def test_cns_trials_deterministic_across_threads():
    """Per-trial seeds make results independent of the pool width"""
    serial = run_cns_trials([6, 10], GAUSSIAN, trials=50, seed=4, threads=1)
    pooled = run_cns_trials([6, 10], GAUSSIAN, trials=50, seed=4, threads=4)
    assert serial == pooled
    assert [r.trial_index for r in serial] == list(range(100))
    assert len({r.seed for r in serial}) == 100
    assert all(2 <= r.count_total <= (r.degree + 1) ** 2 for r in serial)


def test_arm_streams():
    """Streams follow the law, and a law against itself still splits"""
    assert arm_streams("u", "gaussian", "rademacher") == ("u:gaussian", "u:rademacher")
    a, b = arm_streams("u", "gaussian", "gaussian")
    assert a != b


def test_universality_swap_negates_difference():
    """Swapping the laws mirrors the difference and its interval"""
    forward = run_universality_trials(GAUSSIAN, RADEMACHER, n=5, trials=200, seed=7, threads=1)
    backward = run_universality_trials(RADEMACHER, GAUSSIAN, n=5, trials=200, seed=7, threads=1)
    a = summarize_universality(forward, 200, 7)
    b = summarize_universality(backward, 200, 7)
    assert b.difference == pytest.approx(-a.difference)
    assert b.ci_low == pytest.approx(-a.ci_high)
    assert b.ci_high == pytest.approx(-a.ci_low)
    assert a.warning is not None
    assert a.summary_entry().n_trials == 400


def test_universality_needs_trials():
    """Fewer than 200 trials per arm is refused"""
    with pytest.raises(StatisticsError):
        run_universality_trials(GAUSSIAN, RADEMACHER, n=10, trials=100, seed=0)


def test_clt_ks_decreases():
    """Rademacher pointwise values approach N(0, 1); the Gaussian arm is exact"""
    report = run_clt([1, 160], RADEMACHER, n_samples=6000, seed=2)
    assert report.ks[0] > 0.04
    assert report.ks[0] > report.ks[1]
    assert all(check.passed for check in report.checks)


def test_basis_dependence_demo():
    """Pole supports are {-1, 1} and {-sqrt 2, 0, sqrt 2}; Gaussian laws agree"""
    report = basis_dependence_demo(25, 2000, seed=3)
    assert report.standard_support == pytest.approx([-1.0, 1.0])
    assert report.rotated_support == pytest.approx([-math.sqrt(2.0), 0.0, math.sqrt(2.0)])
    assert all(check.passed for check in report.checks)


def test_covariance_targets():
    """Value target is J0; derivative targets are normalized second derivatives"""
    R = 3.0
    assert covariance_targets(np.zeros(2), R) == pytest.approx([1.0, 1.0, 1.0])
    d, h = np.array([0.4, 0.0]), 1e-4
    targets = covariance_targets(d, R)
    assert targets[0] == pytest.approx(bessel_j0(R * 0.4))
    second = (bessel_j0(R * (0.4 + h)) - 2 * bessel_j0(R * 0.4) + bessel_j0(R * (0.4 - h))) / h ** 2
    assert targets[1] == pytest.approx(-second / (R ** 2 / 2.0), abs=1e-5)


def test_covariance_check_small():
    """Empirical patch covariances sit within error bars of the Bessel kernel"""
    R = 5.0
    report = covariance_check(80, R, GAUSSIAN, default_pairs(R), trials=400, seed=5, threads=1)
    assert len(report.pairs) == 6
    assert report.within_3se >= 0.8
    with pytest.raises(DomainError):
        covariance_check(80, R, GAUSSIAN, [((0.0, 0.0), (1.5, 0.0))], trials=10, seed=5)
    with pytest.raises(StatisticsError):
        covariance_check(80, R, GAUSSIAN, default_pairs(R), trials=1, seed=5)


def _covariance_report(n, deviation, se):
    return CovarianceReport(n=n, R=10.0, dist="gaussian", trials=10, pairs=[], targets=[], empirical=[], ses=[],
                            max_deviation=deviation, max_deviation_se=se, within_3se=1.0)


def test_covariance_trend_check():
    """Deviations may not grow beyond combined error bars"""
    shrinking = [_covariance_report(40, 0.3, 0.01), _covariance_report(80, 0.1, 0.01)]
    growing = [_covariance_report(40, 0.1, 0.01), _covariance_report(80, 0.3, 0.01)]
    assert covariance_trend_check(shrinking).passed
    assert not covariance_trend_check(growing).passed


def _planar_records(counts_by_radius):
    records = []
    for R, counts in counts_by_radius.items():
        for c in counts:
            records.append(TrialRecord(config_hash="h", experiment="rwm", dist=planar_label(R),
                                       trial_index=len(records), seed=0, count_total=c, count_contained=c))
    return records


def test_summarize_planar():
    """Densities per radius and the doubling ratio check"""
    report = summarize_planar(_planar_records({5.0: [1, 3], 10.0: [7, 9]}), [5.0, 10.0])
    assert report.mean_counts == [2.0, 8.0]
    assert report.densities[-1] == pytest.approx(8.0 / (math.pi * 100.0))
    assert report.doubling_ratios == [4.0]
    assert report.checks[0].passed
    assert report.c_planar_times_4pi == pytest.approx(4 * math.pi * report.c_planar)


def test_cns_planar_reproducible():
    """Plane-wave campaign per radius, identical across thread counts"""
    report = cns_planar([5.0, 10.0], M=128, trials=6, q=4, seed=9, threads=1)
    assert report.radii == [5.0, 10.0]
    assert report.trials == [6, 6]
    assert all(d >= 0.0 for d in report.densities)
    assert report == cns_planar([5.0, 10.0], M=128, trials=6, q=4, seed=9, threads=3)


def test_sphere_planar_agreement():
    """Overlapping intervals pass, disjoint intervals fail"""
    estimate = summarize_cns(_cns_records({10: 11, 20: 34, 40: 116}))
    density = estimate.c_hat_over_4pi
    close = PlanarCnsReport(radii=[10.0], trials=[2], mean_counts=[0.0], densities=[density], ses=[0.0],
                            c_planar=density, c_planar_se=0.0, ci_low=density * 0.99, ci_high=density * 1.01,
                            c_planar_times_4pi=0.06, doubling_ratios=[])
    far = close.model_copy(update={"ci_low": 1.0, "ci_high": 2.0})
    assert sphere_planar_agreement(estimate, close).passed
    assert not sphere_planar_agreement(estimate, far).passed


def test_local_universality_report():
    """Patch counts under two laws are compared with a bootstrap interval"""
    report = local_universality(GAUSSIAN, RADEMACHER, n=100, R=5.0, n_patches=40, seed=1, threads=1)
    assert report.patches == 40
    assert 0.0 <= report.ks <= 1.0
    assert report.ci_low <= report.difference <= report.ci_high
    assert report.summary_entry().n_trials == 80
