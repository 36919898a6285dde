"""Static SVG plots of run results

Plotting never aborts a run: any failure is logged and the run keeps its
data-only output.
"""

import logging
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from app.services.experiments import CltReport, CnsEstimate, CovarianceReport  # noqa: E402
from app.services.specfn import bessel_j0  # noqa: E402

logger = logging.getLogger(__name__)


def _save(fig, path: Path, config_hash: str) -> Path:
    if config_hash:
        fig.text(0.99, 0.01, f"config {config_hash}", ha="right", va="bottom", fontsize=7, alpha=0.6)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Identifier": config_hash or None})
    plt.close(fig)
    return path


def plot_cns(estimate: CnsEstimate, path: Path, config_hash: str = "") -> Optional[Path]:
    """count / n^2 against 1/n with 95% bands and the c + b/n fit"""
    try:
        fig, ax = plt.subplots(figsize=(6.4, 3.8))
        x = 1.0 / np.asarray(estimate.degrees, dtype=float)
        y = np.asarray(estimate.means)
        se = np.asarray(estimate.ses)
        ax.errorbar(x, y, yerr=1.96 * se, marker="o", lw=0, elinewidth=1.5, capsize=3, label="mean count / n^2")
        grid = np.linspace(0.0, x.max() * 1.05, 50)
        ax.plot(grid, estimate.c_hat + estimate.slope * grid, lw=1.5, label="c + b/n")
        ax.axhspan(estimate.ci_low, estimate.ci_high, color="C1", alpha=0.15)
        ax.set(xlabel="1/n", ylabel="E[N] / n^2", title=f"Nodal count constant ({estimate.dist})")
        ax.grid(alpha=0.25, linestyle=":")
        ax.legend(frameon=False)
        return _save(fig, path, config_hash)
    except Exception as e:
        logger.warning(f"cns plot skipped: {e}")
        plt.close("all")
        return None


def plot_covariance(reports: Sequence[CovarianceReport], path: Path, config_hash: str = "") -> Optional[Path]:
    """Empirical value covariances against J0(R |y1 - y2|)"""
    try:
        fig, ax = plt.subplots(figsize=(6.4, 3.8))
        distances = []
        for i, report in enumerate(sorted(reports, key=lambda r: r.n)):
            pairs = np.asarray(report.pairs)
            d = report.R * np.linalg.norm(pairs[:, 0] - pairs[:, 1], axis=1)
            distances.extend(d.tolist())
            empirical = np.asarray(report.empirical)[:, 0]
            ses = np.asarray(report.ses)[:, 0]
            ax.errorbar(d + 0.05 * i, empirical, yerr=1.96 * ses, marker="o", lw=0, elinewidth=1.2,
                        capsize=2, label=f"n={report.n}")
        grid = np.linspace(0.0, max(distances) * 1.05 if distances else 1.0, 200)
        ax.plot(grid, bessel_j0(grid), color="k", lw=1.2, label="J0")
        ax.set(xlabel="R |y1 - y2|", ylabel="E[F(y1) F(y2)]", title="Patch covariance")
        ax.grid(alpha=0.25, linestyle=":")
        ax.legend(frameon=False)
        return _save(fig, path, config_hash)
    except Exception as e:
        logger.warning(f"covariance plot skipped: {e}")
        plt.close("all")
        return None


def plot_ks(report: CltReport, path: Path, config_hash: str = "") -> Optional[Path]:
    try:
        fig, ax = plt.subplots(figsize=(6.4, 3.8))
        ax.plot(report.degrees, report.ks, marker="o", lw=2.0, label=report.dist)
        if report.dist != "gaussian":
            ax.plot(report.degrees, report.gaussian_ks, marker="s", lw=1.2, label="gaussian control")
        ax.axhline(0.05, color="k", lw=1.0, alpha=0.5)
        ax.set(xscale="log", xlabel="n", ylabel="KS distance to N(0,1)", title="Pointwise CLT")
        ax.grid(alpha=0.25, linestyle=":")
        ax.legend(frameon=False)
        return _save(fig, path, config_hash)
    except Exception as e:
        logger.warning(f"KS plot skipped: {e}")
        plt.close("all")
        return None
