"""Figure rendering for the bench, verify and bounds reports.

All functions write straight to a file and close the figure.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "font.size": 10,
    "axes.labelsize": 10,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def _golden(width=6.0):
    return (width, width * (np.sqrt(5.0) - 1.0) / 2.0)


def plot_scaling(results, path):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=_golden())
        for res in results:
            ax.loglog(res.dims, res.times, "o-", label=f"{res.label} (slope {res.slope:.2f})")
        ax.set_xlabel("dimension m")
        ax.set_ylabel("seconds per row (median)")
        ax.legend()
        fig.savefig(path)
        plt.close(fig)


def plot_convergence(series: dict, path):
    """``series`` maps a label to a list of ConvergencePoint."""
    with plt.rc_context(RC):
        fig, (ax_m, ax_c) = plt.subplots(1, 2, figsize=(10, 4))
        for label, points in series.items():
            n = [pt.n for pt in points]
            ax_m.loglog(n, [pt.mean_l2 for pt in points], "o-", label=label)
            ax_c.loglog(n, [pt.corr_frobenius for pt in points], "o-", label=label)
        if series:
            first = next(iter(series.values()))
            n = [pt.n for pt in first]
            ax_m.loglog(n, [pt.mean_envelope for pt in first], "k--", lw=0.8, label="CLT scale")
            ax_c.loglog(n, [pt.corr_envelope for pt in first], "k--", lw=0.8, label="CLT scale")
        ax_m.set_xlabel("sample size n")
        ax_m.set_ylabel("l2 error of sample mean")
        ax_c.set_xlabel("sample size n")
        ax_c.set_ylabel("Frobenius error of sample correlation")
        ax_m.legend()
        fig.savefig(path)
        plt.close(fig)


def plot_rho_max_curves(path, p_grid=None, m_grid=None):
    from .constraints import rho_max_alg3_equal, rho_max_alg4_equal
    from .core import MarginalVector

    p_grid = np.linspace(0.01, 0.99, 99) if p_grid is None else np.asarray(p_grid)
    m_grid = np.unique(np.geomspace(3, 1000, 60).astype(int)) if m_grid is None else np.asarray(m_grid)
    alg3 = [rho_max_alg3_equal(MarginalVector([p, p, p])) for p in p_grid]
    alg4 = [rho_max_alg4_equal(int(m)) for m in m_grid]
    with plt.rc_context(RC):
        fig, (ax3, ax4) = plt.subplots(1, 2, figsize=(10, 4))
        ax3.plot(p_grid, alg3)
        ax3.axhline(0.5, color="k", ls="--", lw=0.8)
        ax3.set_xlabel("common marginal p")
        ax3.set_ylabel("largest admissible rho (alg3)")
        ax4.semilogx(m_grid, alg4)
        ax4.axhline(0.25, color="k", ls="--", lw=0.8)
        ax4.set_xlabel("dimension m")
        ax4.set_ylabel("largest admissible rho (alg4)")
        fig.savefig(path)
        plt.close(fig)
