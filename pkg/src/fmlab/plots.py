"""Figure rendering for sweep reports.

All figures are written to files (Agg backend); nothing is shown
interactively.  Each fitted quantity gets its own log-log panel with the
fitted line and, where one exists, the predicted slope for reference.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_FIG_KW = {"figsize": (5.0, 3.4), "dpi": 150}


def _fit_line(ax, ks, fit, label):
    kk = np.linspace(min(ks), max(ks), 64)
    ax.plot(kk, np.exp(fit["intercept"]) * kk ** fit["slope"], "--", lw=1.2,
            label=f"{label}: slope {fit['slope']:+.3f}")


def _style(ax, xlabel="K", ylabel=""):
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3, lw=0.4)
    ax.legend(fontsize=7, frameon=False)


def render_sweep_figures(records, report: dict, outdir) -> list[str]:
    """Write the four standard report figures; returns the file paths."""
    records = sorted(records, key=lambda r: r.K)
    ks = np.array([r.K for r in records], dtype=float)
    os.makedirs(outdir, exist_ok=True)
    paths = []

    def save(fig, name):
        path = os.path.join(outdir, name)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
        paths.append(path)

    theory = report["theoretical_ratio_exponent"]

    fig, ax = plt.subplots(**_FIG_KW)
    vals = np.array([r.ratio_R / r.sup_d_norm for r in records])
    ax.loglog(ks, vals, "o", ms=4, label="R(K) / sup-D norm")
    _fit_line(ax, ks, report["fits"]["normalized_ratio"], "fit")
    ref = vals[0] * (ks / ks[0]) ** theory
    ax.loglog(ks, ref, ":", lw=1.0, label=f"predicted slope {theory:+.3f}")
    ax.set_title(f"normalized operator ratio [{report['verdict']}]", fontsize=9)
    _style(ax, ylabel="ratio")
    save(fig, "normalized_ratio.png")

    fig, ax = plt.subplots(**_FIG_KW)
    vals = np.array([r.sup_d_norm for r in records])
    ax.loglog(ks, vals, "s", ms=4, label="sup-D multiplier norm")
    _fit_line(ax, ks, report["fits"]["sup_multiplier_norm"], "fit")
    ax.set_ylim(vals.min() * 0.5, vals.max() * 2.0)
    ax.set_title("multiplier norm (expected flat)", fontsize=9)
    _style(ax, ylabel="norm")
    save(fig, "sup_multiplier_norm.png")

    fig, ax = plt.subplots(**_FIG_KW)
    mc = np.array([r.mc_mean for r in records])
    se = np.array([r.mc_stderr for r in records])
    ax.errorbar(ks, mc, yerr=se, fmt="o", ms=4, lw=1, capsize=2, label="MC mean of ||Tf||_p^p")
    ax.plot(ks, [r.square_functional for r in records], "x", ms=5, label="square functional")
    ax.set_xscale("log")
    ax.set_yscale("log")
    _fit_line(ax, ks, report["fits"]["mc_mean"], "MC fit")
    ax.set_title("operator growth", fontsize=9)
    _style(ax, ylabel="value")
    save(fig, "operator_growth.png")

    fig, ax = plt.subplots(**_FIG_KW)
    ratio = np.array([r.square_functional / r.partial_sum for r in records])
    ax.semilogx(ks, ratio, "d-", ms=4, lw=0.8, label="square functional / partial sum")
    ax.set_title("lower-bound proxy stability", fontsize=9)
    _style(ax, ylabel="ratio")
    save(fig, "proxy_stability.png")

    return paths


def render_norm_table_figure(table, outdir, name="per_dilation_norm.png") -> str:
    """Bar panel of the per-dilation Sobolev norms feeding the sup."""
    os.makedirs(outdir, exist_ok=True)
    ds = [d for d, _, _ in table]
    vs = [v for _, v, _ in table]
    fig, ax = plt.subplots(**_FIG_KW)
    ax.bar(ds, vs, width=0.8)
    ax.set_xlabel("dilation D")
    ax.set_ylabel("localized Sobolev norm")
    ax.grid(True, axis="y", alpha=0.3, lw=0.4)
    path = os.path.join(outdir, name)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
