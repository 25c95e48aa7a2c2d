"""Figure rendering for the CLI report paths.

Every command that writes a delimited table can also render a companion
PNG next to it; the CSV/JSON files remain the machine-readable interface.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .field import ComplexField
from .minimizer import ScanRow

TWO_PI = 2.0 * math.pi


def figure_path(out: str | Path) -> Path:
    return Path(out).with_suffix(".png")


def scan_figure(rows: Sequence[ScanRow], path: str | Path) -> None:
    ks = [r.kappa for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.5, 3.6))
    ax1.plot(ks, [r.energy for r in rows], "o-", label="energy")
    ax1.axhline(TWO_PI, color="k", ls="--", lw=0.8, label=r"$2\pi$")
    ax1.set_xlabel(r"$\kappa$")
    ax1.set_ylabel("energy")
    ax1.set_xscale("log")
    ax1.legend(frameon=False)
    ax2.plot(ks, [r.vortex_dist_outer for r in rows], "s-", label="outer")
    ax2.plot(ks, [r.vortex_dist_inner for r in rows], "^-", label="inner")
    ax2.set_xlabel(r"$\kappa$")
    ax2.set_ylabel("vortex distance to boundary")
    ax2.set_xscale("log")
    ax2.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def modes_figure(rows: Sequence[dict], path: str | Path) -> None:
    ns = [row["n"] for row in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.5, 3.6))
    ax1.plot(ns, [row["P"] for row in rows], "o-", label="P")
    ax1.plot(ns, [row["Q"] for row in rows], "s-", label="Q")
    ax1.axhline(1.0, color="k", ls="--", lw=0.8)
    ax1.set_xlabel("n")
    ax1.set_ylabel("boundary energy factor")
    ax1.set_xscale("log")
    ax1.legend(frameon=False)
    ax2.semilogy(ns, [row["alpha"] for row in rows], "o-", label=r"$\alpha$")
    ax2.semilogy(ns, [row["beta"] for row in rows], "s-", label=r"$\beta$")
    ax2.set_xlabel("n")
    ax2.set_ylabel("reflection coefficients")
    ax2.set_xscale("log")
    ax2.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def field_figure(u: ComplexField, path: str | Path) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 3.8))
    extent = (0.0, TWO_PI, -u.annulus.L, u.annulus.L)
    im1 = ax1.imshow(
        np.abs(u.values), origin="lower", aspect="auto", extent=extent, vmin=0.0
    )
    fig.colorbar(im1, ax=ax1, label=r"$|u|$")
    im2 = ax2.imshow(
        np.angle(u.values),
        origin="lower",
        aspect="auto",
        extent=extent,
        cmap="twilight",
        vmin=-math.pi,
        vmax=math.pi,
    )
    fig.colorbar(im2, ax=ax2, label=r"$\arg u$")
    for ax in (ax1, ax2):
        ax.set_xlabel(r"$\varphi$")
        ax.set_ylabel("r")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def bvp_figure(records: Sequence[dict], path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    kappas = sorted({rec["kappa"] for rec in records})
    for k in kappas:
        sub = [rec for rec in records if rec["kappa"] == k]
        ax.semilogy(
            [rec["n"] for rec in sub],
            [max(rec["discrepancy"], 1e-17) for rec in sub],
            "o-",
            label=rf"$\kappa={k:g}$",
        )
    ax.set_xlabel("n")
    ax.set_ylabel("relative discrepancy vs closed form")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def linear_min_figure(ns: Sequence[int], values: Sequence[float], path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    ax.plot(ns, values, "o-", label=r"$2\pi\sqrt{P_n Q_n}$")
    ax.axhline(TWO_PI, color="k", ls="--", lw=0.8, label=r"$2\pi$")
    ax.set_xlabel("n")
    ax.set_ylabel("single-mode lower bound")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
