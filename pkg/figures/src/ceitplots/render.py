"""Render publication-style figures from ceitsim CSV outputs.

This package never recomputes physics: it reads exactly the CSV schemas the
simulator CLI writes and fails loudly when a column is missing. Every figure
is a deterministic function of its input files.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 150
PNG_METADATA = {"Software": "ceitplots"}

FIGURE_IDS = ("fig2", "fig3a", "fig3b", "fig4", "fig5a", "fig5b",
              "fig6", "fig7", "fig8", "appendixA")


class SchemaError(Exception):
    """An input CSV does not carry the columns a figure needs."""


@dataclass(frozen=True)
class FigureSpec:
    figure_id: str
    inputs: tuple
    output: str

    def __post_init__(self):
        if self.figure_id not in FIGURE_IDS:
            raise SchemaError(f"unknown figure id {self.figure_id!r}; "
                              f"known: {', '.join(FIGURE_IDS)}")
        if not self.inputs:
            raise SchemaError(f"{self.figure_id}: needs at least one input CSV")


class Table:
    """A parsed CSV: ordered header plus one float column per name."""

    def __init__(self, path):
        self.path = Path(path)
        if not self.path.exists():
            raise SchemaError(f"input CSV does not exist: {self.path}")
        with open(self.path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                self.header = next(reader)
            except StopIteration:
                raise SchemaError(f"{self.path}: empty file") from None
            rows = [row for row in reader if row]
        self.columns = {}
        for j, name in enumerate(self.header):
            vals = [row[j] if j < len(row) else "" for row in rows]
            self.columns[name] = np.array(
                [float(v) if v != "" else math.nan for v in vals])

    def require(self, *names):
        for name in names:
            if name not in self.columns:
                raise SchemaError(
                    f"{self.path}: missing required column {name!r} "
                    f"(found: {', '.join(self.header)})")
        return [self.columns[name] for name in names]

    def matching(self, pattern):
        rx = re.compile(pattern)
        names = [n for n in self.header if rx.fullmatch(n)]
        if not names:
            raise SchemaError(
                f"{self.path}: no column matches pattern {pattern!r}")
        return names


def _new_axes(width=6.0, height=4.0):
    fig, ax = plt.subplots(figsize=(width, height))
    return fig, ax


def _save(fig, output):
    Path(output).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(output, dpi=DPI, bbox_inches="tight", metadata=PNG_METADATA)
    plt.close(fig)


def _render_fig2(inputs, output):
    (detuning, norm) = Table(inputs[0]).require("detuning_mhz",
                                                "transmission_normalized")
    fig, ax = _new_axes()
    ax.plot(detuning, norm, color="tab:blue")
    ax.set_xlabel("probe detuning (MHz)")
    ax.set_ylabel("normalized transmission")
    ax.set_title("cavity transmission spectrum")
    _save(fig, output)


def _render_fig3a(inputs, output):
    table = Table(inputs[0])
    (omega_c, fwhm) = table.require("omega_c_mhz", "fwhm_analytic_mhz")
    omega, idx = np.unique(omega_c, return_index=True)
    fig, ax = _new_axes()
    ax.plot(omega, fwhm[idx], "o-", color="tab:green")
    ax.set_xlabel("control Rabi frequency (MHz)")
    ax.set_ylabel("analytic linewidth (MHz)")
    ax.set_title("power broadening of the transparency window")
    _save(fig, output)


def _render_fig3b(inputs, output):
    table = Table(inputs[0])
    (omega_c, ana, non, temp, thermal) = table.require(
        "omega_c_mhz", "fwhm_analytic_mhz", "fwhm_noneit_mhz",
        "temperature_k", "fwhm_thermal_mhz")
    fig, ax = _new_axes()
    _, idx = np.unique(omega_c, return_index=True)
    order = np.argsort(ana[idx])
    ax.plot(ana[idx][order], non[idx][order], "k--", label="motion-free")
    for t in np.unique(temp):
        m = temp == t
        order = np.argsort(ana[m])
        ax.plot(ana[m][order], thermal[m][order], "o-",
                label=f"T = {t * 1e3:.2g} mK")
    ax.set_xlabel("analytic linewidth (MHz)")
    ax.set_ylabel("simulated linewidth (MHz)")
    ax.legend(fontsize=8)
    ax.set_title("thermal vs motion-free linewidth")
    _save(fig, output)


def _render_fig4(inputs, output):
    (n_ions, scaled) = Table(inputs[0]).require("n_ions", "fwhm_scaled")
    panels = 2 if len(inputs) > 1 else 1
    fig, axes = plt.subplots(1, panels, figsize=(6.0 * panels, 4.0))
    axes = np.atleast_1d(axes)
    axes[0].plot(n_ions, scaled, "s-", color="tab:red")
    axes[0].set_xlabel("number of ions")
    axes[0].set_ylabel("linewidth / empty-cavity width")
    axes[0].set_title("collective narrowing")
    if panels == 2:
        cal = Table(inputs[1])
        (n_col, temp, fwhm) = cal.require("n_ions", "temperature_k", "fwhm_mhz")
        for n in np.unique(n_col):
            m = n_col == n
            axes[1].plot(fwhm[m], temp[m] * 1e3, "o-", label=f"N = {int(n)}")
        axes[1].set_xlabel("linewidth (MHz)")
        axes[1].set_ylabel("temperature (mK)")
        axes[1].set_yscale("log")
        axes[1].legend(fontsize=8)
        axes[1].set_title("temperature readout per ion count")
    _save(fig, output)


def _render_fig5a(inputs, output):
    fig, ax = _new_axes()
    for path in inputs:
        (det, norm) = Table(path).require("detuning_mhz",
                                          "transmission_normalized")
        ax.plot(det, norm, label=Path(path).stem)
    ax.set_xlabel("probe detuning (MHz)")
    ax.set_ylabel("normalized transmission")
    ax.legend(fontsize=8)
    ax.set_title("spectra at different bath occupancies")
    _save(fig, output)


def _render_fig5b(inputs, output):
    (temp, n_th, nbar, fwhm) = Table(inputs[0]).require(
        "temperature_k", "n_th", "nbar_steady", "fwhm_mhz")
    fig, ax = _new_axes()
    ax.plot(fwhm, temp * 1e3, "o-", color="tab:blue", label="temperature")
    ax.set_xlabel("cavity-EIT linewidth (MHz)")
    ax.set_ylabel("temperature (mK)", color="tab:blue")
    ax.set_yscale("log")
    ax2 = ax.twinx()
    ax2.plot(fwhm, nbar, "s--", color="tab:orange", label="occupancy")
    ax2.set_ylabel("mean phonon number", color="tab:orange")
    ax2.set_yscale("log")
    ax.set_title("thermometer calibration curve")
    _save(fig, output)
    del n_th


def _render_fig6(inputs, output):
    table = Table(inputs[0])
    (eta, n, ratio, theory) = table.require("eta", "n", "ratio", "ratio_theory")
    etas = np.unique(eta)
    ncol = min(2, len(etas))
    nrow = math.ceil(len(etas) / ncol)
    fig, axes = plt.subplots(nrow, ncol, figsize=(5.0 * ncol, 3.4 * nrow),
                             squeeze=False)
    for k, e in enumerate(etas):
        ax = axes[k // ncol][k % ncol]
        m = eta == e
        ax.plot(n[m], theory[m], "k--", label="n/(n+1)")
        ax.plot(n[m], ratio[m], "o", color="tab:red", label="simulated")
        ax.set_title(f"Lamb-Dicke parameter {e:g}")
        ax.set_xlabel("phonon number")
        ax.set_ylabel("red/blue excitation ratio")
        ax.legend(fontsize=8)
    for k in range(len(etas), nrow * ncol):
        axes[k // ncol][k % ncol].axis("off")
    fig.tight_layout()
    _save(fig, output)


def _render_fig7(inputs, output):
    (t, pe) = Table(inputs[0]).require("time_us", "p_e_total")
    fig, ax = _new_axes()
    ax.plot(t, pe, color="tab:blue")
    ax.set_xlabel("time (us)")
    ax.set_ylabel("excited-state population")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title("blue-sideband Rabi oscillation")
    _save(fig, output)


def _render_fig8(inputs, output):
    fig, axes = plt.subplots(1, len(inputs), figsize=(6.0 * len(inputs), 4.0),
                             squeeze=False)
    for k, path in enumerate(inputs):
        table = Table(path)
        (t,) = table.require("time_us")
        ax = axes[0][k]
        for name in table.matching(r"p_u_\d+"):
            pop = table.columns[name]
            if pop.max() > 0.02:
                ax.plot(t, pop, label=name.replace("p_u_", "n = "))
        (mean_n,) = table.require("mean_n")
        ax.plot(t, mean_n / max(mean_n.max(), 1.0), ":", color="gray",
                label="mean n (scaled)")
        ax.set_xlabel("time (us)")
        ax.set_ylabel("population")
        ax.legend(fontsize=7)
        ax.set_title(Path(path).stem)
    fig.tight_layout()
    _save(fig, output)


def _render_appendix_a(inputs, output):
    table = Table(inputs[0])
    (g, omega_c, n_th, ratio) = table.require("g_mhz", "omega_c_mhz", "n_th",
                                              "fwhm_ratio")
    n_values = np.unique(n_th)
    ncol = min(2, len(n_values))
    nrow = math.ceil(len(n_values) / ncol)
    fig, axes = plt.subplots(nrow, ncol, figsize=(5.2 * ncol, 4.0 * nrow),
                             squeeze=False)
    for k, nv in enumerate(n_values):
        ax = axes[k // ncol][k % ncol]
        m = n_th == nv
        gs = np.unique(g[m])
        os_ = np.unique(omega_c[m])
        grid = np.full((len(os_), len(gs)), np.nan)
        for gg, oo, rr in zip(g[m], omega_c[m], ratio[m]):
            grid[np.searchsorted(os_, oo), np.searchsorted(gs, gg)] = rr
        im = ax.pcolormesh(gs, os_, grid, shading="nearest", cmap="viridis")
        fig.colorbar(im, ax=ax, label="linewidth / empty-cavity width")
        ax.set_xlabel("cavity coupling g (MHz)")
        ax.set_ylabel("control Rabi frequency (MHz)")
        ax.set_title(f"bath occupancy {nv:g}")
    for k in range(len(n_values), nrow * ncol):
        axes[k // ncol][k % ncol].axis("off")
    fig.tight_layout()
    _save(fig, output)


_RENDERERS = {
    "fig2": _render_fig2,
    "fig3a": _render_fig3a,
    "fig3b": _render_fig3b,
    "fig4": _render_fig4,
    "fig5a": _render_fig5a,
    "fig5b": _render_fig5b,
    "fig6": _render_fig6,
    "fig7": _render_fig7,
    "fig8": _render_fig8,
    "appendixA": _render_appendix_a,
}


def render(spec: FigureSpec) -> str:
    """Render one figure to its output path and return that path."""
    _RENDERERS[spec.figure_id](list(spec.inputs), spec.output)
    return spec.output
