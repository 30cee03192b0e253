"""Headless matplotlib rendering of scan results to image files.

Every CLI report command can drop a PNG next to its CSV; figures are
plot-ready summaries, not an interactive interface.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 150


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def spectrum_figure(spectrum, path):
    """Line plot (single angle) or map (angle grid) of |R|^2."""
    a2 = spectrum.abs2
    if spectrum.phi_grid.size == 1:
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        ax.plot(spectrum.delta_grid, a2[0], lw=1.2)
        ax.set_xlabel(r"detuning $\Delta$ ($\Gamma_0$)")
        ax.set_ylabel(r"$|R|^2$")
        ax.set_title(f"phi = {spectrum.phi_grid[0] * 1e3:.4g} mrad")
    else:
        fig, ax = plt.subplots(figsize=(6.8, 4.6))
        mesh = ax.pcolormesh(
            spectrum.delta_grid, spectrum.phi_grid * 1e3, a2, shading="auto",
            rasterized=True,
        )
        fig.colorbar(mesh, ax=ax, label=r"$|R|^2$")
        ax.set_xlabel(r"detuning $\Delta$ ($\Gamma_0$)")
        ax.set_ylabel(r"$\varphi$ (mrad)")
    return _finish(fig, path)


def rocking_figure(spectrum, path):
    """|R|^2 versus angle at fixed detuning."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.semilogy(spectrum.phi_grid * 1e3, spectrum.abs2[:, 0], lw=1.2)
    ax.set_xlabel(r"$\varphi$ (mrad)")
    ax.set_ylabel(r"$|R|^2$")
    ax.set_title(f"detuning = {spectrum.delta_grid[0]:.4g} $\\Gamma_0$")
    return _finish(fig, path)


def compare_figure(model, oracle, path):
    """Model and oracle |R|^2 overlaid (first angle of the grid)."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    i = model.phi_grid.size // 2
    ax.plot(model.delta_grid, model.abs2[i], lw=1.4, label="quantum model")
    ax.plot(oracle.delta_grid, oracle.abs2[i], "--", lw=1.2, label="semiclassical")
    ax.set_xlabel(r"detuning $\Delta$ ($\Gamma_0$)")
    ax.set_ylabel(r"$|R|^2$")
    ax.legend(frameon=False)
    ax.set_title(f"phi = {model.phi_grid[i] * 1e3:.4g} mrad")
    return _finish(fig, path)


def collective_figure(dphi_mrad, ng, ngamma, path):
    """Collective shift and enhanced decay versus deviation angle."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.4, 3.6))
    ax1.plot(dphi_mrad, ng, lw=1.2)
    ax1.set_xlabel(r"$\Delta\varphi$ (mrad)")
    ax1.set_ylabel(r"$Ng$ ($\Gamma_0$)")
    ax2.plot(dphi_mrad, ngamma, lw=1.2, color="C3")
    ax2.set_xlabel(r"$\Delta\varphi$ (mrad)")
    ax2.set_ylabel(r"$N\gamma$ ($\Gamma_0$)")
    return _finish(fig, path)


def fano_figure(dphi_mrad, fp, fit, path):
    """Sampled decay-enhancement curve with its fitted asymmetric profile."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(dphi_mrad, fp, "o", ms=3.5, label=r"$F_p = N\gamma/\Gamma_0$")
    grid = np.linspace(dphi_mrad.min(), dphi_mrad.max(), 400)
    ax.plot(grid, fit(grid * 1e-3), lw=1.3, color="C3",
            label=f"fit, q = {fit.q:.3g}")
    ax.set_xlabel(r"$\Delta\varphi$ (mrad)")
    ax.set_ylabel(r"$F_p$")
    ax.legend(frameon=False)
    return _finish(fig, path)
