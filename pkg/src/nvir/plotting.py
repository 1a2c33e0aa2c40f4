"""Matplotlib figures for the CLI outputs (SVG, headless)."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .output import save_svg  # noqa: E402

# stable SVG ids so reruns diff cleanly
matplotlib.rcParams["svg.hashsalt"] = "nvir"

AXIS_LABELS = {
    "I_t": r"$I_t$ (mW/$\mu$m$^2$)",
    "I_s": r"$I_s$ (mW/$\mu$m$^2$)",
    "d_NV": r"$d_{NV}$ ($\mu$m)",
    "L": r"$L$ ($\mu$m)",
    "n_NV": r"$n_{NV}$ (m$^{-3}$)",
    "Omega_R": r"$\Omega_R$ (s$^{-1}$)",
}


def _finish(fig, path, csv_path):
    fig.tight_layout()
    save_svg(fig, path, csv_path)
    plt.close(fig)


def plot_sensitivity(x_name, curves, reference, path, csv_path=None):
    """``curves``: {label: (x, eta_cw, eta_ac)}; ``reference``: (x, eta_sp). Units nT Hz^-1/2 um."""
    fig, ax = plt.subplots(figsize=(5, 3.6))
    styles = {"homodyne": "-", "direct": ":"}
    for label, (x, cw, ac) in curves.items():
        ls = styles.get(label.split()[0], "-")
        ax.plot(x, cw, ls, marker="o", ms=3, label=f"{label} CW")
        if ac is not None and np.any(np.isfinite(ac)):
            ax.plot(x, ac, ls, marker="s", ms=3, label=f"{label} AC")
    rx, ry = reference
    ax.plot(rx, ry, "k-", lw=1.5, label="spin projection")
    ax.set_xlabel(AXIS_LABELS.get(x_name, x_name))
    ax.set_ylabel(r"$\eta$ (nT Hz$^{-1/2}$ $\mu$m)")
    ax.set_xscale("log" if np.ptp(np.log10(rx)) > 1.5 else "linear")
    ax.set_yscale("log")
    ax.legend(fontsize=7)
    _finish(fig, path, csv_path)


def plot_contour(Rs, phis, snr, optimum, path, csv_path=None):
    fig, ax = plt.subplots(figsize=(5, 3.6))
    cs = ax.contourf(phis / np.pi, Rs, snr, levels=30)
    fig.colorbar(cs, ax=ax, label=r"SNR (s$^{-1/2}$ m$^{-1}$)")
    ax.plot(optimum[1] / np.pi, optimum[0], "w+", ms=10)
    ax.set_xlabel(r"$\Delta\phi_{LO}$ ($\pi$)")
    ax.set_ylabel("R")
    _finish(fig, path, csv_path)


def plot_series(x, ys, x_label, y_label, path, csv_path=None, logx=False):
    """Generic line plot; ``ys`` maps label -> y values."""
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for label, y in ys.items():
        ax.plot(x, y, label=label)
    ax.set_xlabel(x_label)
    ax.set_ylabel(y_label)
    if logx:
        ax.set_xscale("log")
    if len(ys) > 1:
        ax.legend(fontsize=7)
    _finish(fig, path, csv_path)
