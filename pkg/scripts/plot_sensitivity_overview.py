"""Overlay the per-I_s sensitivity sweeps written by reproduce_figures.py.

    python scripts/plot_sensitivity_overview.py [FIG_DIR]

Writes ``sensitivity_overview.svg`` into FIG_DIR: CW and pulsed sensitivity
against green intensity, homodyne solid and direct dotted, one colour per
probe intensity, with the spin-projection limit in black.
"""
import csv
from pathlib import Path
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def load(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    return [r for r in csv.DictReader(lines) if r["status"] == "ok"]


def column(rows, mode, key):
    sel = [r for r in rows if r["mode"] == mode]
    return [float(r["I_t"]) for r in sel], [float(r[key]) for r in sel]


def main(root):
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
    spin = None
    for colour, run in zip(("C0", "C1", "C2"), sorted(root.glob("sensitivity_Is_*"))):
        rows = load(run / "sensitivity.csv")
        if not rows:
            continue
        label = f"I_s = {rows[0]['I_s']} mW/um^2"
        for ax, key in zip(axes, ("eta_cw", "eta_ac")):
            for mode, style in (("homodyne", "-"), ("direct", ":")):
                x, y = column(rows, mode, key)
                ax.loglog(x, y, style, color=colour, label=label if mode == "homodyne" else None)
        spin = spin or column(rows, "homodyne", "eta_sp")
    if spin is None:
        sys.exit(f"no sensitivity_Is_* runs under {root}")
    for ax, title in zip(axes, ("CW", "pulsed")):
        ax.loglog(*spin, "k-", lw=1, label="spin projection")
        ax.set_xlabel("I_t (mW/um^2)")
        ax.set_title(title)
    axes[0].set_ylabel("eta (nT Hz^-1/2 um)")
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(root / "sensitivity_overview.svg", metadata={"Date": None})
    print(root / "sensitivity_overview.svg")


if __name__ == "__main__":
    main(Path(sys.argv[1] if len(sys.argv) > 1 else "figures"))
