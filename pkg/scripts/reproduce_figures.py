"""Regenerate every figure dataset through the nvir command line.

    python scripts/reproduce_figures.py [OUT_DIR] [--jobs N]

Each run lands in its own subdirectory of OUT_DIR (default ``figures/``) with
its CSV, SVG and a ``report.txt`` holding whatever the command printed.
"""
import argparse
import contextlib
import io
from pathlib import Path
import sys
import time

from nvir.cli import main

I_T_SWEEP = "I_t:0.01:10:31:log"

RUNS = {
    # ground-singlet population against green intensity, MW on and off
    "populations_vs_green": ["steady", "--sweep", "I_t:0.001:100:41:log"],
    # pulsed readout transient after an ideal pi pulse
    "readout_transient": ["evolve", "--t-end", "10e-6", "--sampling", "10e-9", "--pi-pulse"],
    "readout_time": ["optimize", "readout-time"],
    "homodyne_operating_point": ["optimize", "homodyne"],
    "enhancement_vs_depth": ["fieldmap-stats", "--depths", "0.5", "1", "2", "3", "4", "5", "6", "8", "10"],
    "sensitivity_vs_depth": ["sensitivity", "--cw-only", "--mode", "both", "--sweep", "d_NV:0.5:10:20"],
}
for I_s in ("0.1", "1", "10"):
    RUNS[f"sensitivity_Is_{I_s}"] = ["sensitivity", "--mode", "both", "--set", f"I_s={I_s}", "--sweep", I_T_SWEEP]


def run(name, argv, root, jobs):
    out = root / name
    out.mkdir(parents=True, exist_ok=True)
    full = ["--out", str(out)] + (["--jobs", str(jobs)] if jobs else []) + argv
    buf = io.StringIO()
    t0 = time.perf_counter()
    with contextlib.redirect_stdout(buf):
        code = main(full)
    (out / "report.txt").write_text(buf.getvalue())
    print(f"{name:28s} exit {code}  {time.perf_counter() - t0:6.1f} s  nvir {' '.join(argv)}")
    return code


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", nargs="?", default="figures")
    ap.add_argument("--jobs", type=int, default=None)
    ap.add_argument("--only", nargs="+", choices=sorted(RUNS), help="subset of runs")
    args = ap.parse_args()
    root = Path(args.out)
    codes = [run(name, RUNS[name], root, args.jobs) for name in (args.only or RUNS)]
    sys.exit(max(codes))
