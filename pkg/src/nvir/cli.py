"""``nvir`` command-line front end.

Exit status: 0 success, 1 validation or usage error, 2 numerical failure.

Command-line quantities use figure units: intensities in mW/um^2, depths and
pixel sides in um, lengths given to ``dispersion`` in metres, sensitivities
written as nT Hz^-1/2 um (equivalently nT/sqrt(Hz) for a 1 um^2 pixel).
The config file itself is SI throughout.
"""
import argparse
from dataclasses import replace
import logging
import math
import os
from pathlib import Path
import sys

import numpy as np

from . import output, plotting
from .config import ENV_VAR, load_config_file
from .detection import optimize_homodyne
from .errors import DegenerateSteadyState, NumericalError, NvirError, ValidationError
from .fieldmap import average_enhancement, figure_of_merit, load_field_map
from .params import MW_PER_UM2, UM
from .photonics import rwa_incidence_angle, rwa_period, spp_bw_mismatch
from .pipeline import (
    MODES,
    SWEEP_KEYS,
    SweepAxis,
    SweepSpec,
    apply_point,
    build_maps,
    cw_state,
    run_sweep,
)
from .rates import LEVEL_LABELS, build_generator, evolve, steady_state
from .sensitivity import optimize_readout_time, time_averaged_signal

log = logging.getLogger("nvir")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; we reserve 2 for numerical failures."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


# ------------------------------------------------------------ arg parsing


def parse_sweep(text):
    """``NAME:MIN:MAX:COUNT[:log]`` in figure units."""
    parts = text.split(":")
    if len(parts) not in (4, 5):
        raise argparse.ArgumentTypeError(f"expected NAME:MIN:MAX:COUNT[:log|linear], got {text!r}")
    try:
        lo, hi, count = float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number in sweep {text!r}") from None
    scale = parts[4] if len(parts) == 5 else "linear"
    try:
        return SweepAxis(parts[0], lo, hi, count, scale)
    except ValidationError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def parse_override(text):
    key, sep, value = text.partition("=")
    if not sep or key not in SWEEP_KEYS:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE with KEY in {', '.join(SWEEP_KEYS)}")
    try:
        return key, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number {value!r} for {key}") from None


def nonzero_order(text):
    try:
        m = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"order must be an integer, got {text!r}") from None
    if m == 0:
        raise argparse.ArgumentTypeError("order m = 0 carries no grating momentum")
    return m


def positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser():
    p = _Parser(prog="nvir", description="NV-ensemble IR-absorption magnetometry model")
    p.add_argument("--config", help=f"JSON config (SI units); defaults to ${ENV_VAR}")
    p.add_argument("--out", help="output directory for CSV and SVG files (stdout CSV if omitted)")
    p.add_argument("--jobs", type=positive_int, default=None, help="sweep workers (default: logical cores)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def overrides(sp):
        sp.add_argument("--set", dest="overrides", type=parse_override, action="append", default=[],
                        metavar="KEY=VALUE", help="fixed override in figure units")

    s = sub.add_parser("steady", help="steady-state populations for MW on/off")
    overrides(s)
    s.add_argument("--sweep", type=parse_sweep, action="append", default=[], metavar="NAME:MIN:MAX:COUNT[:log]")
    s.add_argument("--mw", choices=("on", "off", "both"), default="both")
    s.add_argument("--enh-pump", type=float, default=1.0, help="local |E/E0|^2 at 532 nm")
    s.add_argument("--enh-probe", type=float, default=1.0, help="local |E/E0|^2 at 1042 nm")

    e = sub.add_parser("evolve", help="population transient under green + IR readout")
    overrides(e)
    e.add_argument("--t-end", type=float, default=10e-6, help="s")
    e.add_argument("--sampling", type=float, default=10e-9, help="s")
    e.add_argument("--initial", choices=("green", "ground"), default="green",
                   help="green-only steady state, or the whole ensemble in |1>")
    e.add_argument("--pi-pulse", action="store_true", help="swap the ground sublevels before readout")
    e.add_argument("--mw", action="store_true", help="keep microwaves on during the transient")
    e.add_argument("--enh-pump", type=float, default=1.0)
    e.add_argument("--enh-probe", type=float, default=1.0)

    se = sub.add_parser("sensitivity", help="full pipeline over a parameter sweep")
    overrides(se)
    se.add_argument("--sweep", type=parse_sweep, action="append", default=[], metavar="NAME:MIN:MAX:COUNT[:log]")
    se.add_argument("--mode", choices=MODES + ("both",), default="homodyne")
    se.add_argument("--cw-only", action="store_true", help="skip the pulsed (AC) readout")

    o = sub.add_parser("optimize", help="homodyne (R, phase) or pulsed readout time")
    o.add_argument("target", choices=("homodyne", "readout-time"))
    overrides(o)
    o.add_argument("--n-R", type=positive_int, default=41)
    o.add_argument("--n-phi", type=positive_int, default=72)

    d = sub.add_parser("dispersion", help="grating design equations")
    dsub = d.add_subparsers(dest="query", required=True, parser_class=_Parser)
    dp = dsub.add_parser("period", help="grating period for an RWA at given incidence")
    dp.add_argument("--theta", type=float, default=0.0, help="incidence angle, degrees")
    da = dsub.add_parser("angle", help="incidence angle for an RWA at given period")
    da.add_argument("--p", type=float, required=True, help="period, m")
    dm = dsub.add_parser("mismatch", help="SPP-Bloch-wave momentum mismatch")
    dm.add_argument("--p", type=float, required=True, help="period, m")
    dm.add_argument("--theta", type=float, default=0.0, help="incidence angle, degrees")
    for q, order_type in ((dp, nonzero_order), (da, nonzero_order), (dm, int)):
        q.add_argument("--lambda", dest="wavelength", type=float, required=True, help="vacuum wavelength, m")
        q.add_argument("--n", dest="n_d", type=float, default=2.4, help="dielectric index")
        q.add_argument("--m", dest="m_order", type=order_type, default=1, help="diffraction order")

    f = sub.add_parser("fieldmap-stats", help="depth-averaged enhancement and figure of merit")
    f.add_argument("--map", action="append", default=[], help="field-map CSV (repeatable); config maps if omitted")
    f.add_argument("--depths", type=float, nargs="+", help="sensing depths in um")
    return p


# ------------------------------------------------------------ helpers


def _emit(args, name, command, columns, rows, comments=()):
    """Write ``name`` under --out (returning its path) or print the CSV."""
    if args.out:
        path = Path(args.out) / name
        output.write_csv(path, command, columns, rows, comments)
        return path
    sys.stdout.write(output.write_csv(None, command, columns, rows, comments))
    return None


def _with_overrides(cfg, args):
    return apply_point(cfg, dict(args.overrides))


def _local_generator(cfg, drive, args):
    return build_generator(cfg.effective_params, drive, args.enh_pump, args.enh_probe)


# ------------------------------------------------------------ commands


def cmd_steady(cfg, args):
    cfg = _with_overrides(cfg, args)
    for ax in args.sweep:
        if SWEEP_KEYS[ax.name][0] not in ("drive", "photophysics"):
            raise UsageError(f"steady sweeps drive or photophysics keys, not {ax.name}")
    points = SweepSpec(tuple(args.sweep)).points() if args.sweep else [({}, None)]
    mw_states = {"on": (True,), "off": (False,), "both": (True, False)}[args.mw]
    n = cfg.effective_params.n_NV
    rows, ok = [], 0
    for values, _ in points:
        pcfg = apply_point(cfg, values)
        for mw in mw_states:
            drive = replace(pcfg.drive, mw_on=mw)
            head = (drive.I_t / MW_PER_UM2, drive.I_s / MW_PER_UM2, "on" if mw else "off",
                    args.enh_pump, args.enh_probe)
            try:
                pop = steady_state(_local_generator(pcfg, drive, args), pcfg.effective_params.n_NV)
            except DegenerateSteadyState as exc:
                rows.append(head + (None,) * 9 + (f"degenerate: {exc}",))
                continue
            v = pop.values
            rows.append(head + tuple(v) + (v[5] - v[4], "ok"))
            ok += 1
    columns = ("I_t", "I_s", "mw", "enh_pump", "enh_probe") + LEVEL_LABELS + ("n6_minus_n5", "status")
    comments = (f"# units: I mW/um^2; populations m^-3 (n_NV = {output.fmt(n)})",)
    path = _emit(args, "steady.csv", "steady", columns, rows, comments)
    if path is not None and args.sweep:
        x_name = args.sweep[0].name
        k = columns.index(x_name) if x_name in columns else None
        series = {}
        for r in rows:
            if r[-1] == "ok":
                series.setdefault(f"n6 - n5, MW {r[2]}", []).append((r[k] if k is not None else None, r[-2] / n))
                series.setdefault(f"n6, MW {r[2]}", []).append((r[k] if k is not None else None, r[10] / n))
        if k is not None and series:
            xs = sorted({x for s in series.values() for x, _ in s})
            plotting.plot_series(
                xs, {lbl: [y for _, y in s] for lbl, s in series.items() if len(s) == len(xs)},
                plotting.AXIS_LABELS.get(x_name, x_name), r"population / $n_{NV}$",
                Path(args.out) / "steady.svg", path, logx=args.sweep[0].scale == "log",
            )
    if ok == 0:
        log.error("no steady state resolved")
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_evolve(cfg, args):
    cfg = _with_overrides(cfg, args)
    params, drive = cfg.effective_params, cfg.drive
    n = params.n_NV
    if args.initial == "green":
        init_drive = replace(drive, I_s=0.0, mw_on=False)
        start = steady_state(_local_generator(cfg, init_drive, args), n).values
    else:
        start = np.zeros(8)
        start[0] = n
    if args.pi_pulse:
        start = start.copy()
        start[[0, 1]] = start[[1, 0]]
    gen = _local_generator(cfg, replace(drive, mw_on=args.mw), args)
    trace = evolve(gen, start, args.t_end, args.sampling, method=cfg.solver.method,
                   rtol=cfg.solver.rtol, atol=cfg.solver.atol)
    rows = [(t,) + tuple(p) for t, p in zip(trace.times, trace.populations)]
    path = _emit(args, "evolve.csv", "evolve", ("time_s",) + LEVEL_LABELS, rows,
                 ("# units: s; populations m^-3",))
    if path is not None:
        plotting.plot_series(
            trace.times * 1e6,
            {lbl: trace.populations[:, k] / n for k, lbl in enumerate(LEVEL_LABELS)},
            r"t ($\mu$s)", r"population / $n_{NV}$", Path(args.out) / "evolve.svg", path,
        )
    if trace.clamped:
        log.info("clamped %d round-off negatives", trace.clamped)
    return EXIT_OK


def cmd_sensitivity(cfg, args):
    modes = MODES if args.mode == "both" else (args.mode,)
    spec = SweepSpec(tuple(args.sweep), modes, dict(args.overrides), pulsed=not args.cw_only)
    results = run_sweep(cfg, spec, args.jobs)
    base = apply_point(cfg, spec.overrides)
    srows, drows = [], []
    for values, mode, report, err in results:
        srows.append(output.sensitivity_row(report, values, mode, err, base))
        drows.append(output.detection_row(report, values, mode, err, base))
        if err is not None:
            log.warning("point %s (%s) failed: %s", values, mode, err)
    path = _emit(args, "sensitivity.csv", "sensitivity", output.SENSITIVITY_COLUMNS, srows, (output.UNITS_LINE,))
    if args.out:
        output.write_csv(Path(args.out) / "detection.csv", "sensitivity", output.DETECTION_COLUMNS, drows,
                         (output.UNITS_LINE,))
        _plot_sensitivity(spec, results, base, path)

    failures = [err for *_, err in results if err is not None]
    if len(failures) == len(results):
        return EXIT_VALIDATION if all(e.kind == "validation" for e in failures) else EXIT_NUMERICAL
    return EXIT_OK


def _plot_sensitivity(spec, results, cfg, csv_path):
    if spec.axes:
        x_name = spec.axes[0].name
    else:
        x_name = "I_t"
    scale = 1e9 / UM
    curves, ref = {}, {}
    for values, mode, report, err in results:
        if report is None:
            continue
        rest = ", ".join(f"{k}={v:.3g}" for k, v in values.items() if k != x_name)
        label = f"{mode} {rest}".strip()
        x = values.get(x_name, getattr(getattr(cfg, SWEEP_KEYS[x_name][0]), SWEEP_KEYS[x_name][1]) / SWEEP_KEYS[x_name][2])
        xs, cw, ac = curves.setdefault(label, ([], [], []))
        xs.append(x)
        cw.append(report.eta_cw * scale)
        ac.append(report.eta_ac * scale)
        ref[x] = report.extra.get("eta_sp_ac", report.eta_sp) * scale
    if not curves:
        return
    rx = sorted(ref)
    plotting.plot_sensitivity(
        x_name,
        {k: (np.array(v[0]), np.array(v[1]), np.array(v[2]) if spec.pulsed else None) for k, v in curves.items()},
        (np.array(rx), np.array([ref[x] for x in rx])),
        Path(csv_path).with_suffix(".svg"),
        csv_path,
    )


def cmd_optimize(cfg, args):
    cfg = _with_overrides(cfg, args)
    maps = build_maps(cfg)
    if args.target == "homodyne":
        sig = cw_state(cfg, maps).signal
        try:
            opt = optimize_homodyne(sig, cfg.detection, cfg.drive.I_s, n_R=args.n_R, n_phi=args.n_phi,
                                    keep_grid=True)
        except NumericalError as exc:
            print(f"status: degenerate ({exc})")
            return EXIT_NUMERICAL
        Rs, phis, vals = opt.grid
        rows = [(R, phi, vals[i, j]) for i, R in enumerate(Rs) for j, phi in enumerate(phis)]
        comments = (
            f"# optimum R={output.fmt(opt.R)} dphi_LO={output.fmt(opt.delta_phi_LO)} "
            f"SNR_per_sqrt_area={output.fmt(opt.snr)}",
            "# units: dphi_LO rad; SNR_per_sqrt_area s^-1/2 m^-1",
        )
        path = _emit(args, "homodyne_contour.csv", "optimize homodyne",
                     ("R", "dphi_LO", "SNR_per_sqrt_area"), rows, comments)
        if path is not None:
            plotting.plot_contour(Rs, phis, vals, (opt.R, opt.delta_phi_LO),
                                  Path(args.out) / "homodyne_contour.svg", path)
        _print_report(
            status="ok", R=opt.R, dphi_LO_rad=opt.delta_phi_LO, dphi_LO_pi=opt.delta_phi_LO / math.pi,
            SNR_per_sqrt_area=opt.snr, A_pixel_on=sig.A_pixel_on, A_pixel_off=sig.A_pixel_off,
            to=sys.stderr if path is None else sys.stdout,
        )
        return EXIT_OK

    ro = cfg.readout
    opt, trace = optimize_readout_time(cfg.effective_params, cfg.drive, *maps, cfg.geometry.d_NV,
                                       ro.t_max, ro.n_samples)
    avg = [math.nan] + [time_averaged_signal(trace.times, trace.n6_contrast, t) for t in trace.times[1:]]
    rows = list(zip(trace.times, trace.n6_contrast, trace.I_NV_off, trace.I_NV_on, avg))
    path = _emit(args, "readout.csv", "optimize readout-time",
                 ("time_s", "n6_contrast", "I_NV_off", "I_NV_on", "mean_contrast"), rows,
                 (f"# optimum t_read={output.fmt(opt.t_read)} boundary={opt.boundary or 'interior'}",))
    if path is not None:
        plotting.plot_series(trace.times[1:] * 1e6, {"running mean contrast": avg[1:],
                                                      "n6 contrast": trace.n6_contrast[1:]},
                             r"t ($\mu$s)", "contrast / $n_{NV}$", Path(args.out) / "readout.svg", path)
    status = "ok" if opt.boundary is None else f"optimum at {opt.boundary} boundary"
    _print_report(status=status, t_read_s=opt.t_read, mean_contrast=opt.value,
                  to=sys.stderr if path is None else sys.stdout)
    return EXIT_OK


def cmd_dispersion(cfg, args):
    lam, n_d, m = args.wavelength, args.n_d, args.m_order
    if lam <= 0 or n_d <= 0:
        raise UsageError("--lambda and --n must be positive")
    eps_m = cfg.metal.permittivity(lam)
    if args.query == "period":
        theta = math.radians(args.theta)
        p = rwa_period(lam, n_d, m, theta)
        _print_report(p_m=p, p_nm=p / 1e-9, theta_deg=args.theta,
                      spp_bw_mismatch_per_m=spp_bw_mismatch(lam, n_d, m, p, eps_m, theta))
    elif args.query == "angle":
        theta = rwa_incidence_angle(lam, n_d, m, args.p)
        _print_report(theta_abs_deg=abs(math.degrees(theta)), sign="+" if theta >= 0 else "-",
                      theta_deg=math.degrees(theta), theta_rad=theta,
                      spp_bw_mismatch_per_m=spp_bw_mismatch(lam, n_d, m, args.p, eps_m, theta))
    else:
        theta = math.radians(args.theta)
        dk = spp_bw_mismatch(lam, n_d, m, args.p, eps_m, theta)
        _print_report(spp_bw_mismatch_per_m=dk, relative=dk / (2 * math.pi * n_d / lam))
    return EXIT_OK


def cmd_fieldmap_stats(cfg, args):
    if args.map:
        maps = [(Path(m).name, load_field_map(m)) for m in args.map]
    else:
        pump, probe = build_maps(cfg)
        maps = [("pump", pump), ("probe", probe)]
    n = cfg.effective_params.n_NV
    rows = []
    for name, fmap in maps:
        depths = args.depths or list(np.round(np.linspace(0.5, fmap.y_max / UM, 20), 6))
        for d_um in depths:
            geom = replace(cfg.geometry, d_NV=d_um * UM)
            rows.append((name, fmap.wavelength, d_um, average_enhancement(fmap, d_um * UM),
                         figure_of_merit(fmap, geom, n), fmap.synthetic))
    columns = ("map", "wavelength_m", "d_um", "mean_enh", "figure_of_merit", "synthetic")
    path = _emit(args, "fieldmap_stats.csv", "fieldmap-stats", columns, rows)
    if path is not None:
        series = {}
        for r in rows:
            series.setdefault(r[0], ([], []))
            series[r[0]][0].append(r[2])
            series[r[0]][1].append(r[3])
        first = next(iter(series.values()))[0]
        plotting.plot_series(first, {k: v[1] for k, v in series.items() if v[0] == first},
                             r"$d$ ($\mu$m)", r"$\langle|E/E_0|^2\rangle$", Path(args.out) / "fieldmap_stats.svg",
                             path)
    return EXIT_OK


def _print_report(to=None, **items):
    to = to or sys.stdout
    for k, v in items.items():
        print(f"{k}: {output.fmt(v)}", file=to)


COMMANDS = {
    "steady": cmd_steady,
    "evolve": cmd_evolve,
    "sensitivity": cmd_sensitivity,
    "optimize": cmd_optimize,
    "dispersion": cmd_dispersion,
    "fieldmap-stats": cmd_fieldmap_stats,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config_file(args.config)
        if args.out:
            os.makedirs(args.out, exist_ok=True)
        return COMMANDS[args.command](cfg, args)
    except ValidationError as exc:
        print(f"nvir: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NvirError as exc:
        print(f"nvir: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
