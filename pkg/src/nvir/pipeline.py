"""Full evaluation chain: rates -> absorption -> readout SNR -> sensitivities; sweeps."""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
import logging
import math
import os

import numpy as np

from .detection import (
    AbsorptionSignal,
    homodyne_output,
    nv_phase,
    optimize_homodyne,
    pixel_absorption,
    resolve_populations,
    snr_density,
)
from .errors import DegenerateOptimum, NvirError, UndefinedSNR, ValidationError
from .fieldmap import default_maps, load_field_map
from .params import MW_PER_UM2, UM
from .sensitivity import (
    SensitivityReport,
    eta_ac,
    eta_cw,
    eta_spin_projection,
    optimal_tau,
    optimize_readout_time,
    photons_per_spin,
    readout_fidelity,
)

log = logging.getLogger(__name__)

MODES = ("homodyne", "direct")


def build_maps(cfg):
    """(pump, probe) maps: files from the config, or the synthetic demo maps."""
    src = cfg.field_maps
    synth_pump, synth_probe = default_maps(p=cfg.geometry.p, y_max=src.y_max, nx=src.nx, ny=src.ny)
    pump = load_field_map(src.pump, wavelength=cfg.drive.lambda_pump) if src.pump else synth_pump
    probe = load_field_map(src.probe, wavelength=cfg.drive.lambda_probe) if src.probe else synth_probe
    if src.pump and not src.probe or src.probe and not src.pump:
        raise ValidationError("give both pump and probe maps or neither", key="field_maps")
    return pump, probe


@dataclass
class CWState:
    pop_on: np.ndarray
    pop_off: np.ndarray
    signal: AbsorptionSignal


def cw_state(cfg, maps, d=None):
    params = cfg.effective_params
    pump, probe = maps
    d = cfg.geometry.d_NV if d is None else d
    if d > probe.y_max * (1 + 1e-12):
        raise ValidationError(f"sensing depth {d:.3g} m exceeds field-map extent", key="geometry.d_NV")
    pop_on = resolve_populations(pump, probe, params, replace(cfg.drive, mw_on=True))
    pop_off = resolve_populations(pump, probe, params, replace(cfg.drive, mw_on=False))
    signal = pixel_absorption(pop_on, pop_off, probe, params, cfg.geometry, d, cfg.detection)
    return CWState(pop_on, pop_off, signal)


def _camera_intensity(I_NV, det, I_s, mode, R, phi):
    r = np.sqrt(det.R0 * np.clip(1 - I_NV, 0, None))
    if mode == "direct":
        return I_s * r**2
    dphi = nv_phase(np.clip(I_NV * det.R0, 0, None), det)
    return I_s * homodyne_output(r, dphi, R, phi)


def evaluate(cfg, maps=None, mode="homodyne", pulsed=True):
    """SensitivityReport for the drive and geometry in ``cfg``."""
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}", key="mode")
    maps = maps or build_maps(cfg)
    params = cfg.effective_params
    geom, det, drive, ro = cfg.geometry, cfg.detection, cfg.drive, cfg.readout
    n, d = params.n_NV, geom.d_NV
    eta_sp = eta_spin_projection(n, d, params.T2_star)
    base = dict(
        I_t=drive.I_t,
        I_s=drive.I_s,
        d_NV=d,
        mode=mode,
        eta_sp=eta_sp,
        phase_source=det.phase_source,
        maps_synthetic=bool(maps[0].synthetic or maps[1].synthetic),
    )
    state = cw_state(cfg, maps)
    sig = state.signal
    base.update(A_pixel_on=sig.A_pixel_on, A_pixel_off=sig.A_pixel_off)

    R, phi = 1.0, 0.0
    try:
        if mode == "homodyne":
            opt = optimize_homodyne(sig, det, drive.I_s)
            R, phi, snr = opt.R, opt.delta_phi_LO, opt.snr
        else:
            snr = snr_density(sig, det, drive.I_s, "direct")
    except (DegenerateOptimum, UndefinedSNR) as exc:
        return SensitivityReport(
            eta_cw=math.inf, eta_ac=math.inf, sigma_R=math.inf, t_read_opt=math.nan,
            snr=0.0, status=f"unmeasurable: {exc}", **base,
        )
    if snr == 0:
        return SensitivityReport(
            eta_cw=math.inf, eta_ac=math.inf, sigma_R=math.inf, t_read_opt=math.nan,
            snr=0.0, status="unmeasurable: zero contrast", **base,
        )
    report = SensitivityReport(
        eta_cw=eta_cw(snr, params.T2_star), eta_ac=math.nan, sigma_R=math.nan,
        t_read_opt=math.nan, snr=snr, R=R, delta_phi_LO=phi, **base,
    )
    if not pulsed:
        return report

    opt_t, trace = optimize_readout_time(params, drive, *maps, d, ro.t_max, ro.n_samples)
    t_R = opt_t.t_read
    I_off = _camera_intensity(trace.I_NV_off, det, drive.I_s, mode, R, phi)
    I_on = _camera_intensity(trace.I_NV_on, det, drive.I_s, mode, R, phi)
    a, b = photons_per_spin(trace.times, I_off, I_on, t_R, geom.L, n * d * geom.L**2)
    sigma_R = readout_fidelity(a, b)
    tau = optimal_tau(params.T2, ro.t_init + t_R)
    report.sigma_R = sigma_R
    report.t_read_opt = t_R
    report.tau_ac = tau
    report.eta_ac = eta_ac(n, d, params.T2, sigma_R, tau, ro.t_init, t_R)
    report.extra.update(
        photons_a=a, photons_b=b, readout_boundary=opt_t.boundary,
        eta_sp_ac=eta_spin_projection(n, d, tau),
    )
    if opt_t.boundary:
        report.status = f"ok (readout optimum at {opt_t.boundary} boundary)"
    return report


# ---------------------------------------------------------------- sweeps

# sweepable names -> (config section, field, figure-unit scale to SI)
SWEEP_KEYS = {
    "I_t": ("drive", "I_t", MW_PER_UM2),
    "I_s": ("drive", "I_s", MW_PER_UM2),
    "d_NV": ("geometry", "d_NV", UM),
    "L": ("geometry", "L", UM),
    "n_NV": ("photophysics", "n_NV", 1.0),
    "Omega_R": ("photophysics", "Omega_R", 1.0),
}


@dataclass(frozen=True)
class SweepAxis:
    name: str
    min: float
    max: float
    count: int
    scale: str = "linear"

    def __post_init__(self):
        if self.name not in SWEEP_KEYS:
            raise ValidationError(f"unknown sweep key (allowed: {', '.join(SWEEP_KEYS)})", key=self.name)
        if self.count < 2:
            raise ValidationError("count must be >= 2", key=f"{self.name}.count")
        if not self.min < self.max:
            raise ValidationError("min must be < max", key=f"{self.name}.range")
        if self.scale not in ("linear", "log"):
            raise ValidationError("scale must be linear or log", key=f"{self.name}.scale")
        if self.scale == "log" and self.min <= 0:
            raise ValidationError("log scale needs min > 0", key=f"{self.name}.range")

    def values(self):
        """Values in figure units (mW/um^2, um, SI for the rest)."""
        if self.scale == "log":
            return np.geomspace(self.min, self.max, self.count)
        return np.linspace(self.min, self.max, self.count)


@dataclass(frozen=True)
class SweepSpec:
    axes: tuple
    modes: tuple = ("homodyne",)
    overrides: dict = field(default_factory=dict)
    pulsed: bool = True

    def points(self):
        """Cartesian product in deterministic order: axes outer to inner, then mode."""
        grids = np.meshgrid(*[ax.values() for ax in self.axes], indexing="ij")
        flat = [g.ravel() for g in grids]
        out = []
        for k in range(flat[0].size if flat else 1):
            for mode in self.modes:
                out.append(({ax.name: float(f[k]) for ax, f in zip(self.axes, flat)}, mode))
        return out


def apply_point(cfg, values):
    for name, v in values.items():
        section, key, unit = SWEEP_KEYS[name]
        cfg = replace(cfg, **{section: replace(getattr(cfg, section), **{key: v * unit})})
    return cfg


@dataclass(frozen=True)
class SweepError:
    kind: str  # "validation" or "numerical"
    message: str

    def __str__(self):
        return self.message


def _run_point(args):
    cfg, values, mode, pulsed = args
    try:
        point_cfg = apply_point(cfg, values)
        return evaluate(point_cfg, mode=mode, pulsed=pulsed), None
    except ValidationError as exc:
        return None, SweepError("validation", f"{type(exc).__name__}: {exc}")
    except NvirError as exc:
        return None, SweepError("numerical", f"{type(exc).__name__}: {exc}")


def run_sweep(cfg, spec, jobs=None):
    """Evaluate every sweep point; results keep input order.

    Returns a list of (values, mode, report | None, error | None).
    """
    cfg = apply_point(cfg, spec.overrides)
    pts = spec.points()
    tasks = [(cfg, v, m, spec.pulsed) for v, m in pts]
    jobs = jobs or os.cpu_count() or 1
    if jobs == 1 or len(tasks) == 1:
        results = [_run_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_point, tasks))
    return [(v, m, rep, err) for (v, m), (rep, err) in zip(pts, results)]
