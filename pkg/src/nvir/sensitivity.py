"""DC, AC and spin-projection sensitivities, readout fidelity, pulsed readout timing.

Sensitivities are returned per root area, in T s^1/2 m. Divide by the pixel
side (``per_pixel``) to get T/sqrt(Hz) for a square pixel of that side.
"""
from dataclasses import dataclass, field, asdict
import logging
import math

import numpy as np

from .detection import _check_same_grid, absorption_fraction
from .errors import ValidationError
from .fieldmap import cell_weights, integration_weights
from .optimize import golden_section_max
from .params import G_FACTOR, HBAR, MU_B, OpticalDrive, photon_energy, LAMBDA_PROBE
from .rates import generator_matrix, propagate, steady_state_batch

log = logging.getLogger(__name__)

GAMMA_TO_TESLA = HBAR / (G_FACTOR * MU_B)  # T s
DEFAULT_T_INIT = 5e-6


def per_pixel(eta, L=1e-6):
    """Sensitivity of one L x L pixel (T/sqrt(Hz)) from a per-root-area value."""
    return eta / L


def eta_cw(snr_per_root_area_time, T2_star):
    """CW-ODMR sensitivity with linewidth 2/T2* (no power broadening).

    Returns ``math.inf`` when there is no signal.
    """
    if snr_per_root_area_time < 0:
        raise ValidationError("SNR must be nonnegative")
    if snr_per_root_area_time == 0:
        return math.inf
    return GAMMA_TO_TESLA * (2 / T2_star) / snr_per_root_area_time


def eta_spin_projection(n_NV, d_NV, tau):
    for name, v in (("n_NV", n_NV), ("d_NV", d_NV), ("tau", tau)):
        if v <= 0:
            raise ValidationError("must be positive", key=name)
    return GAMMA_TO_TESLA / math.sqrt(n_NV * d_NV * tau)


def eta_ac(n_NV, d_NV, T2, sigma_R, tau, t_I, t_R):
    """Hahn-echo ensemble sensitivity with readout noise sigma_R and dead time t_I + t_R."""
    if tau <= 0 or t_I < 0 or t_R < 0:
        raise ValidationError("tau must be positive and overheads nonnegative")
    return (
        eta_spin_projection(n_NV, d_NV, tau)
        * sigma_R
        * math.exp(tau / T2)
        * math.sqrt(1 + (t_I + t_R) / tau)
    )


def optimal_tau(T2, overhead, n_scan=400):
    """Free-precession time minimizing the AC sensitivity for fixed overhead t_I + t_R.

    Log-spaced scan over (0, 3 T2] then golden-section refinement on log(tau).
    """
    def log_cost(log_tau):
        tau = math.exp(log_tau)
        return tau / T2 + 0.5 * math.log(tau + overhead) - math.log(tau)

    grid = np.linspace(math.log(T2 * 1e-4), math.log(3 * T2), n_scan)
    costs = [log_cost(g) for g in grid]
    k = int(np.argmin(costs))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, n_scan - 1)]
    x, _ = golden_section_max(lambda g: -log_cost(g), lo, hi, tol=1e-12)
    return math.exp(x)


def readout_fidelity(a, b):
    """sigma_R = sqrt(1 + 2(a+b)/(a-b)^2); inf when the states are indistinguishable."""
    if a == b:
        return math.inf
    diff = abs(a - b)
    # divide twice: (a - b)**2 underflows for subnormal differences
    return math.sqrt(1 + 2 * (a + b) / diff / diff)


def photons_per_spin(times, I_out_off, I_out_on, t_read, L, n_spins, wavelength=LAMBDA_PROBE):
    """Detected photons per spin for ms = 0 (a, MW off) and ms = +-1 (b, pi-pulsed).

    ``I_out_*`` are camera intensities (W/m^2) sampled at ``times`` (from 0).
    """
    if t_read <= 0:
        raise ValidationError("t_read must be positive")
    w = integration_weights(times, t_read)
    scale = L**2 / (photon_energy(wavelength) * n_spins)
    a = float(w @ np.broadcast_to(I_out_off, np.shape(times))) * scale
    b = float(w @ np.broadcast_to(I_out_on, np.shape(times))) * scale
    return a, b


@dataclass(frozen=True)
class ReadoutOptimum:
    t_read: float
    value: float
    boundary: str = None  # "lower", "upper" or None for an interior optimum


def time_averaged_signal(times, contrast, t):
    return float(integration_weights(times, t) @ contrast) / (t - times[0])


def optimal_readout_from_trace(times, contrast):
    """Maximize (1/t) * integral_0^t contrast over the sampled horizon."""
    times = np.asarray(times, float)
    contrast = np.asarray(contrast, float)
    cum = np.concatenate([[0.0], np.cumsum(np.diff(times) * (contrast[1:] + contrast[:-1]) / 2)])
    F = cum[1:] / (times[1:] - times[0])
    k = int(np.argmax(F)) + 1
    if k == 1 and F[0] >= F[1]:
        return ReadoutOptimum(float(times[1]), float(F[0]), "lower")
    if k == len(times) - 1:
        log.warning("readout contrast has not decayed within t_max=%.3g s", times[-1])
        return ReadoutOptimum(float(times[-1]), float(F[-1]), "upper")
    t, v = golden_section_max(
        lambda t: time_averaged_signal(times, contrast, t), times[k - 1], times[k + 1], tol=1e-12
    )
    return ReadoutOptimum(float(t), float(v))


@dataclass(frozen=True)
class PulsedReadout:
    times: np.ndarray
    n6_contrast: np.ndarray  # probe-weighted <n6_pi - n6_0> / n_NV
    I_NV_off: np.ndarray  # fractional absorption vs time, ms = 0 branch
    I_NV_on: np.ndarray  # ms = +-1 branch (after an ideal pi pulse)


def pulsed_readout(params, drive, map_pump, map_probe, d, t_max=10e-6, n_samples=1000, R0=1.0):
    """Time-resolved readout after green initialization.

    Both branches start from the green-only steady state (MW off); the
    microwave branch gets an ideal pi pulse (ms = 0 <-> ms = +-1 swap) before
    green + IR readout without microwaves.
    """
    _check_same_grid(map_pump, map_probe)
    init_drive = OpticalDrive(I_t=drive.I_t, I_s=0.0, mw_on=False,
                              lambda_pump=drive.lambda_pump, lambda_probe=drive.lambda_probe)
    read_drive = OpticalDrive(I_t=drive.I_t, I_s=drive.I_s, mw_on=False,
                              lambda_pump=drive.lambda_pump, lambda_probe=drive.lambda_probe)
    if drive.I_t <= 0 or np.any(map_pump.values <= 0):
        raise ValidationError("pulsed readout needs a green pump reaching every cell")
    G0 = generator_matrix(params, init_drive, map_pump.values, map_probe.values)
    init = steady_state_batch(G0, 1.0)
    flipped = init.copy()
    flipped[..., [0, 1]] = init[..., [1, 0]]

    G = generator_matrix(params, read_drive, map_pump.values, map_probe.values)
    times = np.linspace(0.0, t_max, n_samples + 1)
    off = propagate(G, init, times)
    on = propagate(G, flipped, times)

    W = cell_weights(map_probe, d) * map_probe.values
    W = W / W.sum()
    n6 = np.tensordot(on[..., 5] - off[..., 5], W, axes=([-2, -1], [0, 1]))
    n = params.n_NV
    I_off = absorption_fraction(n * (off[..., 5] - off[..., 4]), map_probe, params.sigma_s, d, R0)
    I_on = absorption_fraction(n * (on[..., 5] - on[..., 4]), map_probe, params.sigma_s, d, R0)
    return PulsedReadout(times, n6, I_off, I_on)


def optimize_readout_time(params, drive, map_pump, map_probe, d, t_max=10e-6, n_samples=1000):
    trace = pulsed_readout(params, drive, map_pump, map_probe, d, t_max, n_samples)
    return optimal_readout_from_trace(trace.times, trace.n6_contrast), trace


@dataclass
class SensitivityReport:
    I_t: float  # W/m^2
    I_s: float
    d_NV: float  # m
    mode: str
    eta_cw: float  # T s^1/2 m
    eta_ac: float
    eta_sp: float  # spin-projection limit at tau = T2*
    sigma_R: float
    t_read_opt: float  # s
    snr: float = math.nan  # per sqrt(t_mea L^2)
    R: float = math.nan
    delta_phi_LO: float = math.nan
    tau_ac: float = math.nan
    A_pixel_on: float = math.nan
    A_pixel_off: float = math.nan
    phase_source: str = "linear"
    maps_synthetic: bool = True
    status: str = "ok"
    extra: dict = field(default_factory=dict)

    @property
    def measurable(self):
        return math.isfinite(self.eta_cw) and math.isfinite(self.sigma_R)

    def check_invariants(self):
        """Photon-limited readout cannot beat the spin-projection limit."""
        problems = []
        if self.sigma_R < 1:
            problems.append("sigma_R < 1")
        eta_sp_ac = self.extra.get("eta_sp_ac")
        if eta_sp_ac is not None and self.eta_ac < eta_sp_ac * (1 - 1e-12):
            problems.append("eta_ac below its spin-projection limit")
        if self.eta_cw < self.eta_sp:
            problems.append("eta_cw below spin-projection limit")
        return problems

    def as_dict(self):
        return asdict(self)

    def to_text(self):
        """``key: value`` lines; infinities read "unmeasurable"."""
        lines = []
        for k, v in self.as_dict().items():
            if k == "extra":
                lines += [f"{kk}: {_text(vv)}" for kk, vv in sorted(v.items())]
            else:
                lines.append(f"{k}: {_text(v)}")
        return "\n".join(lines) + "\n"


def _text(v):
    if isinstance(v, float):
        if math.isinf(v):
            return "unmeasurable"
        return format(v, ".10g")
    return str(v)
