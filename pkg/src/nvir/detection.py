"""Pixel absorption, homodyne/direct readout and shot-noise-limited SNR."""
from dataclasses import dataclass, field
import csv
import math
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateOptimum,
    DegenerateSteadyState,
    ExtrapolationError,
    FieldMapFormatError,
    UndefinedSNR,
    UnphysicalAbsorption,
    ValidationError,
)
from .fieldmap import cell_weights
from .optimize import grid_argmax_2d, refine_2d
from .params import LAMBDA_PROBE, photon_energy
from .rates import N_LEVELS, generator_matrix, net_singlet_population, steady_state, steady_state_batch

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class DetectionConfig:
    R: float = 0.87
    delta_phi_LO: float = 1.28 * math.pi
    R0: float = 1.0
    # linear phase model: dphi_NV = phase_kappa * A_pixel (rad per unit absorption)
    phase_kappa: float = -0.5
    # optional (A_pixel, dphi_rad) table; overrides the linear model
    phase_table: tuple = None

    section = "detection"

    def __post_init__(self):
        if not 0 <= self.R <= 1:
            raise ValidationError("must lie in [0, 1]", key=f"{self.section}.R")
        if not 0 < self.R0 <= 1:
            raise ValidationError("must lie in (0, 1]", key=f"{self.section}.R0")
        if not math.isfinite(self.phase_kappa):
            raise ValidationError("must be finite", key=f"{self.section}.phase_kappa")
        if self.phase_table is not None:
            table = tuple((float(a), float(p)) for a, p in self.phase_table)
            A = [a for a, _ in table]
            if len(table) < 2 or any(b <= a for a, b in zip(A, A[1:])):
                raise ValidationError(
                    "needs >= 2 rows with strictly increasing A_pixel",
                    key=f"{self.section}.phase_table",
                )
            object.__setattr__(self, "phase_table", table)

    @property
    def phase_source(self):
        return "table" if self.phase_table is not None else "linear"


def load_phase_table(path):
    """Two-column CSV ``A_pixel,dphi_rad`` (header optional)."""
    rows = []
    with Path(path).open(newline="") as fh:
        for k, row in enumerate(csv.reader(fh)):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                if k == 0:
                    continue
                raise ValidationError(f"{path}: bad phase-table row {k}: {row}") from None
    return tuple(rows)


@dataclass(frozen=True)
class AbsorptionSignal:
    I_NV_on: float
    I_NV_off: float
    A_pixel_on: float
    A_pixel_off: float
    delta_phi_NV_on: float = 0.0
    delta_phi_NV_off: float = 0.0

    @property
    def A_pixel(self):
        return self.A_pixel_on

    @property
    def contrast(self):
        return self.I_NV_on - self.I_NV_off


def _check_same_grid(a, b):
    if a.values.shape != b.values.shape or not (
        np.allclose(a.x, b.x, rtol=1e-9, atol=0) and np.allclose(a.y, b.y, rtol=1e-9, atol=0)
    ):
        raise FieldMapFormatError("pump and probe maps must share one grid")
    if not math.isclose(a.period, b.period, rel_tol=1e-9):
        raise FieldMapFormatError("pump and probe maps must share one period")


def _dark_cell(G, n_NV):
    """Stationary state for a cell without optical pumping.

    With microwaves the ground levels equilibrate; without them the state is
    degenerate and we take the unpolarized mixture of the two ground sublevels,
    which carries no singlet population either way.
    """
    try:
        return steady_state(G, n_NV).values
    except DegenerateSteadyState:
        a = steady_state(G, n_NV, start=(0,)).values
        b = steady_state(G, n_NV, start=(1,)).values
        return 0.5 * (a + b)


def resolve_populations(map_pump, map_probe, params, drive):
    """Per-cell steady-state densities (ny, nx, 8) under locally enhanced rates."""
    _check_same_grid(map_pump, map_probe)
    G = generator_matrix(params, drive, map_pump.values, map_probe.values)
    out = np.empty(map_pump.values.shape + (N_LEVELS,))
    bright = (map_pump.values * drive.I_t) > 0
    if np.any(bright):
        out[bright] = steady_state_batch(G[bright], params.n_NV)
    for iy, ix in np.argwhere(~bright):
        out[iy, ix] = _dark_cell(G[iy, ix], params.n_NV)
    return out


def absorption_fraction(net_population, map_probe, sigma_s, d, R0=1.0):
    """Fractional IR intensity change I_NV from a gridded net singlet density.

    ``net_population`` may carry leading axes (e.g. time) before (ny, nx).
    """
    W = cell_weights(map_probe, d) * map_probe.values
    return sigma_s * d * np.tensordot(net_population, W, axes=([-2, -1], [0, 1])) / R0


def nv_phase(A_pixel, config):
    """Extra reflection phase (rad) from NV absorption."""
    A = np.asarray(A_pixel, float)
    if np.any(A < 0):
        raise ValidationError("A_pixel must be nonnegative")
    if config.phase_table is None:
        out = config.phase_kappa * A
    else:
        xs, ys = zip(*config.phase_table)
        if np.any(A < xs[0]) or np.any(A > xs[-1]):
            raise ExtrapolationError(
                f"A_pixel outside tabulated range [{xs[0]:.4g}, {xs[-1]:.4g}]"
            )
        out = np.interp(A, xs, ys)
    return float(out) if np.ndim(out) == 0 else out


def pixel_absorption(pop_on, pop_off, map_probe, params, geom, d=None, config=None):
    """AbsorptionSignal for MW on/off from gridded populations (ny, nx, 8)."""
    config = config or DetectionConfig()
    d = geom.d_NV if d is None else d
    I_on = float(absorption_fraction(net_singlet_population(pop_on), map_probe, params.sigma_s, d, config.R0))
    I_off = float(absorption_fraction(net_singlet_population(pop_off), map_probe, params.sigma_s, d, config.R0))
    A_on, A_off = I_on * config.R0, I_off * config.R0
    return AbsorptionSignal(
        I_NV_on=I_on,
        I_NV_off=I_off,
        A_pixel_on=A_on,
        A_pixel_off=A_off,
        delta_phi_NV_on=nv_phase(max(A_on, 0.0), config),
        delta_phi_NV_off=nv_phase(max(A_off, 0.0), config),
    )


def homodyne_output(r_mag, delta_phi_NV, R, delta_phi_LO):
    """Camera intensity normalized by the incident probe intensity."""
    R = np.asarray(R, float)
    if np.any(R < 0) or np.any(R > 1):
        raise ValidationError("R must lie in [0, 1]")
    return (
        (1 - R)
        + R * r_mag**2
        + 2 * np.sqrt((1 - R) * R) * r_mag * np.cos(delta_phi_LO + delta_phi_NV)
    )


def reflection_magnitude(signal, config=None):
    """|r| = sqrt(R0 (1 - I_NV)) for MW on and off."""
    config = config or DetectionConfig()
    out = []
    for I in (signal.I_NV_on, signal.I_NV_off):
        if I > 1:
            raise UnphysicalAbsorption(f"fractional absorption {I:.4g} exceeds 1")
        out.append(math.sqrt(config.R0 * (1 - I)))
    return tuple(out)


def output_intensities(signal, config, I_s, mode="homodyne", R=None, delta_phi_LO=None):
    """(I_out with MW off, I_out with MW on) in W/m^2; R, phase may be arrays."""
    r_on, r_off = reflection_magnitude(signal, config)
    if mode == "direct":
        return I_s * r_off**2, I_s * r_on**2
    if mode != "homodyne":
        raise ValidationError(f"unknown detection mode {mode!r}")
    R = config.R if R is None else R
    phi = config.delta_phi_LO if delta_phi_LO is None else delta_phi_LO
    off = I_s * homodyne_output(r_off, signal.delta_phi_NV_off, R, phi)
    on = I_s * homodyne_output(r_on, signal.delta_phi_NV_on, R, phi)
    return off, on


def snr_density(signal, config, I_s, mode="homodyne", R=None, delta_phi_LO=None, wavelength=LAMBDA_PROBE):
    """Shot-noise SNR per sqrt(t_mea L^2), in s^-1/2 m^-1."""
    off, on = output_intensities(signal, config, I_s, mode, R, delta_phi_LO)
    total = off + on
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.abs(off - on) / np.sqrt(photon_energy(wavelength) * total)
    if np.ndim(val) == 0:
        if total <= 0:
            raise UndefinedSNR("no light reaches the camera in either spin state")
        return float(val)
    return np.where(total > 0, val, 0.0)


def snr_shot_limited(signal, config, I_s, L, t_mea, mode="homodyne", R=None, delta_phi_LO=None):
    if t_mea <= 0:
        raise ValidationError("t_mea must be positive")
    return snr_density(signal, config, I_s, mode, R, delta_phi_LO) * math.sqrt(t_mea * L**2)


def snr_low_contrast(signal, I_s, L, t_mea, R0=1.0, wavelength=LAMBDA_PROBE):
    """Linearized SNR for small contrast: sqrt(I_out(0,0) t L^2 / 2 hbar w) * dI_NV."""
    baseline = R0 * I_s
    return math.sqrt(baseline * t_mea * L**2 / (2 * photon_energy(wavelength))) * (
        signal.I_NV_on - signal.I_NV_off
    )


@dataclass(frozen=True)
class HomodyneOptimum:
    R: float
    delta_phi_LO: float
    snr: float  # per sqrt(t_mea L^2) unless t_mea and L were given
    grid: tuple = field(default=None, repr=False, compare=False)


def optimize_homodyne(signal, config, I_s, t_mea=1.0, L=1.0, n_R=41, n_phi=72, keep_grid=False):
    """Global maximizer of the homodyne SNR over R in [0, 1] and phase in [0, 2 pi).

    A deterministic coarse grid picks the basin, zoomed grids and a golden-section
    polish refine it. The grid includes R = 1 (direct detection), so the result
    is never worse than the direct readout.
    """
    scale = math.sqrt(t_mea * L**2)

    def objective(R, phi):
        return scale * snr_density(signal, config, I_s, "homodyne", R, phi)

    Rs = np.linspace(0.0, 1.0, n_R)
    phis = np.linspace(0.0, TWO_PI, n_phi, endpoint=False)
    iR, iphi, vals = grid_argmax_2d(objective, Rs, phis)
    top = vals[iR, iphi]
    if not np.isfinite(top) or top <= 0 or np.ptp(vals) <= 1e-12 * abs(top):
        raise DegenerateOptimum("homodyne SNR is flat: no spin contrast to optimize")
    R, phi, best = refine_2d(
        objective,
        Rs[iR],
        phis[iphi],
        hx=Rs[1] - Rs[0],
        hy=phis[1] - phis[0],
        x_bounds=(0.0, 1.0),
        y_period=TWO_PI,
    )
    grid = (Rs, phis, vals) if keep_grid else None
    return HomodyneOptimum(float(R), float(phi), float(best), grid)
