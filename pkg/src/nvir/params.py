"""Physical parameters, drive conditions and pixel geometry.

Everything is stored in SI units. Figure units (mW/um^2, us^-1, um) only
appear at the I/O boundary through the conversion constants below.
"""
from dataclasses import dataclass, fields
import math

import scipy.constants as const

from .errors import ValidationError

HBAR = const.hbar
C = const.c
MU_B = const.physical_constants["Bohr magneton"][0]
MU_0 = const.mu_0
EPS_0 = const.epsilon_0
G_FACTOR = 2.003

# 1 mW/um^2 in W/m^2
MW_PER_UM2 = 1e-3 / 1e-12
# Photoionization / recombination constants are tabulated in MHz/mW and read
# as MHz per (mW/um^2) of local intensity; this converts to s^-1 per (W/m^2).
PHOTOIONIZATION_UNIT = 1e6 / MW_PER_UM2
US = 1e-6
NS = 1e-9
UM = 1e-6
NM = 1e-9

LAMBDA_PUMP = 532e-9
LAMBDA_PROBE = 1042e-9

# gamma_r / Gamma for the singlet transition
SINGLET_QUANTUM_EFFICIENCY = 1e-3


def photon_energy(wavelength):
    """hbar * omega for a vacuum wavelength in metres."""
    return 2 * math.pi * HBAR * C / wavelength


def _require(cond, key, message):
    if not cond:
        raise ValidationError(message, key=key)


def _check_nonnegative(obj, section, names):
    for name in names:
        value = getattr(obj, name)
        _require(
            isinstance(value, (int, float)) and math.isfinite(value) and value >= 0,
            f"{section}.{name}",
            f"must be a finite nonnegative number, got {value!r}",
        )


@dataclass(frozen=True)
class PhotophysicsParams:
    k31: float = 66 / US
    k42: float = 66 / US
    k35: float = 7.9 / US
    k45: float = 53 / US
    k61: float = 1 / US
    k62: float = 0.7 / US
    # per (W/m^2) of local green intensity
    k38: float = 41.8 * PHOTOIONIZATION_UNIT
    k48: float = 41.8 * PHOTOIONIZATION_UNIT
    k71: float = 35.5 * PHOTOIONIZATION_UNIT
    k72: float = 35.5 * PHOTOIONIZATION_UNIT
    Gamma: float = 1 / NS
    Gamma_NV0: float = 53 / US
    sigma_t: float = 3e-21
    sigma_s: float = 3e-22
    sigma_NV0: float = 6e-21
    n_NV: float = 28e23
    T2_star: float = 200 * NS
    T2: float = 2 * US
    Omega_R: float = 2 * math.pi * 1.5e6
    gamma_r: float = SINGLET_QUANTUM_EFFICIENCY / NS
    F_p: float = 1.0
    gamma_quenching: float = 0.0

    section = "photophysics"

    def __post_init__(self):
        names = [f.name for f in fields(self)]
        _check_nonnegative(self, self.section, names)
        _require(self.T2 >= self.T2_star, f"{self.section}.T2", "T2 must be >= T2_star")
        _require(
            self.gamma_r <= self.Gamma,
            f"{self.section}.gamma_r",
            "radiative rate cannot exceed the total singlet decay rate Gamma",
        )

    @property
    def gamma_nr(self):
        return self.Gamma - self.gamma_r

    @property
    def singlet_decay(self):
        """Effective |5> -> |6> rate including Purcell and quenching terms."""
        return self.gamma_nr + self.F_p * self.gamma_r + self.gamma_quenching


def default_params():
    return PhotophysicsParams()


@dataclass(frozen=True)
class OpticalDrive:
    I_t: float = 0.1 * MW_PER_UM2
    I_s: float = 1.0 * MW_PER_UM2
    mw_on: bool = False
    lambda_pump: float = LAMBDA_PUMP
    lambda_probe: float = LAMBDA_PROBE

    section = "drive"

    def __post_init__(self):
        _check_nonnegative(self, self.section, ["I_t", "I_s"])
        _require(isinstance(self.mw_on, bool), f"{self.section}.mw_on", "must be a boolean")
        for name in ("lambda_pump", "lambda_probe"):
            _require(getattr(self, name) > 0, f"{self.section}.{name}", "must be positive")


@dataclass(frozen=True)
class PixelGeometry:
    L: float = 1 * UM
    d_NV: float = 5 * UM
    p: float = 434 * NM
    w: float = 125 * NM
    t: float = 125 * NM
    n_diamond: float = 2.4

    section = "geometry"

    def __post_init__(self):
        for name in ("L", "d_NV", "p", "w", "t", "n_diamond"):
            value = getattr(self, name)
            _require(
                isinstance(value, (int, float)) and math.isfinite(value) and value > 0,
                f"{self.section}.{name}",
                f"must be a positive number, got {value!r}",
            )
        _require(self.w < self.p, f"{self.section}.w", "wire width must be smaller than the period")

    @property
    def V_pixel(self):
        return self.L**2 * self.d_NV
