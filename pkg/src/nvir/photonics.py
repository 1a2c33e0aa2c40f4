"""Grating momentum matching, golden-rule absorption and the wire-array MW field."""
from dataclasses import dataclass
import cmath
import math

import numpy as np

from .errors import DomainError, NoCouplingError, SingularityError, ValidationError
from .params import C, EPS_0, HBAR, MU_0, photon_energy

# hbar*omega in eV -> angular frequency
_EV = 1.602176634e-19


def _check_order(m_order):
    if int(m_order) != m_order:
        raise ValidationError(f"diffraction order must be an integer, got {m_order!r}", key="m")
    if m_order == 0:
        raise DomainError("diffraction order m = 0 carries no grating momentum", key="m")


def rwa_period(wavelength, n_d, m_order=1, theta_i=0.0):
    """Grating period putting the m-th diffraction order at grazing in the dielectric.

    Solves (2 pi / lambda) n_d = (2 pi / lambda) sin(theta_i) + m 2 pi / p.
    """
    _check_order(m_order)
    denom = n_d - math.sin(theta_i)
    if denom == 0 or m_order / denom <= 0:
        raise DomainError(
            f"no positive period for m={m_order}, n_d={n_d}, theta_i={theta_i} rad"
        )
    return m_order * wavelength / denom


def rwa_incidence_angle(wavelength, n_d, m_order, p):
    """Signed incidence angle (rad) meeting the RWA condition for a given period."""
    _check_order(m_order)
    if p <= 0:
        raise ValidationError("period must be positive", key="p")
    s = n_d - m_order * wavelength / p
    if abs(s) > 1:
        raise NoCouplingError(
            f"sin(theta_i) = {s:.4f} lies outside [-1, 1]: order m={m_order} cannot be "
            f"phase matched at lambda={wavelength:.4g} m with p={p:.4g} m"
        )
    return math.asin(s)


@dataclass(frozen=True)
class DrudeMetal:
    """eps(omega) = eps_inf - omega_p^2 / (omega (omega + i gamma)).

    Default coefficients are the Drude part of the Rakic et al. (1998) silver fit.
    """

    eps_inf: float = 1.0
    omega_p_eV: float = 9.01
    gamma_eV: float = 0.048

    section = "metal"

    def permittivity(self, wavelength):
        omega = 2 * math.pi * C / wavelength
        wp = self.omega_p_eV * _EV / HBAR
        g = self.gamma_eV * _EV / HBAR
        return self.eps_inf - wp**2 / (omega * (omega + 1j * g))


SILVER = DrudeMetal()


def spp_wavevector(wavelength, eps_m, eps_d):
    """Re[k0 sqrt(eps_m eps_d / (eps_m + eps_d))]; eps_m = -inf gives the PEC limit."""
    k0 = 2 * math.pi / wavelength
    if isinstance(eps_m, (int, float)) and math.isinf(eps_m):
        return k0 * math.sqrt(eps_d)
    denom = eps_m + eps_d
    if abs(denom) < 1e-12 * max(abs(eps_m), abs(eps_d), 1.0):
        raise SingularityError("eps_m = -eps_d: surface plasmon dispersion has a pole here")
    return (k0 * cmath.sqrt(eps_m * eps_d / denom)).real


def spp_bw_mismatch(wavelength, n_d, m_order, p, eps_m, theta_i=0.0):
    """Residual of the SPP-Bloch-wave condition (rad/m).

    Positive when the bound SPP carries more momentum than the grating supplies.
    ``m_order = 0`` is allowed here and returns the bare SPP momentum minus |k_x|.
    """
    k0 = 2 * math.pi / wavelength
    k_x = k0 * math.sin(theta_i)
    grating = m_order * 2 * math.pi / p if m_order else 0.0
    return spp_wavevector(wavelength, eps_m, n_d**2) - abs(k_x + grating)


# NV axes for a [100]-cut surface; the four <111> directions.
NV_AXES = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / math.sqrt(3)


def orientation_mean_cos2(field_direction=(1.0, 0.0, 0.0)):
    """Mean cos^2 between the field and the four NV axes, equally weighted.

    The four <111> axes form an isotropic tensor (sum a a^T = 4/3 I), so this
    is 1/3 for any field direction.
    """
    e = np.asarray(field_direction, float)
    e = e / np.linalg.norm(e)
    return float(np.mean((NV_AXES @ e) ** 2))


ORIENTATION_COS2 = orientation_mean_cos2()


def plane_wave_field_sq(intensity, n_d):
    """|E|^2 (peak amplitude squared) of a plane wave of intensity I in index n_d."""
    return 2 * intensity / (C * EPS_0 * n_d)


def golden_rule_absorption(gamma_r, gamma_star, wavelength, n_d, E_sq, cos2_theta=ORIENTATION_COS2):
    """Absorption rate from the singlet's spontaneous emission rate and linewidth."""
    if gamma_star <= 0:
        raise ValidationError("gamma_star must be positive", key="gamma_star")
    energy_density = 0.5 * EPS_0 * n_d**2 * E_sq
    return (
        3 / (math.pi**2 * HBAR)
        * (gamma_r / gamma_star)
        * (wavelength / n_d) ** 3
        * energy_density
        * cos2_theta
    )


def calibrate_linewidth(sigma_s, gamma_r, wavelength, n_d, cos2_theta=ORIENTATION_COS2):
    """Linewidth gamma* making the golden-rule rate equal sigma_s I / (hbar omega).

    With I = c eps0 n |E|^2 / 2 the plane-wave rate is linear in I, so equating
    the two expressions fixes gamma* = 6 gamma lambda^2 cos^2 / (pi n^2 sigma_s).
    """
    for name, v in (("sigma_s", sigma_s), ("gamma_r", gamma_r), ("wavelength", wavelength), ("n_d", n_d)):
        if v <= 0:
            raise ValidationError("must be positive", key=name)
    return 6 * gamma_r * wavelength**2 * cos2_theta / (math.pi * n_d**2 * sigma_s)


def intrinsic_absorption_rate(sigma_s, intensity, wavelength):
    return sigma_s * intensity / photon_energy(wavelength)


def wire_positions(p, n_wires):
    return (np.arange(n_wires) - (n_wires - 1) / 2) * p


def wire_array_bfield(current, p, n_wires, query_points):
    """Magnetic field (T) of parallel infinite wires along +z at x = k p, y = 0.

    ``query_points`` is an (N, 2) array of (x, y); returns (N, 2) of (B_x, B_y).
    """
    pts = np.atleast_2d(np.asarray(query_points, float))
    xk = wire_positions(p, n_wires)
    dx = pts[:, 0, None] - xk[None, :]
    dy = pts[:, 1, None] - 0.0
    r2 = dx**2 + dy**2
    if np.any(r2 <= (1e-9 * p) ** 2):
        raise SingularityError("query point lies on a wire axis")
    pref = MU_0 * current / (2 * math.pi)
    Bx = -(pref * dy / r2).sum(axis=1)
    By = (pref * dx / r2).sum(axis=1)
    return np.stack([Bx, By], axis=1)
