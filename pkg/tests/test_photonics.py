import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from nvir.errors import DomainError, NoCouplingError, SingularityError, ValidationError
from nvir.params import HBAR, MU_0, photon_energy
from nvir.photonics import (
    ORIENTATION_COS2,
    SILVER,
    DrudeMetal,
    calibrate_linewidth,
    golden_rule_absorption,
    intrinsic_absorption_rate,
    orientation_mean_cos2,
    plane_wave_field_sq,
    rwa_incidence_angle,
    rwa_period,
    spp_bw_mismatch,
    spp_wavevector,
    wire_array_bfield,
)


def test_rwa_period_examples():
    assert rwa_period(1042e-9, 2.4, 1, 0.0) == pytest.approx(434.17e-9, abs=0.01e-9)
    assert rwa_period(1042e-9, 2.4, 2, 0.0) == pytest.approx(2 * rwa_period(1042e-9, 2.4, 1, 0.0))
    assert rwa_period(1042e-9, 2.4, 1, math.radians(30)) == pytest.approx(548.4e-9, abs=0.05e-9)


def test_rwa_period_domain():
    with pytest.raises(DomainError):
        rwa_period(1042e-9, 2.4, 0)
    with pytest.raises(DomainError):
        rwa_period(1042e-9, 0.5, 1, math.radians(90))


def test_rwa_angle_examples():
    theta = rwa_incidence_angle(532e-9, 2.4, 2, 434e-9)
    assert abs(math.degrees(theta)) == pytest.approx(2.96, abs=0.01)
    assert math.sin(theta) == pytest.approx(2.4 - 2 * 532 / 434)
    assert rwa_incidence_angle(434e-9 * 2.4, 2.4, 1, 434e-9) == pytest.approx(0.0, abs=1e-12)


def test_rwa_angle_no_coupling_explains():
    with pytest.raises(NoCouplingError, match=r"1\.17"):
        rwa_incidence_angle(532e-9, 2.4, 1, 434e-9)


@given(lam=st.floats(300e-9, 2000e-9), n_d=st.floats(1.2, 3.5), m=st.integers(1, 3),
       theta=st.floats(-1.2, 1.2))
def test_period_and_angle_are_inverse(lam, n_d, m, theta):
    p = rwa_period(lam, n_d, m, theta)
    assert rwa_incidence_angle(lam, n_d, m, p) == pytest.approx(theta, rel=1e-12, abs=1e-12)


def test_drude_silver_is_plasmonic_at_probe():
    eps = SILVER.permittivity(1042e-9)
    assert eps.real < -40 and eps.imag > 0


def test_spp_mismatch_pec_limit_is_rwa_residual():
    lam, n_d, m, p, theta = 1042e-9, 2.4, 1, 500e-9, 0.2
    k0 = 2 * math.pi / lam
    want = k0 * n_d - abs(k0 * math.sin(theta) + 2 * math.pi * m / p)
    assert spp_bw_mismatch(lam, n_d, m, p, -math.inf, theta) == pytest.approx(want)
    p0 = rwa_period(lam, n_d, m)
    assert spp_bw_mismatch(lam, n_d, m, p0, -math.inf) == pytest.approx(0.0, abs=1e-6 * k0)


def test_spp_mismatch_positive_for_silver():
    lam, n_d = 1042e-9, 2.4
    p = rwa_period(lam, n_d, 1)
    assert spp_bw_mismatch(lam, n_d, 1, p, SILVER.permittivity(lam)) > 0


def test_spp_mismatch_order_zero_is_bare_spp():
    lam, eps = 1042e-9, SILVER.permittivity(1042e-9)
    got = spp_bw_mismatch(lam, 2.4, 0, 434e-9, eps)
    assert got == pytest.approx(spp_wavevector(lam, eps, 2.4**2))
    assert got != 0


def test_spp_pole():
    with pytest.raises(SingularityError):
        spp_wavevector(1042e-9, -5.76, 5.76)


def test_orientation_average_is_one_third():
    assert ORIENTATION_COS2 == pytest.approx(1 / 3)
    for direction in ((0, 1, 0), (1, 1, 0), (0.3, -0.2, 0.9)):
        assert orientation_mean_cos2(direction) == pytest.approx(1 / 3)


def test_golden_rule_linear_and_zero(params):
    gs = 1e12
    assert golden_rule_absorption(params.gamma_r, gs, 1042e-9, 2.4, 0.0) == 0.0
    one = golden_rule_absorption(params.gamma_r, gs, 1042e-9, 2.4, 1e10)
    assert golden_rule_absorption(params.gamma_r, gs, 1042e-9, 2.4, 2e10) == pytest.approx(2 * one)
    with pytest.raises(ValidationError):
        golden_rule_absorption(params.gamma_r, 0.0, 1042e-9, 2.4, 1.0)


def test_calibrated_linewidth_reproduces_cross_section(params):
    gs = calibrate_linewidth(params.sigma_s, params.gamma_r, 1042e-9, 2.4)
    assert 0 < gs < math.inf
    assert calibrate_linewidth(2 * params.sigma_s, params.gamma_r, 1042e-9, 2.4) == pytest.approx(gs / 2)
    for I in np.logspace(5, 10, 6):
        E_sq = plane_wave_field_sq(I, 2.4)
        got = golden_rule_absorption(params.gamma_r, gs, 1042e-9, 2.4, E_sq)
        want = params.sigma_s * I / photon_energy(1042e-9)
        assert got == pytest.approx(want, rel=1e-9)
        assert intrinsic_absorption_rate(params.sigma_s, I, 1042e-9) == pytest.approx(want)


def test_single_wire_field():
    B = wire_array_bfield(2.0, 1e-6, 1, [[0.0, 3e-6]])
    assert np.linalg.norm(B) == pytest.approx(MU_0 * 2.0 / (2 * math.pi * 3e-6))


def test_symmetric_array_has_no_normal_component_on_axis():
    B = wire_array_bfield(1.0, 434e-9, 11, [[0.0, 1e-6], [0.0, 4e-6]])
    np.testing.assert_allclose(B[:, 1], 0, atol=1e-15)


def test_wire_array_field_is_homogeneous():
    xs = np.linspace(-217e-9, 217e-9, 21)
    B = wire_array_bfield(1e-3, 434e-9, 101, np.column_stack([xs, np.full_like(xs, 2e-6)]))
    bx = B[:, 0]
    assert np.ptp(bx) / np.abs(bx).mean() < 0.05


def test_wire_axis_is_singular():
    with pytest.raises(SingularityError):
        wire_array_bfield(1.0, 434e-9, 3, [[434e-9, 0.0]])


@given(scale=st.floats(-10, 10))
def test_bfield_linear_in_current(scale):
    assume(abs(scale) > 1e-6)
    pts = [[50e-9, 1e-6], [-120e-9, 3e-6]]
    np.testing.assert_allclose(
        wire_array_bfield(scale, 434e-9, 7, pts), scale * wire_array_bfield(1.0, 434e-9, 7, pts), rtol=1e-12
    )


def test_custom_drude_metal():
    metal = DrudeMetal(eps_inf=1.0, omega_p_eV=5.0, gamma_eV=0.0)
    omega_eV = 2 * math.pi * 299792458 / 1042e-9 * HBAR / 1.602176634e-19
    assert metal.permittivity(1042e-9).real == pytest.approx(1 - (5.0 / omega_eV) ** 2)
