from dataclasses import replace
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import mw_per_um2, random_drive
from nvir.errors import DegenerateSteadyState, ValidationError
from nvir.params import OpticalDrive
from nvir.rates import (
    CLAMP_THRESHOLD,
    LevelPopulations,
    RateGenerator,
    build_generator,
    evolve,
    generator_matrix,
    microwave_rate,
    net_singlet_population,
    optical_rate,
    steady_state,
    steady_state_batch,
)
from nvir.sensitivity import pulsed_readout

DARK = OpticalDrive(I_t=0.0, I_s=0.0)


def test_optical_rate_oracles(params):
    assert optical_rate(params.sigma_t, 1e8, 532e-9) == pytest.approx(8.03e5, rel=2e-3)
    assert optical_rate(params.sigma_s, 1e9, 1042e-9) == pytest.approx(1.573e6, rel=2e-3)
    assert optical_rate(params.sigma_s, 0.0, 1042e-9) == 0.0
    assert optical_rate(params.sigma_t, 1e8, 532e-9, enhancement=2.5) == pytest.approx(
        2.5 * optical_rate(params.sigma_t, 1e8, 532e-9)
    )


def test_microwave_rate_default(params):
    assert microwave_rate(params.Omega_R, params.T2_star) == pytest.approx(8.88e6, rel=1e-3)


def test_dark_generator_has_only_spontaneous_rates(params):
    gen = build_generator(params, DARK)
    G = gen.matrix
    np.testing.assert_allclose(gen.column_sums(), 0, atol=1e-6)
    assert G[2, 0] == G[3, 1] == G[1, 0] == G[4, 5] == 0
    assert G[0, 2] == params.k31
    assert G[7, 2] == 0  # photoionization needs light
    assert G[5, 4] == pytest.approx(params.singlet_decay)


def test_generator_entries(params, drive):
    enh_p, enh_s = 1.7, 30.0
    gen = build_generator(params, drive, enh_p, enh_s)
    G = gen.matrix
    assert G[5, 4] == pytest.approx(params.Gamma + gen.W_probe)
    assert G[4, 5] == pytest.approx(gen.W_probe)
    assert gen.W_probe == pytest.approx(enh_s * optical_rate(params.sigma_s, drive.I_s, 1042e-9))
    assert G[2, 0] == pytest.approx(8.03e5 * enh_p, rel=2e-3)
    assert G[7, 2] == pytest.approx(params.k38 * drive.I_t * enh_p)
    assert G[6, 7] == pytest.approx(gen.W_NV0)
    assert gen.W_MW == 0
    on = build_generator(params, replace(drive, mw_on=True))
    assert on.matrix[1, 0] == on.matrix[0, 1] == pytest.approx(8.88e6, rel=1e-3)
    np.testing.assert_allclose(on.column_sums(), 0, atol=1e-3)


def test_generator_broadcasts_over_maps(params, drive):
    enh = np.linspace(0, 3, 12).reshape(3, 4)
    G = generator_matrix(params, drive, enh, 2.0)
    assert G.shape == (3, 4, 8, 8)
    np.testing.assert_allclose(G[1, 2], build_generator(params, drive, enh[1, 2], 2.0).matrix)
    with pytest.raises(ValidationError):
        generator_matrix(params, drive, -1.0, 1.0)


def test_dark_with_microwaves_equalizes_ground(params):
    pop = steady_state(build_generator(params, replace(DARK, mw_on=True)), params.n_NV)
    assert pop.n1 == pytest.approx(params.n_NV / 2)
    assert pop.n2 == pytest.approx(params.n_NV / 2)
    assert np.all(pop.values[2:] == 0)


def test_dark_without_microwaves_is_degenerate(params):
    with pytest.raises(DegenerateSteadyState) as info:
        steady_state(build_generator(params, DARK), params.n_NV)
    assert info.value.nullity == 2


def test_steady_state_defaults_and_sign(params, drive):
    pop = steady_state(build_generator(params, drive), params.n_NV)
    assert pop.total == pytest.approx(params.n_NV, rel=1e-12)
    assert np.all(pop.values >= 0)
    assert net_singlet_population(pop) > 0
    assert pop.n6 > pop.n5


def test_steady_matches_transient_limit(params, drive):
    gen = build_generator(params, drive)
    pop = steady_state(gen, params.n_NV)
    start = np.zeros(8)
    start[0] = params.n_NV
    trace = evolve(gen, start, 10e-3, 1e-3)
    np.testing.assert_allclose(trace.populations[-1], pop.values, rtol=1e-6)


def test_dark_triplet_decay_half_life(params):
    gen = build_generator(params, DARK)
    start = np.zeros(8)
    start[2] = 1.0
    k = params.k31 + params.k35
    t_half = math.log(2) / k
    trace = evolve(gen, start, 4 * t_half, t_half / 2)
    assert trace.populations[2, 2] == pytest.approx(0.5, rel=1e-4)
    assert 1 / k == pytest.approx(13.53e-9, rel=1e-3)


def test_frozen_dynamics():
    gen = RateGenerator(np.zeros((8, 8)))
    start = np.arange(1.0, 9.0)
    trace = evolve(gen, start, 1e-6, 1e-7)
    np.testing.assert_allclose(trace.populations, np.broadcast_to(start, trace.populations.shape))


def test_evolve_rejects_bad_input(params, drive):
    gen = build_generator(params, drive)
    with pytest.raises(ValidationError):
        evolve(gen, np.zeros(8), 1e-6, 1e-8)
    with pytest.raises(ValidationError):
        evolve(gen, np.eye(8)[0], -1.0, 1e-8)


def test_tolerance_ladder_converges(params, drive):
    gen = build_generator(params, drive)
    start = np.eye(8)[0]
    ref = evolve(gen, start, 2e-6, 1e-7, method="expm").populations
    errs = [
        np.abs(evolve(gen, start, 2e-6, 1e-7, rtol=r, atol=r * 1e-4).populations - ref).max()
        for r in (1e-4, 1e-6, 1e-8)
    ]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-7


def test_expm_propagator_matches_radau(params, drive):
    gen = build_generator(params, replace(drive, mw_on=True), 2.0, 50.0)
    start = np.eye(8)[1]
    a = evolve(gen, start, 3e-6, 5e-8).populations
    b = evolve(gen, start, 3e-6, 5e-8, method="expm").populations
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_batch_steady_state_matches_scalar(params, drive, rng):
    enh = rng.uniform(0.1, 5, size=(4, 3))
    G = generator_matrix(params, drive, enh, rng.uniform(1, 100, size=(4, 3)))
    batch = steady_state_batch(G, params.n_NV)
    for idx in np.ndindex(4, 3):
        np.testing.assert_allclose(batch[idx], steady_state(G[idx], params.n_NV).values, rtol=1e-9)


def test_probe_saturation_is_weak(params):
    n6 = [
        steady_state(build_generator(params, OpticalDrive(I_s=mw_per_um2(I_s))), params.n_NV).n6
        for I_s in np.linspace(0, 0.1, 6)
    ]
    assert (max(n6) - min(n6)) / max(n6) < 0.01


def test_pulsed_contrast_peaks_early_then_decays(params, drive, maps):
    trace = pulsed_readout(params, drive, *maps, d=5e-6, t_max=10e-6, n_samples=500)
    k = int(np.argmax(trace.n6_contrast))
    assert 0 < trace.times[k] < 1e-6
    assert trace.n6_contrast[-1] < 0.2 * trace.n6_contrast[k]


def test_trace_csv_header(params, drive):
    trace = evolve(build_generator(params, drive), np.eye(8)[0], 1e-7, 5e-8)
    lines = trace.to_csv().splitlines()
    assert lines[0] == "time_s,n1,n2,n3,n4,n5,n6,n7,n8"
    assert len(lines) == len(trace) + 1


def test_level_populations_access():
    pop = LevelPopulations(np.arange(8.0))
    assert pop.n6 == 5.0 and pop.total == 28.0
    assert net_singlet_population(pop) == 1.0
    assert pop.as_dict()["n8"] == 7.0
    with pytest.raises(ValidationError):
        LevelPopulations(np.zeros(7))


@given(seed=st.integers(0, 2**32 - 1))
def test_conservation_and_positivity(seed, params):
    rng = np.random.default_rng(seed)
    drv = random_drive(rng)
    gen = build_generator(params, drv, rng.uniform(0.1, 5), rng.uniform(0.1, 500))
    pop = steady_state(gen, params.n_NV)
    assert abs(pop.total - params.n_NV) <= 1e-9 * params.n_NV
    assert np.all(pop.values / params.n_NV >= -CLAMP_THRESHOLD)
    trace = evolve(gen, np.eye(8)[rng.integers(2)] * params.n_NV, 2e-6, 1e-7)
    np.testing.assert_allclose(trace.populations.sum(axis=1), params.n_NV, rtol=1e-9)
    assert np.all(trace.populations / params.n_NV >= -CLAMP_THRESHOLD)


@given(I_t=st.floats(1e-3, 30), enh=st.floats(0.05, 10))
def test_microwaves_raise_singlet_population(I_t, enh, params):
    drv = OpticalDrive(I_t=mw_per_um2(I_t))
    on = steady_state(build_generator(params, replace(drv, mw_on=True), enh), params.n_NV)
    off = steady_state(build_generator(params, drv, enh), params.n_NV)
    assert on.n6 > off.n6
