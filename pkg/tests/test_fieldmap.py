import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nvir.errors import ExtentError, FieldMapFormatError
from nvir.fieldmap import (
    FieldMap,
    average_enhancement,
    figure_of_merit,
    integration_weights,
    load_field_map,
    save_field_map,
    synthetic_field_map,
    trapezoid_weights,
)
from nvir.params import PixelGeometry

P = 434e-9


def _write_grid(path, x, y, values, **meta):
    lines = ["x_m,y_m,enh"]
    for iy, yv in enumerate(y):
        for ix, xv in enumerate(x):
            lines.append(f"{xv!r},{yv!r},{values[iy][ix]!r}")
    path.write_text("\n".join(lines) + "\n")


def test_two_by_two_ones(tmp_path):
    path = tmp_path / "m.csv"
    _write_grid(path, [-P / 2, P / 2], [0.0, 1e-6], [[1.0, 1.0], [1.0, 1.0]])
    fmap = load_field_map(path, wavelength=1042e-9)
    assert fmap.period == pytest.approx(P)
    assert average_enhancement(fmap, 0.5e-6) == pytest.approx(1.0)
    assert not fmap.synthetic


def test_negative_sample_names_cell(tmp_path):
    path = tmp_path / "m.csv"
    _write_grid(path, [-P / 2, 0.0, P / 2], [0.0, 1e-6], [[1.0, 1.0, 1.0], [1.0, -0.5, 1.0]])
    with pytest.raises(FieldMapFormatError, match=r"iy=1, ix=1"):
        load_field_map(path, wavelength=1042e-9)


def test_format_errors(tmp_path):
    path = tmp_path / "m.csv"
    _write_grid(path, [-P / 2, 0.0, P / 2 * 1.5], [0.0, 1e-6], [[1, 1, 1], [1, 1, 1]])
    with pytest.raises(FieldMapFormatError, match="uniform"):
        load_field_map(path, wavelength=1042e-9)
    _write_grid(path, [-P / 2, P / 2], [0.0, 1e-6], [[1, 1], [1, 1]])
    with pytest.raises(FieldMapFormatError, match="period"):
        load_field_map(path, wavelength=1042e-9, period=500e-9)
    with pytest.raises(FieldMapFormatError, match="wavelength"):
        load_field_map(path)
    path.write_text("a,b,c\n")
    with pytest.raises(FieldMapFormatError, match="header"):
        load_field_map(path, wavelength=1042e-9)


def test_round_trip_is_identity(tmp_path):
    fmap = synthetic_field_map(spp_amplitude=3.0, rwa_amplitude=0.7, rwa_decay_length=2e-6, nx=7, ny=13)
    path = tmp_path / "m.csv"
    save_field_map(fmap, path)
    back = load_field_map(path)
    np.testing.assert_array_equal(back.values, fmap.values)
    np.testing.assert_array_equal(back.x, fmap.x)
    np.testing.assert_array_equal(back.y, fmap.y)
    assert back.wavelength == fmap.wavelength and back.period == fmap.period
    assert back.metadata == fmap.metadata
    assert back.synthetic


def test_synthetic_uniform_map():
    fmap = synthetic_field_map(spp_amplitude=0.0, rwa_amplitude=1.0, rwa_decay_length=math.inf)
    assert np.all(fmap.values == 1.0)
    assert fmap.metadata["synthetic"] is True


def test_spp_term_period_mean_is_half_amplitude():
    fmap = synthetic_field_map(spp_amplitude=6.0, rwa_amplitude=0.0, nx=65)
    w = trapezoid_weights(len(fmap.x), P)
    assert (w @ fmap.values[0]) / P == pytest.approx(3.0, rel=1e-12)


def test_default_pump_average_near_two(maps):
    pump, probe = maps
    assert average_enhancement(pump, 5e-6) == pytest.approx(1.98, abs=0.05)
    assert pump.synthetic and probe.synthetic


def test_exponential_average_closed_form():
    A, ell, d = 3.0, 1e-6, 5e-6
    fmap = synthetic_field_map(rwa_amplitude=A, rwa_decay_length=ell, y_max=d, nx=3, ny=2001)
    want = A * ell * (1 - math.exp(-d / ell)) / d
    assert average_enhancement(fmap, d) == pytest.approx(want, rel=1e-6)


def test_decreasing_map_average_decreases(maps):
    probe = maps[1]
    avgs = [average_enhancement(probe, d) for d in np.linspace(0.2e-6, 10e-6, 30)]
    assert np.all(np.diff(avgs) < 0)


def test_extent_error(maps):
    with pytest.raises(ExtentError):
        average_enhancement(maps[0], 11e-6)


def test_figure_of_merit_values():
    unit = synthetic_field_map(nx=3, ny=11)
    geom = PixelGeometry()
    assert figure_of_merit(unit, geom, 2.8e24) == pytest.approx(1.4e7)
    assert figure_of_merit(unit, geom, 5.6e24) == pytest.approx(2.8e7)


def test_figure_of_merit_grows_with_depth(maps):
    probe = maps[1]
    foms = [figure_of_merit(probe, PixelGeometry(d_NV=d), 2.8e24) for d in np.linspace(0.5e-6, 10e-6, 20)]
    assert np.all(np.diff(foms) > 0)


@given(c=st.floats(0.0, 1e4), ny=st.integers(2, 60), nx=st.integers(2, 20), d_frac=st.floats(0.05, 1.0))
def test_constant_map_average_is_constant(c, ny, nx, d_frac):
    y = np.linspace(0, 4e-6, ny)
    fmap = FieldMap(np.linspace(-P / 2, P / 2, nx), y, np.full((ny, nx), c), 1042e-9, P)
    assert average_enhancement(fmap, d_frac * 4e-6) == pytest.approx(c, rel=1e-12, abs=1e-300)


def test_quadrature_is_second_order():
    def err(ny):
        fmap = synthetic_field_map(rwa_amplitude=1.0, rwa_decay_length=1e-6, y_max=5e-6, nx=3, ny=ny)
        exact = 1e-6 * (1 - math.exp(-5)) / 5e-6
        return abs(average_enhancement(fmap, 5e-6) - exact)

    e1, e2, e3 = err(41), err(81), err(161)
    assert e1 / e2 == pytest.approx(4, rel=0.05)
    assert e2 / e3 == pytest.approx(4, rel=0.05)


def test_integration_weights_partial_interval():
    y = np.linspace(0, 1, 5)
    w = integration_weights(y, 0.6)
    assert w.sum() == pytest.approx(0.6)
    assert w @ y == pytest.approx(0.18)  # integral of y from 0 to 0.6
    with pytest.raises(ExtentError):
        integration_weights(y, 0.0)


def test_scaled_map(maps):
    pump = maps[0]
    assert average_enhancement(pump.scaled(3), 5e-6) == pytest.approx(3 * average_enhancement(pump, 5e-6))
