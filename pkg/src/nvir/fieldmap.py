"""Gridded |E/E0|^2 maps over one grating period, their averages and I/O.

CSV layout: header ``x_m,y_m,enh`` followed by one row per sample in
row-major order (y outer, x inner). Metadata lives in a JSON sidecar
``<file>.meta.json`` with ``wavelength_m``, ``period_m`` and ``synthetic``.
"""
from dataclasses import dataclass, field
import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import ExtentError, FieldMapFormatError
from .params import LAMBDA_PROBE, LAMBDA_PUMP, NM, UM

_GRID_RTOL = 1e-6


@dataclass(frozen=True)
class FieldMap:
    x: np.ndarray  # (nx,), spans [-p/2, p/2]
    y: np.ndarray  # (ny,), starts at the metal/diamond interface, y = 0
    values: np.ndarray  # (ny, nx)
    wavelength: float
    period: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.asarray(self.x, float)
        y = np.asarray(self.y, float)
        v = np.asarray(self.values, float)
        if v.shape != (len(y), len(x)):
            raise FieldMapFormatError(f"values shape {v.shape} does not match grid ({len(y)}, {len(x)})")
        if len(x) < 2 or len(y) < 2:
            raise FieldMapFormatError("need at least two samples along each axis")
        _check_uniform(x, "x")
        _check_uniform(y, "y")
        tol = _GRID_RTOL * self.period
        if abs(x[0] + self.period / 2) > tol or abs(x[-1] - self.period / 2) > tol:
            raise FieldMapFormatError(
                f"x grid [{x[0]:.6g}, {x[-1]:.6g}] does not span one period p={self.period:.6g}"
            )
        if abs(y[0]) > _GRID_RTOL * (y[-1] - y[0]):
            raise FieldMapFormatError("y grid must start at 0")
        if not np.all(np.isfinite(v)):
            raise FieldMapFormatError("non-finite enhancement sample")
        neg = np.argwhere(v < 0)
        if len(neg):
            iy, ix = neg[0]
            raise FieldMapFormatError(
                f"negative enhancement {v[iy, ix]:.4g} at cell (iy={iy}, ix={ix})"
            )
        for name, arr in (("x", x), ("y", y), ("values", v)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def y_max(self):
        return float(self.y[-1])

    @property
    def synthetic(self):
        return bool(self.metadata.get("synthetic", False))

    def scaled(self, factor):
        meta = dict(self.metadata, scale=self.metadata.get("scale", 1.0) * factor)
        return FieldMap(self.x, self.y, self.values * factor, self.wavelength, self.period, meta)


def _check_uniform(a, name):
    d = np.diff(a)
    if np.any(d <= 0):
        raise FieldMapFormatError(f"{name} grid must be strictly increasing")
    if not np.allclose(d, d.mean(), rtol=_GRID_RTOL, atol=0):
        raise FieldMapFormatError(f"{name} grid is not uniformly spaced")


def trapezoid_weights(n, span):
    w = np.full(n, span / (n - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def integration_weights(y, d):
    """Weights w with sum(w * f(y)) = integral from y[0] to d of the piecewise-linear interpolant.

    Used for depth integrals over maps (y[0] = 0) and time integrals over traces.
    """
    y = np.asarray(y, float)
    if d <= y[0]:
        raise ExtentError(f"upper limit must exceed {y[0]}, got {d}")
    if d > y[-1] * (1 + 1e-12):
        raise ExtentError(f"upper limit {d:.4g} exceeds grid extent {y[-1]:.4g}")
    d = min(d, y[-1])
    w = np.zeros_like(y)
    k = int(np.searchsorted(y, d, side="right")) - 1
    k = min(k, len(y) - 2)
    h = y[1:k + 1] - y[:k]
    w[:k] += h / 2
    w[1:k + 1] += h / 2
    delta = d - y[k]
    if delta > 0:
        s = delta / (y[k + 1] - y[k])
        w[k] += delta / 2 * (2 - s)
        w[k + 1] += delta / 2 * s
    return w


def cell_weights(fmap, d):
    """Normalized (ny, nx) quadrature weights for the mean over [-p/2, p/2] x [0, d]."""
    wy = integration_weights(fmap.y, d)
    wx = trapezoid_weights(len(fmap.x), fmap.x[-1] - fmap.x[0])
    W = np.outer(wy, wx)
    return W / W.sum()


def average_enhancement(fmap, d):
    return float((cell_weights(fmap, d) * fmap.values).sum())


def figure_of_merit(fmap, geom, n_NV):
    """<|E/E0|^2> V_pixel n_NV: enhancement-weighted NV count in one pixel."""
    return average_enhancement(fmap, geom.d_NV) * geom.V_pixel * n_NV


def synthetic_field_map(
    p=434 * NM,
    y_max=10 * UM,
    spp_amplitude=0.0,
    spp_decay_length=0.1 * UM,
    rwa_amplitude=1.0,
    rwa_decay_length=math.inf,
    nx=17,
    ny=201,
    wavelength=LAMBDA_PROBE,
):
    """rwa*exp(-y/l_rwa) + spp*exp(-y/l_spp)*cos^2(pi x / p); tagged synthetic."""
    if not (spp_decay_length > 0 and rwa_decay_length > 0):
        raise FieldMapFormatError("decay lengths must be positive")
    x = np.linspace(-p / 2, p / 2, nx)
    y = np.linspace(0.0, y_max, ny)
    Y, X = np.meshgrid(y, x, indexing="ij")
    values = rwa_amplitude * np.exp(-Y / rwa_decay_length) + spp_amplitude * np.exp(
        -Y / spp_decay_length
    ) * np.cos(np.pi * X / p) ** 2
    meta = dict(
        synthetic=True,
        spp_amplitude=spp_amplitude,
        spp_decay_length=spp_decay_length,
        rwa_amplitude=rwa_amplitude,
        rwa_decay_length=rwa_decay_length,
    )
    return FieldMap(x, y, values, wavelength, p, meta)


# Demo maps. The pump map averages to ~2 over 5 um, the scale of the
# off-normal 532 nm grating resonance. The probe map stands in for the
# resonant 1042 nm mode: a strong interface-bound component plus a
# vertically extended component decaying over a few microns.
DEFAULT_PUMP_MAP = dict(
    spp_amplitude=4.0,
    spp_decay_length=0.1 * UM,
    rwa_amplitude=1.94,
    rwa_decay_length=math.inf,
    wavelength=LAMBDA_PUMP,
)
DEFAULT_PROBE_MAP = dict(
    spp_amplitude=2000.0,
    spp_decay_length=0.1 * UM,
    rwa_amplitude=200.0,
    rwa_decay_length=4 * UM,
    wavelength=LAMBDA_PROBE,
)


def default_maps(p=434 * NM, y_max=10 * UM, nx=9, ny=101):
    pump = synthetic_field_map(p=p, y_max=y_max, nx=nx, ny=ny, **DEFAULT_PUMP_MAP)
    probe = synthetic_field_map(p=p, y_max=y_max, nx=nx, ny=ny, **DEFAULT_PROBE_MAP)
    return pump, probe


def _meta_path(path):
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def save_field_map(fmap, path):
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x_m", "y_m", "enh"])
        for iy, yv in enumerate(fmap.y):
            for ix, xv in enumerate(fmap.x):
                writer.writerow([repr(float(xv)), repr(float(yv)), repr(float(fmap.values[iy, ix]))])
    meta = dict(fmap.metadata, wavelength_m=fmap.wavelength, period_m=fmap.period)
    meta.setdefault("synthetic", False)
    _meta_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True, default=_json_float))


def _json_float(v):
    return float(v)


def load_field_map(path, wavelength=None, period=None):
    """Read a CSV grid (plus optional sidecar) and validate it as a FieldMap."""
    path = Path(path)
    meta = {}
    if _meta_path(path).exists():
        meta = json.loads(_meta_path(path).read_text())
    wavelength = wavelength if wavelength is not None else meta.get("wavelength_m")
    if wavelength is None:
        raise FieldMapFormatError(f"{path}: wavelength missing (no sidecar and none given)")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header != ["x_m", "y_m", "enh"]:
            raise FieldMapFormatError(f"{path}: expected header x_m,y_m,enh, got {header}")
        try:
            rows = np.array([[float(c) for c in row] for row in reader if row], float)
        except ValueError as exc:
            raise FieldMapFormatError(f"{path}: {exc}") from None
    if rows.ndim != 2 or rows.shape[1] != 3:
        raise FieldMapFormatError(f"{path}: expected three columns")
    x = np.unique(rows[:, 0])
    y = np.unique(rows[:, 1])
    if len(rows) != len(x) * len(y):
        raise FieldMapFormatError(f"{path}: {len(rows)} rows do not form a {len(y)}x{len(x)} grid")
    expected_x = np.tile(x, len(y))
    expected_y = np.repeat(y, len(x))
    if not (np.array_equal(rows[:, 0], expected_x) and np.array_equal(rows[:, 1], expected_y)):
        raise FieldMapFormatError(f"{path}: rows are not in row-major (y outer, x inner) order")
    span = x[-1] - x[0]
    meta_period = meta.get("period_m")
    if period is None:
        period = meta_period if meta_period is not None else span
    elif meta_period is not None and not math.isclose(period, meta_period, rel_tol=_GRID_RTOL):
        raise FieldMapFormatError(f"{path}: period {period} disagrees with sidecar {meta_period}")
    if not math.isclose(span, period, rel_tol=_GRID_RTOL):
        raise FieldMapFormatError(f"{path}: x extent {span:.6g} m does not match period {period:.6g} m")
    values = rows[:, 2].reshape(len(y), len(x))
    meta = {k: v for k, v in meta.items() if k not in ("wavelength_m", "period_m")}
    meta.setdefault("synthetic", False)
    return FieldMap(x, y, values, float(wavelength), float(period), meta)
