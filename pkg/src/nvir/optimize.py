"""Deterministic 1-D and 2-D maximizers: golden-section search and zoomed grids."""
import math

import numpy as np

INV_PHI = (math.sqrt(5) - 1) / 2


def golden_section_max(f, a, b, tol=1e-10, max_iter=200):
    """Maximize a unimodal ``f`` on [a, b]; returns (x, f(x)).

    The returned point is the best of the final bracket and the two ends, so
    boundary maxima are reported as such.
    """
    a, b = min(a, b), max(a, b)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while abs(b - a) > tol * max(1.0, abs(a) + abs(b)) and it < max_iter:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        it += 1
    candidates = [(fc, c), (fd, d), (f(a), a), (f(b), b)]
    best = max(candidates, key=lambda t: t[0])
    return best[1], best[0]


def grid_argmax_2d(f, xs, ys):
    """Evaluate vectorized ``f(X, Y)`` on a grid; returns (ix, iy, values)."""
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vals = np.asarray(f(X, Y), float)
    vals = np.where(np.isfinite(vals), vals, -np.inf)
    ix, iy = np.unravel_index(int(np.argmax(vals)), vals.shape)
    return ix, iy, vals


def refine_2d(f, x0, y0, hx, hy, x_bounds, y_period=None, y_bounds=None, zoom=4, n=11, levels=12, tol=1e-12):
    """Zoomed-grid refinement around (x0, y0), then a golden-section polish per axis.

    ``f`` must accept numpy arrays. ``y_period`` makes the second coordinate
    periodic (phases); otherwise ``y_bounds`` clips it.
    """
    x, y = x0, y0
    best = float(f(np.array(x), np.array(y)))
    for _ in range(levels):
        xs = np.clip(np.linspace(x - hx, x + hx, n), *x_bounds)
        ys = np.linspace(y - hy, y + hy, n)
        if y_period is None:
            ys = np.clip(ys, *y_bounds)
        ix, iy, vals = grid_argmax_2d(f, xs, ys)
        if vals[ix, iy] >= best:
            x, y, best = xs[ix], ys[iy], float(vals[ix, iy])
        hx /= zoom
        hy /= zoom

    for _ in range(3):
        lo, hi = max(x - 4 * hx, x_bounds[0]), min(x + 4 * hx, x_bounds[1])
        xn, vx = golden_section_max(lambda t: float(f(np.array(t), np.array(y))), lo, hi, tol=tol)
        if vx >= best:
            x, best = xn, vx
        lo, hi = y - 4 * hy, y + 4 * hy
        if y_period is None:
            lo, hi = max(lo, y_bounds[0]), min(hi, y_bounds[1])
        yn, vy = golden_section_max(lambda t: float(f(np.array(x), np.array(t))), lo, hi, tol=tol)
        if vy >= best:
            y, best = yn, vy
    if y_period is not None:
        y = y % y_period
    return x, y, best
