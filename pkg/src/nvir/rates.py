"""Eight-level NV rate model: generator construction, steady state, time evolution.

Level indexing (0-based array index -> state):

    0  |1>  3A2, ms = 0
    1  |2>  3A2, ms = +-1
    2  |3>  3E,  ms = 0
    3  |4>  3E,  ms = +-1
    4  |5>  1A1 (upper singlet)
    5  |6>  1E  (lower, metastable singlet)
    6  |7>  NV0 excited
    7  |8>  NV0 ground

Populations are kept as densities in m^-3 at the interface. Internally the
solvers work on fractions of n_NV so that tolerances are scale free.
"""
from dataclasses import dataclass
import csv
import io
import logging
import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import DegenerateSteadyState, NumericalError, StiffnessError, ValidationError
from .params import photon_energy

log = logging.getLogger(__name__)

N_LEVELS = 8
LEVEL_LABELS = ("n1", "n2", "n3", "n4", "n5", "n6", "n7", "n8")
GROUND = (0, 1)

# fractions above -CLAMP_THRESHOLD are treated as round-off and clamped to 0
CLAMP_THRESHOLD = 1e-12


def microwave_rate(Omega_R, T2_star):
    """Incoherent MW transition rate Omega_R^2 T2* / 2 (s^-1)."""
    return Omega_R**2 * T2_star / 2


def optical_rate(sigma, intensity, wavelength, enhancement=1.0):
    """Excitation rate sigma*I/(hbar*omega), scaled by a local |E/E0|^2 factor."""
    return enhancement * sigma * intensity / photon_energy(wavelength)


@dataclass(frozen=True)
class LevelPopulations:
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.shape != (N_LEVELS,):
            raise ValidationError(f"expected {N_LEVELS} level densities, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __getattr__(self, name):
        if name in LEVEL_LABELS:
            return float(self.values[LEVEL_LABELS.index(name)])
        raise AttributeError(name)

    @property
    def total(self):
        return float(self.values.sum())

    def as_dict(self):
        return dict(zip(LEVEL_LABELS, map(float, self.values)))


def net_singlet_population(pop):
    """n6 - n5, the net density available for 1042 nm absorption."""
    values = pop.values if isinstance(pop, LevelPopulations) else np.asarray(pop)
    return values[..., 5] - values[..., 4]


@dataclass(frozen=True)
class RateGenerator:
    """dn/dt = matrix @ n, with matrix[i, j] the rate from level j to level i."""

    matrix: np.ndarray
    W_pump: float = 0.0
    W_probe: float = 0.0
    W_MW: float = 0.0
    W_NV0: float = 0.0

    def column_sums(self):
        return self.matrix.sum(axis=-2)


def generator_matrix(params, drive, enh_pump=1.0, enh_probe=1.0):
    """Rate matrices for (arrays of) local enhancement factors.

    Returns an array of shape ``broadcast(enh_pump, enh_probe).shape + (8, 8)``.
    All green-driven processes (pumping, photoionization, NV0 excitation and
    recombination) see the local pump intensity I_t * enh_pump.
    """
    enh_pump, enh_probe = np.broadcast_arrays(
        np.asarray(enh_pump, dtype=float), np.asarray(enh_probe, dtype=float)
    )
    if np.any(enh_pump < 0) or np.any(enh_probe < 0):
        raise ValidationError("enhancement factors must be nonnegative")
    I_loc = drive.I_t * enh_pump
    W_pump = optical_rate(params.sigma_t, I_loc, drive.lambda_pump)
    W_probe = optical_rate(params.sigma_s, drive.I_s, drive.lambda_probe, enh_probe)
    W_NV0 = optical_rate(params.sigma_NV0, I_loc, drive.lambda_pump)
    W_MW = microwave_rate(params.Omega_R, params.T2_star) if drive.mw_on else 0.0

    G = np.zeros(enh_pump.shape + (N_LEVELS, N_LEVELS))

    def link(src, dst, rate):
        G[..., dst, src] += rate

    link(0, 1, W_MW)
    link(1, 0, W_MW)
    link(0, 2, W_pump)
    link(1, 3, W_pump)
    link(2, 0, params.k31)
    link(2, 4, params.k35)
    link(2, 7, params.k38 * I_loc)
    link(3, 1, params.k42)
    link(3, 4, params.k45)
    link(3, 7, params.k48 * I_loc)
    link(4, 5, params.singlet_decay + W_probe)
    link(5, 4, W_probe)
    link(5, 0, params.k61)
    link(5, 1, params.k62)
    link(6, 0, params.k71 * I_loc)
    link(6, 1, params.k72 * I_loc)
    link(6, 7, params.Gamma_NV0)
    link(7, 6, W_NV0)

    idx = np.arange(N_LEVELS)
    G[..., idx, idx] = -G.sum(axis=-2)
    return G


def build_generator(params, drive, local_enh_pump=1.0, local_enh_probe=1.0):
    if local_enh_pump < 0 or local_enh_probe < 0:
        raise ValidationError("enhancement factors must be nonnegative")
    I_loc = drive.I_t * local_enh_pump
    return RateGenerator(
        matrix=generator_matrix(params, drive, local_enh_pump, local_enh_probe),
        W_pump=optical_rate(params.sigma_t, I_loc, drive.lambda_pump),
        W_probe=optical_rate(params.sigma_s, drive.I_s, drive.lambda_probe, local_enh_probe),
        W_MW=microwave_rate(params.Omega_R, params.T2_star) if drive.mw_on else 0.0,
        W_NV0=optical_rate(params.sigma_NV0, I_loc, drive.lambda_pump),
    )


def _as_matrix(gen):
    return gen.matrix if isinstance(gen, RateGenerator) else np.asarray(gen, dtype=float)


def _check_columns(G):
    scale = max(np.abs(G).max(), 1.0)
    if np.abs(G.sum(axis=-2)).max() > 1e-9 * scale:
        raise ValidationError("generator columns must sum to zero")


def reachable_levels(G, start=GROUND):
    """Indices reachable from ``start`` along nonzero transition rates."""
    seen = set(start)
    stack = list(start)
    while stack:
        j = stack.pop()
        for i in np.nonzero(G[:, j] > 0)[0]:
            if i not in seen:
                seen.add(int(i))
                stack.append(int(i))
    return sorted(seen)


def _stationary(G):
    """Null vector of a column-conservative G, normalized to unit sum."""
    n = G.shape[0]
    A = G.copy()
    A[0, :] = 1.0
    b = np.zeros(n)
    b[0] = 1.0
    return np.linalg.solve(A, b)


def _clamp(frac):
    neg = (frac < 0) & (frac >= -CLAMP_THRESHOLD)
    count = int(np.count_nonzero(neg))
    frac = np.where(neg, 0.0, frac)
    if np.any(frac < 0):
        log.warning("population below -%g of n_NV after integration", CLAMP_THRESHOLD)
    return frac, count


def steady_state(gen, n_NV, start=GROUND):
    """Stationary populations under the conservation constraint sum(n) = n_NV.

    Only the levels reachable from ``start`` (default: the NV- ground triplet)
    take part. If more than one closed class is reachable (e.g. dark and no
    microwaves) the stationary state is not unique and
    ``DegenerateSteadyState`` is raised.
    """
    G = _as_matrix(gen)
    _check_columns(G)
    keep = reachable_levels(G, start)
    Gs = G[np.ix_(keep, keep)]
    scale = max(np.abs(Gs).max(), 1.0)
    sv = np.linalg.svd(Gs / scale, compute_uv=False)
    nullity = int(np.count_nonzero(sv < 1e-12 * len(keep)))
    if nullity != 1:
        raise DegenerateSteadyState(nullity)
    frac = np.zeros(N_LEVELS)
    frac[keep] = _stationary(Gs / scale)
    frac, _ = _clamp(frac)
    return LevelPopulations(frac * n_NV)


def steady_state_batch(G, n_NV):
    """Vectorized steady state for a stack of irreducible generators (..., 8, 8).

    Stacks that turn out singular are re-solved one by one through
    ``steady_state`` so that degeneracy is reported the same way.
    """
    G = np.asarray(G, dtype=float)
    shape = G.shape[:-2]
    flat = G.reshape(-1, N_LEVELS, N_LEVELS)
    scale = np.maximum(np.abs(flat).max(axis=(1, 2)), 1.0)[:, None, None]
    A = flat / scale
    A[:, 0, :] = 1.0
    b = np.zeros((flat.shape[0], N_LEVELS))
    b[:, 0] = 1.0
    try:
        frac = np.linalg.solve(A, b[..., None])[..., 0]
    except np.linalg.LinAlgError:
        frac = np.full_like(b, np.nan)
    bad = ~np.all(np.isfinite(frac), axis=1)
    for k in np.nonzero(bad)[0]:
        frac[k] = steady_state(flat[k], 1.0).values
    frac = np.where((frac < 0) & (frac >= -CLAMP_THRESHOLD), 0.0, frac)
    return (frac * n_NV).reshape(shape + (N_LEVELS,))


@dataclass(frozen=True)
class PopulationTrace:
    times: np.ndarray
    populations: np.ndarray  # (len(times), 8), m^-3
    clamped: int = 0

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValidationError("trace times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def __getitem__(self, k):
        return LevelPopulations(self.populations[k])

    @property
    def net_singlet(self):
        return net_singlet_population(self.populations)

    def to_csv(self, fh=None):
        out = fh or io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(("time_s",) + LEVEL_LABELS)
        for t, row in zip(self.times, self.populations):
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])
        if fh is None:
            return out.getvalue()


def _sample_times(t_end, sampling):
    if t_end <= 0:
        raise ValidationError("t_end must be positive")
    if sampling <= 0:
        raise ValidationError("sampling must be positive")
    n = max(int(math.floor(t_end / sampling + 1e-9)), 1)
    times = np.arange(n + 1) * sampling
    if times[-1] < t_end * (1 - 1e-12):
        times = np.append(times, t_end)
    return times


def evolve(gen, initial, t_end, sampling, method="Radau", rtol=1e-10, atol=1e-14):
    """Integrate dn/dt = G n from ``initial`` and sample every ``sampling`` seconds.

    ``method`` is any implicit scipy integrator ("Radau", "BDF", "LSODA") or
    "expm", which applies the exact one-step propagator expm(G*sampling).
    """
    G = _as_matrix(gen)
    _check_columns(G)
    n0 = np.asarray(initial.values if isinstance(initial, LevelPopulations) else initial, float)
    total = n0.sum()
    if total <= 0 or np.any(n0 < 0):
        raise ValidationError("initial populations must be nonnegative with positive total")
    frac0 = n0 / total
    times = _sample_times(t_end, sampling)

    if method == "expm":
        frac = propagate(G, frac0, times)
    else:
        sol = solve_ivp(
            lambda t, y: G @ y,
            (0.0, times[-1]),
            frac0,
            method=method,
            t_eval=times,
            jac=G,
            rtol=rtol,
            atol=atol,
        )
        if not sol.success:
            raise StiffnessError(f"integration failed at t={sol.t[-1]:.3e} s: {sol.message}")
        frac = sol.y.T
    frac, clamped = _clamp(frac)
    if clamped:
        log.debug("clamped %d round-off negative samples", clamped)
    return PopulationTrace(times, frac * total, clamped)


def propagate(G, frac0, times):
    """Exact solution on a uniform time grid via the matrix exponential.

    ``G`` may be a stack (..., 8, 8) with matching ``frac0`` (..., 8); the
    result has shape (len(times), ..., 8).
    """
    dt = np.diff(times)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
        steps = [expm(G * h) for h in dt]
    else:
        P = expm(G * dt[0])
        steps = None
    out = np.empty((len(times),) + np.shape(frac0))
    out[0] = frac0
    y = np.asarray(frac0, float)
    for k in range(1, len(times)):
        M = P if steps is None else steps[k - 1]
        y = np.einsum("...ij,...j->...i", M, y)
        out[k] = y
    if not np.all(np.isfinite(out)):
        raise NumericalError("matrix-exponential propagation produced non-finite values")
    return out
