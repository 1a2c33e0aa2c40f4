import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nvir.config import FieldMapSources, RunConfig
from nvir.fieldmap import default_maps, synthetic_field_map
from nvir.params import LAMBDA_PROBE, LAMBDA_PUMP, MW_PER_UM2, OpticalDrive, PhotophysicsParams

settings.register_profile(
    "nvir", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("nvir")


@pytest.fixture(scope="session")
def params():
    return PhotophysicsParams()


@pytest.fixture(scope="session")
def drive():
    return OpticalDrive()


@pytest.fixture(scope="session")
def maps():
    return default_maps()


@pytest.fixture(scope="session")
def small_cfg():
    """Coarser synthetic grid for pipeline tests that loop over many points."""
    return RunConfig(field_maps=FieldMapSources(nx=5, ny=51))


def uniform_maps(value=1.0, ny=11, y_max=10e-6):
    pump = synthetic_field_map(rwa_amplitude=value, nx=3, ny=ny, y_max=y_max, wavelength=LAMBDA_PUMP)
    probe = synthetic_field_map(rwa_amplitude=value, nx=3, ny=ny, y_max=y_max, wavelength=LAMBDA_PROBE)
    return pump, probe


def mw_per_um2(x):
    return x * MW_PER_UM2


def rel(a, b):
    return abs(a - b) / abs(b)


def random_drive(rng):
    """Drive spanning dark-ish to strongly saturating conditions."""
    return OpticalDrive(
        I_t=mw_per_um2(10 ** rng.uniform(-3, 1.5)),
        I_s=mw_per_um2(10 ** rng.uniform(-3, 1)),
        mw_on=bool(rng.integers(2)),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# ---- acceptance summary ---------------------------------------------------

_ACCEPTANCE = []
_T0 = []


def record_acceptance(line):
    _ACCEPTANCE.append(line)


def pytest_sessionstart(session):
    import time

    _T0.append(time.perf_counter())


def pytest_terminal_summary(terminalreporter):
    import time

    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for line in _ACCEPTANCE:
        tr.write_line(line)
    elapsed = time.perf_counter() - _T0[0]
    tag = "PASS" if elapsed < 600 else "FAIL"
    tr.write_line(f"[{tag}] criterion 12 (runtime): session took {elapsed:.1f} s (< 600 s)")
