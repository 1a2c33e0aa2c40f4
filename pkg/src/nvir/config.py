"""Run configuration: JSON document <-> RunConfig.

Schema (all keys optional, SI units throughout)::

    {
      "schema_version": 1,
      "photophysics": {"k31": ..., "n_NV": ..., ...},
      "drive":        {"I_t": ..., "I_s": ..., "mw_on": false, ...},
      "geometry":     {"L": ..., "d_NV": ..., "p": ..., ...},
      "detection":    {"R": ..., "delta_phi_LO": ..., "R0": ..., "phase_kappa": ...,
                       "phase_table": [[A, dphi], ...] | null},
      "metal":        {"eps_inf": ..., "omega_p_eV": ..., "gamma_eV": ...},
      "field_maps":   {"pump": path | null, "probe": path | null, "nx": 9, "ny": 101, "y_max": ...},
      "solver":       {"method": "Radau", "rtol": ..., "atol": ...},
      "readout":      {"t_mea": ..., "t_init": ..., "t_max": ..., "n_samples": ...,
                       "conversion_efficiency": 1.0}
    }

Unset fields fall back to the defaults. The environment variable
``NVIR_CONFIG`` names a config file used when no path is given explicitly.
"""
from dataclasses import asdict, dataclass, field, fields, replace
import json
import os
from pathlib import Path

from .detection import DetectionConfig, load_phase_table
from .errors import SchemaError, ValidationError
from .params import UM, OpticalDrive, PhotophysicsParams, PixelGeometry
from .photonics import DrudeMetal

SCHEMA_VERSION = 1
ENV_VAR = "NVIR_CONFIG"


@dataclass(frozen=True)
class FieldMapSources:
    pump: str = None
    probe: str = None
    nx: int = 9
    ny: int = 101
    y_max: float = 10 * UM

    section = "field_maps"

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValidationError("synthetic grids need >= 2 points per axis", key=f"{self.section}.nx")
        if not self.y_max > 0:
            raise ValidationError("must be positive", key=f"{self.section}.y_max")


@dataclass(frozen=True)
class SolverSettings:
    method: str = "Radau"
    rtol: float = 1e-10
    atol: float = 1e-14

    section = "solver"

    def __post_init__(self):
        if self.method not in ("Radau", "BDF", "LSODA", "expm"):
            raise ValidationError(f"unsupported method {self.method!r}", key=f"{self.section}.method")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValidationError("tolerances must be positive", key=f"{self.section}.rtol")


@dataclass(frozen=True)
class ReadoutSettings:
    t_mea: float = 10e-6
    t_init: float = 5e-6
    t_max: float = 10e-6
    n_samples: int = 1000
    # multiplies n_NV everywhere; stands for the N -> NV- conversion efficiency
    conversion_efficiency: float = 1.0

    section = "readout"

    def __post_init__(self):
        for name in ("t_mea", "t_max"):
            if not getattr(self, name) > 0:
                raise ValidationError("must be positive", key=f"{self.section}.{name}")
        if self.t_init < 0:
            raise ValidationError("must be nonnegative", key=f"{self.section}.t_init")
        if self.n_samples < 10:
            raise ValidationError("need at least 10 samples", key=f"{self.section}.n_samples")
        if not 0 < self.conversion_efficiency <= 1:
            raise ValidationError("must lie in (0, 1]", key=f"{self.section}.conversion_efficiency")


@dataclass(frozen=True)
class RunConfig:
    photophysics: PhotophysicsParams = field(default_factory=PhotophysicsParams)
    drive: OpticalDrive = field(default_factory=OpticalDrive)
    geometry: PixelGeometry = field(default_factory=PixelGeometry)
    detection: DetectionConfig = field(default_factory=DetectionConfig)
    metal: DrudeMetal = field(default_factory=DrudeMetal)
    field_maps: FieldMapSources = field(default_factory=FieldMapSources)
    solver: SolverSettings = field(default_factory=SolverSettings)
    readout: ReadoutSettings = field(default_factory=ReadoutSettings)

    @property
    def effective_params(self):
        """Photophysics with n_NV scaled by the conversion efficiency."""
        ce = self.readout.conversion_efficiency
        if ce == 1:
            return self.photophysics
        return replace(self.photophysics, n_NV=self.photophysics.n_NV * ce)

    def with_drive(self, **kw):
        return replace(self, drive=replace(self.drive, **kw))

    def with_geometry(self, **kw):
        return replace(self, geometry=replace(self.geometry, **kw))


_SECTIONS = {f.name: f.default_factory for f in fields(RunConfig)}


def _coerce(section, cls, key, value):
    ftypes = {f.name: f.type for f in fields(cls)}
    if key not in ftypes:
        raise SchemaError(f"unknown key (allowed: {', '.join(sorted(ftypes))})", key=f"{section}.{key}")
    default = getattr(cls(), key)
    where = f"{section}.{key}"
    if value is None:
        if default is None:
            return None
        raise SchemaError("null not allowed", key=where)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise SchemaError(f"expected a boolean, got {value!r}", key=where)
        return value
    if isinstance(default, int) and not isinstance(default, bool) and key in ("nx", "ny", "n_samples"):
        if not isinstance(value, int) or isinstance(value, bool):
            raise SchemaError(f"expected an integer, got {value!r}", key=where)
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(f"expected a number, got {value!r}", key=where)
        return float(value)
    if key == "phase_table":
        if isinstance(value, str):
            return load_phase_table(value)
        try:
            return tuple((float(a), float(b)) for a, b in value)
        except (TypeError, ValueError):
            raise SchemaError("expected a list of [A_pixel, dphi] pairs or a CSV path", key=where) from None
    if isinstance(default, str) or default is None:
        if not isinstance(value, str):
            raise SchemaError(f"expected a string, got {value!r}", key=where)
        return value
    raise SchemaError(f"unsupported value {value!r}", key=where)


def config_from_dict(doc):
    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object")
    doc = dict(doc)
    version = doc.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported version {version!r}", key="schema_version")
    parts = {}
    for section, body in doc.items():
        if section not in _SECTIONS:
            raise SchemaError(f"unknown section (allowed: {', '.join(_SECTIONS)})", key=section)
        if not isinstance(body, dict):
            raise SchemaError("section must be an object", key=section)
        cls = type(_SECTIONS[section]())
        kwargs = {k: _coerce(section, cls, k, v) for k, v in body.items()}
        parts[section] = cls(**kwargs)
    return RunConfig(**parts)


def load_config(source):
    """Parse a JSON document (string) into a validated RunConfig."""
    text = source.strip() if isinstance(source, str) else ""
    if not text:
        return RunConfig()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from None
    return config_from_dict(doc)


def load_config_file(path=None):
    """Load from ``path``, else from $NVIR_CONFIG, else defaults."""
    path = path or os.environ.get(ENV_VAR)
    if not path:
        return RunConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config: {exc}", key=str(path)) from None
    return load_config(text)


def config_to_dict(cfg):
    doc = {"schema_version": SCHEMA_VERSION}
    for section in _SECTIONS:
        body = asdict(getattr(cfg, section))
        if section == "detection" and body["phase_table"] is not None:
            body["phase_table"] = [list(row) for row in body["phase_table"]]
        doc[section] = body
    return doc


def dump_config(cfg):
    return json.dumps(config_to_dict(cfg), indent=2)
