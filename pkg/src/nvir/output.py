"""CSV and SVG writers used by the CLI.

Every CSV starts with one ``#`` provenance line carrying a timestamp; the
rest of the file is a deterministic function of the inputs.
"""
import csv
import datetime as _dt
import hashlib
import io
import math
from pathlib import Path

from .params import MW_PER_UM2, UM

UNMEASURABLE = "unmeasurable"

SENSITIVITY_COLUMNS = ("I_t", "I_s", "d_NV", "mode", "eta_cw", "eta_ac", "eta_sp", "sigma_R", "t_read_opt", "status")
DETECTION_COLUMNS = ("I_t", "I_s", "mode", "R", "dphi_LO", "SNR_per_sqrt_area", "status")
UNITS_LINE = (
    "# units: I_t,I_s mW/um^2; d_NV um; eta_* nT Hz^-1/2 um (nT/sqrt(Hz) for a 1 um^2 pixel); "
    "t_read_opt s; SNR_per_sqrt_area s^-1/2 m^-1"
)


def fmt(v):
    if isinstance(v, str):
        return v
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    v = float(v)
    if math.isinf(v):
        return UNMEASURABLE
    if math.isnan(v):
        return ""
    return format(v, ".10g")


def header_line(command):
    stamp = _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return f"# nvir {command} generated {stamp}"


def write_csv(path, command, columns, rows, comments=()):
    buf = io.StringIO()
    buf.write(header_line(command) + "\n")
    for c in comments:
        buf.write(c + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if path is None:
        return text
    Path(path).write_text(text)
    return text


def csv_body(text):
    """Drop the timestamped provenance line."""
    return "".join(text.splitlines(keepends=True)[1:])


def sensitivity_row(report=None, values=None, mode=None, error=None, cfg=None):
    """Row in figure units for one sweep point; error rows keep the inputs."""
    if report is None:
        drive = cfg.drive if cfg else None
        return (
            values.get("I_t", drive.I_t / MW_PER_UM2 if drive else None),
            values.get("I_s", drive.I_s / MW_PER_UM2 if drive else None),
            values.get("d_NV", cfg.geometry.d_NV / UM if cfg else None),
            mode, None, None, None, None, None, f"error: {error}",
        )
    to_nT_um = 1e9 / UM
    return (
        report.I_t / MW_PER_UM2,
        report.I_s / MW_PER_UM2,
        report.d_NV / UM,
        report.mode,
        report.eta_cw * to_nT_um,
        report.eta_ac * to_nT_um,
        report.eta_sp * to_nT_um,
        report.sigma_R,
        report.t_read_opt,
        report.status,
    )


def detection_row(report=None, values=None, mode=None, error=None, cfg=None):
    if report is None:
        base = sensitivity_row(None, values, mode, error, cfg)
        return (base[0], base[1], mode, None, None, None, base[-1])
    return (
        report.I_t / MW_PER_UM2,
        report.I_s / MW_PER_UM2,
        report.mode,
        report.R,
        report.delta_phi_LO,
        report.snr,
        report.status,
    )


def save_svg(fig, path, provenance_csv=None):
    """Write a figure as SVG with an XML comment pointing at its source CSV."""
    import matplotlib

    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    svg = buf.getvalue()
    if provenance_csv is not None:
        data = Path(provenance_csv).read_text()
        digest = hashlib.sha256(csv_body(data).encode()).hexdigest()
        note = f"<!-- data: {Path(provenance_csv).name} sha256(body)={digest} matplotlib={matplotlib.__version__} -->\n"
        head, sep, rest = svg.partition("?>\n")
        svg = head + sep + note + rest if sep else note + svg
    Path(path).write_text(svg)
