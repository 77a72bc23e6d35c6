"""Quantitative comparison of adjoint, full least-squares, and block-row
recursive images: data misfit, in-band model error, and run reports."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .wem import Reflectivity

__all__ = [
    "RunReport",
    "data_misfit",
    "model_error",
    "vertical_band",
    "bandpass_depth",
    "scale_to_data",
    "format_report",
    "parse_report",
]

METHODS = ("adjoint", "lsm", "brls")


@dataclass
class RunReport:
    """Summary of one imaging run."""

    method: str
    data_misfit: float
    model_error: float
    wall_time: float = 0.0
    per_window_iterations: list | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.data_misfit < 0 or self.model_error < 0:
            raise ValueError("data_misfit and model_error must be >= 0")


def data_misfit(blocks, m) -> float:
    """Squared data residual over all blocks: sum_i ||A_i m - d_i||^2."""
    m = np.asarray(m, dtype=np.float64).ravel()
    total = 0.0
    for b in blocks:
        r = b.operator.forward(m) - b.data
        total += float(r @ r)
    return total


def scale_to_data(blocks, m) -> float:
    """Scalar alpha minimizing ||alpha * A m - d|| over the survey.

    Used to put an adjoint image on the data's amplitude scale before
    misfit comparisons (the raw adjoint has arbitrary scale).
    """
    m = np.asarray(m, dtype=np.float64).ravel()
    num = 0.0
    den = 0.0
    for b in blocks:
        pred = b.operator.forward(m)
        num += float(pred @ b.data)
        den += float(pred @ pred)
    return num / den if den > 0 else 0.0


def vertical_band(
    band_hz: tuple[float, float], v_min: float, v_max: float
) -> tuple[float, float]:
    """Map a temporal band to vertical wavenumbers (cycles/m) via k = 2 f / v.

    Returns the intersection of the per-depth recoverable bands, i.e. the
    wavenumbers the data constrain at every velocity between ``v_min`` and
    ``v_max``; projecting onto it makes in-band errors meaningful for
    depth-varying media.
    """
    f_lo, f_hi = band_hz
    if not (0 < f_lo < f_hi) or not (0 < v_min <= v_max):
        raise ValueError(f"invalid band {band_hz} or velocities ({v_min}, {v_max})")
    k_lo = 2.0 * f_lo / v_min
    k_hi = 2.0 * f_hi / v_max
    if not k_lo < k_hi:
        raise ValueError(
            f"velocity spread ({v_min}, {v_max}) leaves no wavenumbers "
            f"recoverable at every depth for band {band_hz}"
        )
    return (k_lo, k_hi)


def bandpass_depth(values: np.ndarray, d1: float, band: tuple[float, float]) -> np.ndarray:
    """Zero-phase band-pass along the depth axis (axis 0), band in cycles/m."""
    k_lo, k_hi = band
    n1 = values.shape[0]
    k = np.fft.rfftfreq(n1, d=d1)
    mask = ((k >= k_lo) & (k <= k_hi)).astype(float)
    return np.fft.irfft(np.fft.rfft(values, axis=0) * mask[:, None], n=n1, axis=0)


def model_error(m, truth: Reflectivity, band: tuple[float, float] | None = None) -> float:
    """Relative L2 error ||m - P truth|| / ||P truth||.

    ``band`` (vertical wavenumbers, cycles/m; see :func:`vertical_band`)
    selects the in-band projection P, applied to both the image and the
    truth; without it the comparison is raw.
    """
    t = truth.values
    img = np.asarray(m, dtype=np.float64).ravel().reshape(t.shape)
    if band is not None:
        img = bandpass_depth(img, truth.grid.d1, band)
        t = bandpass_depth(t, truth.grid.d1, band)
    denom = float(np.linalg.norm(t))
    if denom == 0.0:
        raise ValueError("truth reflectivity is identically zero")
    return float(np.linalg.norm(img - t)) / denom


# ---------------------------------------------------------------------------
# key=value report serialization
# ---------------------------------------------------------------------------

def format_report(report: RunReport) -> str:
    """Render a report as key=value lines (stable field order)."""
    lines = [
        f"method={report.method}",
        f"data_misfit={report.data_misfit!r}",
        f"model_error={report.model_error!r}",
        f"wall_time={report.wall_time!r}",
    ]
    if report.per_window_iterations is not None:
        joined = ",".join(str(int(i)) for i in report.per_window_iterations)
        lines.append(f"per_window_iterations={joined}")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> RunReport:
    """Inverse of :func:`format_report`; round-trips losslessly."""
    fields: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"malformed report line: {raw!r}")
        key, value = line.split("=", 1)
        fields[key.strip()] = value.strip()
    for required in ("method", "data_misfit", "model_error", "wall_time"):
        if required not in fields:
            raise ValueError(f"report is missing key {required!r}")
    iters = None
    if "per_window_iterations" in fields:
        raw_list = fields["per_window_iterations"]
        iters = [int(s) for s in raw_list.split(",")] if raw_list else []
    report = RunReport(
        method=fields["method"],
        data_misfit=float(fields["data_misfit"]),
        model_error=float(fields["model_error"]),
        wall_time=float(fields["wall_time"]),
        per_window_iterations=iters,
    )
    if not (math.isfinite(report.data_misfit) and math.isfinite(report.model_error)):
        raise ValueError("report contains non-finite values")
    return report
