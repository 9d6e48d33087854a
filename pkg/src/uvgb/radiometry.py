"""Linear pixel-value to percent-reflectance calibration.

The fit regresses %R (response) on mean pixel value (predictor) by ordinary
least squares, from images of reflectance standards of known %R.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .types import BBox, DataError, MonoImage

CSV_HEADER = ("standard_id", "percent_reflectance", "mean_pixel_value")
MIN_SAMPLE_PIXELS = 10


@dataclass(frozen=True)
class ReflectanceSample:
    standard_id: int
    percent_reflectance: float
    mean_pixel_value: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.percent_reflectance <= 100.0:
            raise DataError(f"percent_reflectance out of [0, 100]: {self.percent_reflectance}")
        if not 0.0 <= self.mean_pixel_value <= 255.0:
            raise DataError(f"mean_pixel_value out of [0, 255]: {self.mean_pixel_value}")


@dataclass(frozen=True)
class CalibrationCurve:
    slope: float
    intercept: float
    r_squared: float = 1.0
    pixel_min: float = 0.0
    pixel_max: float = 255.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.r_squared <= 1.0:
            raise DataError(f"r_squared must lie in [0, 1], got {self.r_squared}")
        if not self.pixel_min < self.pixel_max:
            raise DataError("pixel_range min must be below max")

    @property
    def pixel_range(self) -> tuple[float, float]:
        return (self.pixel_min, self.pixel_max)

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


class Reflectance(NamedTuple):
    percent: float
    clamped: bool
    extrapolated: bool


def fit_calibration(samples: Sequence[ReflectanceSample]) -> CalibrationCurve:
    if len(samples) < 2:
        raise DataError(f"need at least 2 samples, got {len(samples)}")
    x = np.array([s.mean_pixel_value for s in samples], dtype=np.float64)
    y = np.array([s.percent_reflectance for s in samples], dtype=np.float64)
    xm, ym = x.mean(), y.mean()
    dx, dy = x - xm, y - ym
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise DataError("zero variance in pixel values; cannot fit a line")
    slope = float(dx @ dy) / sxx
    intercept = float(ym - slope * xm)
    ss_tot = float(dy @ dy)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    # flat response fitted exactly: treat as a perfect fit
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    r2 = min(1.0, max(0.0, r2))
    return CalibrationCurve(slope, intercept, r2, float(x.min()), float(x.max()))


def pixel_to_reflectance(curve: CalibrationCurve, pixel: float) -> Reflectance:
    raw = curve.slope * pixel + curve.intercept
    value = min(100.0, max(0.0, raw))
    return Reflectance(
        percent=value,
        clamped=value != raw,
        extrapolated=not (curve.pixel_min <= pixel <= curve.pixel_max),
    )


def reflectance_to_pixel(curve: CalibrationCurve, percent_reflectance: float) -> float:
    if curve.slope == 0.0:
        raise DataError("zero slope: calibration is not invertible")
    return (percent_reflectance - curve.intercept) / curve.slope


def sample_from_image(img: MonoImage, region: BBox) -> float:
    """Mean luminance over the pixels whose centres fall inside ``region``."""
    x0 = max(0, math.ceil(region.x - 0.5))
    y0 = max(0, math.ceil(region.y - 0.5))
    x1 = min(img.width, math.ceil(region.x2 - 0.5))
    y1 = min(img.height, math.ceil(region.y2 - 0.5))
    count = max(0, x1 - x0) * max(0, y1 - y0)
    if count == 0:
        raise DataError("sample region lies outside the image")
    if count < MIN_SAMPLE_PIXELS:
        raise DataError(f"sample region covers {count} pixels; need at least {MIN_SAMPLE_PIXELS}")
    return float(img.pixels[y0:y1, x0:x1].mean(dtype=np.float64))


def synthetic_standards(
    slope: float = 0.4,
    intercept: float = 2.0,
    noise_pct: float = 1.0,
    seed: int = 0,
    pixels: Sequence[float] = (15.0, 55.0, 95.0, 135.0, 175.0, 215.0),
    noise: str = "uniform",
) -> list[ReflectanceSample]:
    """Six reflectance standards on a known line, with bounded or Gaussian %R noise.

    ``noise="uniform"`` draws from [-noise_pct, +noise_pct]; ``"gaussian"``
    uses ``noise_pct`` as the standard deviation. Values are clipped to [0, 100].
    """
    rng = np.random.default_rng(seed)
    out = []
    for i, px in enumerate(pixels, start=1):
        if noise == "uniform":
            eps = rng.uniform(-noise_pct, noise_pct) if noise_pct else 0.0
        elif noise == "gaussian":
            eps = rng.normal(0.0, noise_pct) if noise_pct else 0.0
        else:
            raise ValueError(f"unknown noise model {noise!r}")
        r = min(100.0, max(0.0, slope * px + intercept + eps))
        out.append(ReflectanceSample(i, r, float(px)))
    return out


def read_samples_csv(path: str | Path) -> list[ReflectanceSample]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise DataError(f"{path}: row 1: expected header {','.join(CSV_HEADER)}")
        out = []
        for rowno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise DataError(f"{path}: row {rowno}: expected 3 fields, got {len(row)}")
            try:
                out.append(ReflectanceSample(int(row[0]), float(row[1]), float(row[2])))
            except ValueError as exc:
                raise DataError(f"{path}: row {rowno}: {exc}") from exc
    return out


def write_samples_csv(path: str | Path, samples: Sequence[ReflectanceSample]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for s in samples:
            w.writerow([s.standard_id, repr(s.percent_reflectance), repr(s.mean_pixel_value)])
    return path


def write_calibration(path: str | Path, curve: CalibrationCurve, n_samples: int) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "slope": curve.slope,
        "intercept": curve.intercept,
        "r_squared": curve.r_squared,
        "pixel_range": [curve.pixel_min, curve.pixel_max],
        "n_samples": n_samples,
    }
    path.write_text(json.dumps(doc, indent=2) + "\n")
    return path


def read_calibration(path: str | Path) -> CalibrationCurve:
    doc = json.loads(Path(path).read_text())
    lo, hi = doc["pixel_range"]
    return CalibrationCurve(doc["slope"], doc["intercept"], doc["r_squared"], lo, hi)
