"""Flower detectors: a bright-blob baseline and an external model boundary.

UV-reflective flowers show up as bright, compact, roughly round blobs in the
monochrome frames. The baseline keeps 8-connected components of the
thresholded image whose area and circularity look like a flower. Ripening
fruit is just as bright in this band and passes the same filters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np

from . import kernels
from .imaging.tiling import stitch_detections, tile
from .imaging.transform import resize
from .types import BBox, DataError, Detection, MonoImage

DEFAULT_CONFIDENCE_THRESHOLD = 0.51


class BackendError(RuntimeError):
    """The external inference backend is unavailable or failed."""


@dataclass(frozen=True)
class BlobDetectorConfig:
    brightness_threshold: int = 200
    min_area_px: float = 5.0
    max_area_px: float = 5000.0
    min_circularity: float = 0.6

    def __post_init__(self) -> None:
        if not 0 <= self.brightness_threshold <= 255:
            raise DataError(f"brightness_threshold must lie in [0, 255], got {self.brightness_threshold}")
        if not 0 <= self.min_area_px < self.max_area_px:
            raise DataError("need 0 <= min_area_px < max_area_px")
        if not 0.0 <= self.min_circularity <= 1.0:
            raise DataError(f"min_circularity must lie in [0, 1], got {self.min_circularity}")


@dataclass(frozen=True)
class BlobStats:
    label: int
    area: int
    x0: int
    y0: int
    x1: int  # exclusive
    y1: int  # exclusive
    mean_brightness: float
    perimeter: float
    circularity: float


def component_stats(pixels: np.ndarray, labels: np.ndarray, n: int) -> list[BlobStats]:
    """Per-component area, bounds, mean brightness and circularity.

    Perimeter is the 4-neighbour crack length scaled by pi/4, which is unbiased
    for convex shapes averaged over orientation; circularity 4*pi*A/P^2 is
    clipped to [0, 1].
    """
    if n == 0:
        return []
    flat = labels.ravel()
    area = np.bincount(flat, minlength=n + 1)
    bright = np.bincount(flat, weights=pixels.ravel().astype(np.float64), minlength=n + 1)

    fg = labels > 0
    pad = np.pad(fg, 1, constant_values=False)
    exposed = (
        (~pad[:-2, 1:-1]).astype(np.int64)
        + ~pad[2:, 1:-1]
        + ~pad[1:-1, :-2]
        + ~pad[1:-1, 2:]
    )
    crack = np.bincount(flat, weights=np.where(fg, exposed, 0).ravel(), minlength=n + 1)

    ys, xs = np.nonzero(fg)
    lab = labels[ys, xs]
    big = np.iinfo(np.int64).max
    xmin = np.full(n + 1, big, dtype=np.int64)
    ymin = np.full(n + 1, big, dtype=np.int64)
    xmax = np.full(n + 1, -1, dtype=np.int64)
    ymax = np.full(n + 1, -1, dtype=np.int64)
    np.minimum.at(xmin, lab, xs)
    np.minimum.at(ymin, lab, ys)
    np.maximum.at(xmax, lab, xs)
    np.maximum.at(ymax, lab, ys)

    out = []
    for k in range(1, n + 1):
        a = int(area[k])
        perim = float(crack[k]) * math.pi / 4.0
        circ = min(1.0, 4.0 * math.pi * a / (perim * perim)) if perim > 0 else 0.0
        out.append(
            BlobStats(
                label=k,
                area=a,
                x0=int(xmin[k]),
                y0=int(ymin[k]),
                x1=int(xmax[k]) + 1,
                y1=int(ymax[k]) + 1,
                mean_brightness=float(bright[k]) / a,
                perimeter=perim,
                circularity=circ,
            )
        )
    return out


def sort_detections(dets: Sequence[Detection]) -> list[Detection]:
    return sorted(dets, key=lambda d: (-d.confidence, d.bbox.y, d.bbox.x))


def detect_blobs(img: MonoImage, cfg: BlobDetectorConfig | None = None) -> list[Detection]:
    cfg = cfg or BlobDetectorConfig()
    mask = img.pixels >= cfg.brightness_threshold
    labels, n = kernels.label_components(mask)
    dets = []
    for s in component_stats(img.pixels, labels, n):
        if not (cfg.min_area_px <= s.area <= cfg.max_area_px):
            continue
        if s.circularity < cfg.min_circularity:
            continue
        conf = min(1.0, max(0.0, s.mean_brightness / 255.0))
        dets.append(Detection(0, BBox(float(s.x0), float(s.y0), float(s.x1 - s.x0), float(s.y1 - s.y0)), conf))
    return sort_detections(dets)


class OnnxBackend:
    """Runs a serialized ONNX detector through onnxruntime.

    Contract: the model takes a float32 tensor ``(1, 1, S, S)`` of pixel values
    scaled to [0, 1] and returns ``(N, 6)`` rows ``x1, y1, x2, y2, confidence,
    class_id`` in input-pixel coordinates. Frames are resized to ``S`` and boxes
    are scaled back.
    """

    def __init__(self, model_path: str | Path, input_size: int = 768):
        self.model_path = Path(model_path)
        self.input_size = input_size
        if not self.model_path.is_file():
            raise BackendError(f"model file not readable: {self.model_path}")
        try:
            import onnxruntime as ort
        except ImportError as exc:
            raise BackendError("onnxruntime is not installed (pip install 'artifact[onnx]')") from exc
        try:
            self._session = ort.InferenceSession(str(self.model_path), providers=["CPUExecutionProvider"])
        except Exception as exc:  # onnxruntime raises its own exception hierarchy
            raise BackendError(f"cannot load model {self.model_path}: {exc}") from exc
        self._input_name = self._session.get_inputs()[0].name

    def __call__(self, img: MonoImage) -> list[Detection]:
        s = self.input_size
        inp = resize(img, s, s).pixels.astype(np.float32)[None, None] / 255.0
        try:
            rows = np.asarray(self._session.run(None, {self._input_name: inp})[0]).reshape(-1, 6)
        except Exception as exc:
            raise BackendError(f"inference failed: {exc}") from exc
        sx, sy = img.width / s, img.height / s
        out = []
        for x1, y1, x2, y2, conf, cls in rows:
            if x2 <= x1 or y2 <= y1:
                continue
            out.append(
                Detection(
                    int(cls),
                    BBox(float(x1) * sx, float(y1) * sy, float(x2 - x1) * sx, float(y2 - y1) * sy),
                    float(min(1.0, max(0.0, conf))),
                )
            )
        return out


ExternalModel = Union[str, Path, Callable[[MonoImage], Sequence[Detection]]]


@dataclass
class DetectorHandle:
    """Either the baseline blob detector or an external model plus a confidence cut.

    ``model`` for the external kind is an ONNX file path or any callable
    ``MonoImage -> list[Detection]``.
    """

    kind: str = "baseline"
    config: BlobDetectorConfig = field(default_factory=BlobDetectorConfig)
    model: ExternalModel | None = None
    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD
    input_size: int = 768
    _backend: Callable[[MonoImage], Sequence[Detection]] | None = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        if self.kind not in ("baseline", "external"):
            raise DataError(f"detector kind must be 'baseline' or 'external', got {self.kind!r}")
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise DataError(f"confidence_threshold must lie in [0, 1], got {self.confidence_threshold}")
        if self.kind == "external" and self.model is None:
            raise DataError("external detector needs a model")

    @classmethod
    def baseline(cls, config: BlobDetectorConfig | None = None, confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD) -> "DetectorHandle":
        return cls(kind="baseline", config=config or BlobDetectorConfig(), confidence_threshold=confidence_threshold)

    @classmethod
    def external(cls, model: ExternalModel, confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD, input_size: int = 768) -> "DetectorHandle":
        return cls(kind="external", model=model, confidence_threshold=confidence_threshold, input_size=input_size)

    def raw(self, img: MonoImage) -> list[Detection]:
        """Unthresholded detections."""
        if self.kind == "baseline":
            return detect_blobs(img, self.config)
        if self._backend is None:
            if callable(self.model):
                self._backend = self.model
            else:
                self._backend = OnnxBackend(self.model, self.input_size)
        return list(self._backend(img))


def apply_threshold(dets: Sequence[Detection], threshold: float) -> list[Detection]:
    return [d for d in dets if d.confidence >= threshold]


def run_detector(handle: DetectorHandle, img: MonoImage) -> list[Detection]:
    return apply_threshold(handle.raw(img), handle.confidence_threshold)


def detect_frame_tiled(
    handle: DetectorHandle,
    frame: MonoImage,
    tile_size: int = 768,
    overlap: int = 0,
    dedup_iou: float = 0.5,
    tile_input_size: int | None = None,
) -> list[Detection]:
    """Tile the frame, detect per tile and stitch back into frame coordinates.

    With ``tile_input_size`` each tile is resized to that square before
    inference and boxes are scaled back to tile pixels.
    """
    per_tile = []
    for t in tile(frame, tile_size, overlap):
        img = t.image
        if tile_input_size and tile_input_size != tile_size:
            scale = tile_size / tile_input_size
            dets = [
                Detection(d.class_id, BBox(d.bbox.x * scale, d.bbox.y * scale, d.bbox.w * scale, d.bbox.h * scale), d.confidence)
                for d in run_detector(handle, resize(img, tile_input_size, tile_input_size))
            ]
        else:
            dets = run_detector(handle, img)
        per_tile.append((dets, t.offset_x, t.offset_y))
    return sort_detections(stitch_detections(per_tile, dedup_iou))
