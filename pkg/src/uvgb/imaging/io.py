"""Grayscale raster I/O (PNG, binary PGM) and normalised box text files."""
from __future__ import annotations

from pathlib import Path
from typing import Iterable

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..types import Annotation, BBox, DataError, Detection, MonoImage

SUPPORTED_SUFFIXES = {".png": "PNG", ".pgm": "PPM"}


def load_image(path: str | Path) -> MonoImage:
    """Read an 8-bit single-channel PNG or PGM.

    Multi-channel and 16-bit files are rejected rather than converted.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"missing file: {path}")
    try:
        with Image.open(path) as im:
            mode = im.mode
            if mode in ("RGB", "RGBA", "LA", "P", "CMYK", "YCbCr", "PA"):
                raise DataError(f"multi-channel input ({mode}) in {path}")
            if mode == "1":
                raise DataError(f"unsupported format: 1-bit image in {path}")
            if mode != "L":
                raise DataError(f"unsupported format: mode {mode} in {path} (need 8-bit grayscale)")
            arr = np.array(im, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise DataError(f"unsupported format: {path}") from exc
    return MonoImage(arr)


def save_image(img: MonoImage, path: str | Path) -> Path:
    path = Path(path)
    fmt = SUPPORTED_SUFFIXES.get(path.suffix.lower())
    if fmt is None:
        raise DataError(f"unsupported output format {path.suffix!r}; use .png or .pgm")
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(img.pixels, mode="L").save(path, format=fmt)
    return path


def _fmt(v: float) -> str:
    return f"{v:.6f}"


def _to_normalized(b: BBox, width: int, height: int) -> tuple[float, float, float, float]:
    cx, cy = b.center
    return cx / width, cy / height, b.w / width, b.h / height


def _from_normalized(cx: float, cy: float, w: float, h: float, width: int, height: int) -> BBox:
    pw, ph = w * width, h * height
    return BBox(cx * width - pw / 2.0, cy * height - ph / 2.0, pw, ph)


def _parse_lines(path: Path, ncols: int) -> Iterable[tuple[int, list[str]]]:
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != ncols:
            raise DataError(f"{path}:{lineno}: expected {ncols} fields, got {len(parts)}")
        yield lineno, parts


def read_annotations(path: str | Path, width: int, height: int) -> list[Annotation]:
    """Parse ``class_id cx cy w h`` lines (normalised) into pixel-space annotations."""
    path = Path(path)
    if not path.exists():
        return []
    out = []
    for lineno, parts in _parse_lines(path, 5):
        try:
            cls = int(parts[0])
            cx, cy, w, h = (float(p) for p in parts[1:])
            out.append(Annotation(cls, _from_normalized(cx, cy, w, h, width, height)))
        except (ValueError, DataError) as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
    return out


def write_annotations(path: str | Path, anns: Iterable[Annotation], width: int, height: int) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for a in anns:
        vals = _to_normalized(a.bbox, width, height)
        lines.append(" ".join([str(a.class_id), *(_fmt(v) for v in vals)]))
    path.write_text("".join(line + "\n" for line in lines))
    return path


def read_detections(path: str | Path, width: int, height: int) -> list[Detection]:
    """Parse ``class_id cx cy w h confidence`` lines (normalised)."""
    path = Path(path)
    if not path.exists():
        return []
    out = []
    for lineno, parts in _parse_lines(path, 6):
        try:
            cls = int(parts[0])
            cx, cy, w, h, conf = (float(p) for p in parts[1:])
            out.append(Detection(cls, _from_normalized(cx, cy, w, h, width, height), conf))
        except (ValueError, DataError) as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
    return out


def write_detections(path: str | Path, dets: Iterable[Detection], width: int, height: int) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for d in dets:
        vals = _to_normalized(d.bbox, width, height)
        lines.append(" ".join([str(d.class_id), *(_fmt(v) for v in vals), _fmt(d.confidence)]))
    path.write_text("".join(line + "\n" for line in lines))
    return path
