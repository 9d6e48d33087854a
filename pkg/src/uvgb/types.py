"""Shared domain types: images, boxes, labels and scored detections."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SPLIT_TAGS = ("train", "val", "test", "unsplit")


class DataError(ValueError):
    """Input data violates a documented precondition."""


@dataclass(frozen=True, eq=False)
class MonoImage:
    """Single-channel 8-bit frame stored as a ``(height, width)`` uint8 array."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.pixels)
        if arr.ndim != 2:
            raise DataError(f"MonoImage needs a 2-D array, got shape {arr.shape}")
        if arr.shape[0] <= 0 or arr.shape[1] <= 0:
            raise DataError("MonoImage dimensions must be positive")
        if arr.dtype != np.uint8:
            if np.issubdtype(arr.dtype, np.integer) and (arr.min() < 0 or arr.max() > 255):
                raise DataError("pixel values must lie in [0, 255]")
            if not np.issubdtype(arr.dtype, np.integer):
                raise DataError(f"pixel dtype must be integral, got {arr.dtype}")
            arr = arr.astype(np.uint8)
        object.__setattr__(self, "pixels", np.ascontiguousarray(arr))

    @classmethod
    def from_bytes(cls, width: int, height: int, data: Sequence[int] | bytes) -> "MonoImage":
        buf = np.asarray(bytearray(data) if isinstance(data, (bytes, bytearray)) else list(data))
        if buf.size != width * height:
            raise DataError(f"buffer holds {buf.size} values, expected {width * height}")
        if buf.size and (buf.min() < 0 or buf.max() > 255):
            raise DataError("pixel values must lie in [0, 255]")
        return cls(buf.astype(np.uint8).reshape(height, width))

    @classmethod
    def blank(cls, width: int, height: int, value: int = 0) -> "MonoImage":
        return cls(np.full((height, width), value, dtype=np.uint8))

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    def tobytes(self) -> bytes:
        return self.pixels.tobytes()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MonoImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    def __repr__(self) -> str:
        return f"MonoImage({self.width}x{self.height})"


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in pixel space; (x, y) is the top-left corner."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if not (self.w > 0 and self.h > 0):
            raise DataError(f"box needs positive size, got w={self.w} h={self.h}")

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    @classmethod
    def from_corners(cls, x1: float, y1: float, x2: float, y2: float) -> "BBox":
        return cls(x1, y1, x2 - x1, y2 - y1)

    def translate(self, dx: float, dy: float) -> "BBox":
        return BBox(self.x + dx, self.y + dy, self.w, self.h)

    def intersect(self, other: "BBox") -> "BBox | None":
        x1 = max(self.x, other.x)
        y1 = max(self.y, other.y)
        x2 = min(self.x2, other.x2)
        y2 = min(self.y2, other.y2)
        if x2 <= x1 or y2 <= y1:
            return None
        return BBox(x1, y1, x2 - x1, y2 - y1)


@dataclass(frozen=True)
class Annotation:
    class_id: int
    bbox: BBox

    def __post_init__(self) -> None:
        if self.class_id < 0:
            raise DataError(f"class_id must be >= 0, got {self.class_id}")


@dataclass(frozen=True)
class Detection:
    class_id: int
    bbox: BBox
    confidence: float

    def __post_init__(self) -> None:
        if self.class_id < 0:
            raise DataError(f"class_id must be >= 0, got {self.class_id}")
        if not (0.0 <= self.confidence <= 1.0):
            raise DataError(f"confidence must lie in [0, 1], got {self.confidence}")


@dataclass
class ManifestEntry:
    image: str
    annotations: list[Annotation] = field(default_factory=list)
    split: str = "unsplit"
    label_path: str | None = None
    width: int | None = None
    height: int | None = None


@dataclass
class DatasetManifest:
    """A labelled image set with class names and per-entry split tags."""

    entries: list[ManifestEntry]
    class_names: list[str]

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        seen: set[str] = set()
        for entry in self.entries:
            if entry.image in seen:
                raise DataError(f"duplicate image path in manifest: {entry.image}")
            seen.add(entry.image)
            if entry.split not in SPLIT_TAGS:
                raise DataError(f"unknown split tag {entry.split!r} for {entry.image}")
            for ann in entry.annotations:
                if ann.class_id >= len(self.class_names):
                    raise DataError(
                        f"class_id {ann.class_id} in {entry.image} outside class list of "
                        f"{len(self.class_names)}"
                    )

    def by_split(self, tag: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == tag]
