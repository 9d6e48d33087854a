"""Grid tiling of large frames and re-assembly of per-tile detections."""
from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from ..boxes import nms
from ..types import Annotation, BBox, DataError, Detection, MonoImage


class Tile(NamedTuple):
    image: MonoImage
    offset_x: int
    offset_y: int


def grid_offsets(length: int, tile_size: int, overlap: int) -> list[int]:
    """Tile origins along one axis with stride ``tile_size - overlap``."""
    if tile_size <= overlap or overlap < 0:
        raise DataError(f"tile_size ({tile_size}) must exceed overlap ({overlap}) >= 0")
    stride = tile_size - overlap
    if length <= tile_size:
        return [0]
    n = math.ceil((length - tile_size) / stride) + 1
    return [i * stride for i in range(n)]


def tile(img: MonoImage, tile_size: int, overlap: int = 0) -> list[Tile]:
    """Cut ``img`` into ``tile_size`` squares in row-major order; edge tiles are zero-padded."""
    xs = grid_offsets(img.width, tile_size, overlap)
    ys = grid_offsets(img.height, tile_size, overlap)
    tiles = []
    for oy in ys:
        for ox in xs:
            buf = np.zeros((tile_size, tile_size), dtype=np.uint8)
            src = img.pixels[oy:oy + tile_size, ox:ox + tile_size]
            buf[: src.shape[0], : src.shape[1]] = src
            tiles.append(Tile(MonoImage(buf), ox, oy))
    return tiles


def tile_rect(t: Tile, frame_w: int | None = None, frame_h: int | None = None) -> BBox:
    """Frame-space rectangle of a tile, optionally restricted to the unpadded part."""
    w = t.image.width if frame_w is None else min(t.image.width, frame_w - t.offset_x)
    h = t.image.height if frame_h is None else min(t.image.height, frame_h - t.offset_y)
    return BBox(float(t.offset_x), float(t.offset_y), float(w), float(h))


def clip_annotations_to_tile(
    anns: Sequence[Annotation], rect: BBox, min_visible_fraction: float = 0.25
) -> list[Annotation]:
    """Intersect boxes with ``rect`` and express them in tile coordinates.

    Boxes keeping less than ``min_visible_fraction`` of their area are dropped.
    """
    if not 0.0 < min_visible_fraction <= 1.0:
        raise DataError(f"min_visible_fraction must lie in (0, 1], got {min_visible_fraction}")
    out = []
    for a in anns:
        inter = a.bbox.intersect(rect)
        if inter is None or inter.area < min_visible_fraction * a.bbox.area:
            continue
        if inter == a.bbox:
            local = a.bbox.translate(-rect.x, -rect.y)
        else:
            local = inter.translate(-rect.x, -rect.y)
        out.append(Annotation(a.class_id, local))
    return out


def stitch_detections(
    per_tile: Sequence[tuple[Sequence[Detection], float, float]], dedup_iou: float = 0.5
) -> list[Detection]:
    """Shift tile-local detections into frame space and merge duplicates by NMS."""
    if not 0.0 <= dedup_iou <= 1.0:
        raise DataError(f"dedup_iou must lie in [0, 1], got {dedup_iou}")
    merged = [
        Detection(d.class_id, d.bbox.translate(ox, oy), d.confidence)
        for dets, ox, oy in per_tile
        for d in dets
    ]
    if len(per_tile) <= 1:
        return merged
    return nms(merged, dedup_iou)
