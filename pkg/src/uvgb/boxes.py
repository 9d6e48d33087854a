"""Box overlap measures and non-maximum suppression."""
from __future__ import annotations

from typing import Sequence

from .types import BBox, DataError, Detection


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two positive-area boxes."""
    if a.w <= 0 or a.h <= 0 or b.w <= 0 or b.h <= 0:
        raise DataError("iou needs positive-area boxes")
    iw = min(a.x2, b.x2) - max(a.x, b.x)
    ih = min(a.y2, b.y2) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return min(1.0, inter / union)


def detection_order(dets: Sequence[Detection]) -> list[int]:
    """Indices sorted by confidence (desc), ties by (y, x) of the box, then input index."""
    return sorted(
        range(len(dets)),
        key=lambda i: (-dets[i].confidence, dets[i].bbox.y, dets[i].bbox.x, i),
    )


def nms(dets: Sequence[Detection], iou_threshold: float, class_aware: bool = True) -> list[Detection]:
    """Greedy NMS: keep the highest-confidence box, drop others with IoU >= threshold."""
    kept: list[Detection] = []
    for i in detection_order(dets):
        d = dets[i]
        if any(
            (not class_aware or k.class_id == d.class_id) and iou(k.bbox, d.bbox) >= iou_threshold
            for k in kept
        ):
            continue
        kept.append(d)
    return kept
