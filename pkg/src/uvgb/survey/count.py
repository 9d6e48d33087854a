"""Per-frame detection, georeferencing, global dedup and per-row flower counts."""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from ..detect import DetectorHandle, detect_frame_tiled
from ..optics import CameraModel
from ..types import DataError, Detection, MonoImage
from .dedup import dedup_points
from .georef import FramePose, GeoPoint, TangentPlane, pixel_to_ground, write_points_csv

OFF_ROW = "off-row"


@dataclass
class SurveyReport:
    total: int
    per_row: dict[str, int]
    points: list[GeoPoint]
    frames_processed: int
    raw_detections: int
    row_of_point: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "per_row": self.per_row,
            "frames_processed": self.frames_processed,
            "raw_detections": self.raw_detections,
        }


def assign_rows(points: Sequence[GeoPoint], row_axes_east: Sequence[float], row_spacing_m: float) -> list[str]:
    """Nearest row axis within half the row spacing, else the off-row bucket."""
    out = []
    for p in points:
        best, best_d = OFF_ROW, row_spacing_m / 2.0
        for i, axis in enumerate(row_axes_east):
            d = abs(p.east_m - axis)
            if d <= best_d:
                best, best_d = f"row{i + 1}", d
        out.append(best)
    return out


def survey_count(
    frames: Sequence[MonoImage],
    poses: Sequence[FramePose],
    handle: DetectorHandle,
    cam: CameraModel,
    dedup_radius_m: float = 0.1,
    row_axes_east: Sequence[float] = (),
    row_spacing_m: float = 1.0,
    plane: TangentPlane | None = None,
    tile_size: int = 768,
    tile_overlap: int = 0,
    dedup_iou: float = 0.5,
    jobs: int = 1,
) -> SurveyReport:
    if len(frames) != len(poses):
        raise DataError(f"{len(frames)} frames but {len(poses)} poses")
    if not frames:
        raise DataError("no frames to survey")
    plane = plane or TangentPlane.at(poses[0])

    def work(k: int) -> list[Detection]:
        return detect_frame_tiled(handle, frames[k], tile_size, tile_overlap, dedup_iou)

    if jobs > 1 and handle.kind == "baseline":
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            per_frame = list(pool.map(work, range(len(frames))))
    else:
        per_frame = [work(k) for k in range(len(frames))]

    points = []
    for img, pose, dets in zip(frames, poses, per_frame):
        for d in dets:
            points.append(pixel_to_ground(pose, cam, d.bbox.center, plane, (img.width, img.height), d.confidence))
    unique = dedup_points(points, dedup_radius_m)
    rows = assign_rows(unique, row_axes_east, row_spacing_m)
    per_row = {f"row{i + 1}": 0 for i in range(len(row_axes_east))}
    per_row[OFF_ROW] = 0
    for r in rows:
        per_row[r] += 1
    return SurveyReport(
        total=len(unique),
        per_row=per_row,
        points=unique,
        frames_processed=len(frames),
        raw_detections=len(points),
        row_of_point=rows,
    )


def write_survey_report(report: SurveyReport, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = out_dir / "survey_summary.json"
    summary.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    counts = out_dir / "survey_counts.csv"
    lines = ["row,count"] + [f"{k},{v}" for k, v in report.per_row.items()] + [f"total,{report.total}"]
    counts.write_text("\n".join(lines) + "\n")
    points = write_points_csv(out_dir / "flowers.csv", report.points)
    return [summary, counts, points]
