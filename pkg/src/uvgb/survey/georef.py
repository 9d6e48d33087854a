"""Nadir-camera georeferencing on a flat field.

Ground positions are east/north offsets in metres on an equirectangular
tangent plane about a survey origin. Image axes: x right, y down; with yaw 0
the top of the frame faces north. Yaw is clockwise from north.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from ..optics import CameraModel, compute_gsd
from ..types import DataError

EARTH_RADIUS_M = 6378137.0


@dataclass(frozen=True)
class FramePose:
    frame_id: str
    lat: float
    lon: float
    altitude_agl_m: float
    yaw_rad: float = 0.0

    def __post_init__(self) -> None:
        if abs(self.lat) > 90 or abs(self.lon) > 180:
            raise DataError(f"pose {self.frame_id}: lat/lon out of range ({self.lat}, {self.lon})")
        if not self.altitude_agl_m > 0:
            raise DataError(f"pose {self.frame_id}: altitude must be positive, got {self.altitude_agl_m}")


@dataclass(frozen=True)
class GeoPoint:
    east_m: float
    north_m: float
    frame_id: str = ""
    confidence: float = 1.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.east_m) and math.isfinite(self.north_m)):
            raise DataError("GeoPoint coordinates must be finite")


@dataclass(frozen=True)
class TangentPlane:
    lat0: float
    lon0: float

    def to_local(self, lat: float, lon: float) -> tuple[float, float]:
        east = EARTH_RADIUS_M * math.cos(math.radians(self.lat0)) * math.radians(lon - self.lon0)
        north = EARTH_RADIUS_M * math.radians(lat - self.lat0)
        return east, north

    def to_geo(self, east: float, north: float) -> tuple[float, float]:
        lat = self.lat0 + math.degrees(north / EARTH_RADIUS_M)
        lon = self.lon0 + math.degrees(east / (EARTH_RADIUS_M * math.cos(math.radians(self.lat0))))
        return lat, lon

    @classmethod
    def at(cls, pose: FramePose) -> "TangentPlane":
        return cls(pose.lat, pose.lon)


def _frame_size(cam: CameraModel, image_size: tuple[int, int] | None) -> tuple[int, int]:
    return image_size if image_size is not None else (cam.sensor_width_px, cam.sensor_height_px)


def pixel_to_ground(
    pose: FramePose,
    cam: CameraModel,
    px: tuple[float, float],
    plane: TangentPlane | None = None,
    image_size: tuple[int, int] | None = None,
    confidence: float = 1.0,
) -> GeoPoint:
    """Project continuous pixel coordinates to the ground plane.

    ``image_size`` (width, height) defaults to the camera's sensor size; the
    image centre is at (width/2, height/2).
    """
    plane = plane or TangentPlane.at(pose)
    w, h = _frame_size(cam, image_size)
    gsd_m = compute_gsd(cam, pose.altitude_agl_m) / 100.0
    right = (px[0] - w / 2.0) * gsd_m
    up = -(px[1] - h / 2.0) * gsd_m
    s, c = math.sin(pose.yaw_rad), math.cos(pose.yaw_rad)
    e0, n0 = plane.to_local(pose.lat, pose.lon)
    east = e0 + right * c + up * s
    north = n0 - right * s + up * c
    return GeoPoint(east, north, pose.frame_id, confidence)


def ground_to_pixel(
    pose: FramePose,
    cam: CameraModel,
    east: float,
    north: float,
    plane: TangentPlane | None = None,
    image_size: tuple[int, int] | None = None,
) -> tuple[float, float]:
    """Inverse of :func:`pixel_to_ground`."""
    plane = plane or TangentPlane.at(pose)
    w, h = _frame_size(cam, image_size)
    gsd_m = compute_gsd(cam, pose.altitude_agl_m) / 100.0
    e0, n0 = plane.to_local(pose.lat, pose.lon)
    de, dn = east - e0, north - n0
    s, c = math.sin(pose.yaw_rad), math.cos(pose.yaw_rad)
    right = de * c - dn * s
    up = de * s + dn * c
    return w / 2.0 + right / gsd_m, h / 2.0 - up / gsd_m


POSE_FIELDS = ("frame_id", "lat", "lon", "altitude_m", "yaw_deg")


def read_poses_csv(path: str | Path) -> list[FramePose]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != POSE_FIELDS:
            raise DataError(f"{path}: row 1: expected header {','.join(POSE_FIELDS)}")
        out = []
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise DataError(f"{path}: row {rowno}: expected 5 fields, got {len(row)}")
            try:
                out.append(
                    FramePose(row[0].strip(), float(row[1]), float(row[2]), float(row[3]), math.radians(float(row[4])))
                )
            except ValueError as exc:
                raise DataError(f"{path}: row {rowno}: {exc}") from exc
    return out


def write_poses_csv(path: str | Path, poses: Sequence[FramePose]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(POSE_FIELDS)
        for p in poses:
            w.writerow([p.frame_id, f"{p.lat:.10f}", f"{p.lon:.10f}", repr(p.altitude_agl_m), repr(math.degrees(p.yaw_rad))])
    return path


def write_points_csv(path: str | Path, points: Sequence[GeoPoint]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("east_m", "north_m", "confidence", "frame_id"))
        for p in points:
            w.writerow([f"{p.east_m:.4f}", f"{p.north_m:.4f}", f"{p.confidence:.6f}", p.frame_id])
    return path
