"""Synthetic strawberry-field survey with exact ground truth.

Plants sit on parallel rows running north; each carries a few flowers and,
optionally, a ripening fruit. Both are rendered as equally bright discs on a
dark textured background, which is how they look through a UV-G-B filter.
Frames follow a lawnmower path at a fixed altitude with the requested
forward/side overlap.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..optics import BUILTIN_PROFILES, CameraModel, compute_gsd, ground_footprint
from ..types import Annotation, BBox, DataError, MonoImage
from .georef import FramePose, GeoPoint, TangentPlane, ground_to_pixel

BLOB_VALUE = 255
SUPERSAMPLE = 4
DEFAULT_ORIGIN = (46.1700, -71.8800)


@dataclass(frozen=True)
class FieldSpec:
    rows: int = 3
    plants_per_row: int = 12
    row_spacing_m: float = 1.0
    plant_spacing_m: float = 0.5
    flowers_per_plant_mean: float = 3.0
    flowers_per_plant_spread: float = 0.0
    confuser_probability: float = 0.0
    flower_radius_px: tuple[float, float] = (3.0, 4.5)
    plant_radius_m: float = 0.18
    min_separation_m: float = 0.15
    background_level: int = 45
    background_contrast: int = 20
    background_seed: int = 0
    origin: tuple[float, float] = DEFAULT_ORIGIN

    def __post_init__(self) -> None:
        if self.rows <= 0 or self.plants_per_row <= 0:
            raise DataError("rows and plants_per_row must be positive")
        if self.row_spacing_m <= 0 or self.plant_spacing_m <= 0:
            raise DataError("row and plant spacing must be positive")
        if self.flowers_per_plant_mean < 0 or self.flowers_per_plant_spread < 0:
            raise DataError("flower counts must be non-negative")
        if not 0.0 <= self.confuser_probability <= 1.0:
            raise DataError("confuser_probability must lie in [0, 1]")
        lo, hi = self.flower_radius_px
        if not 0 < lo <= hi:
            raise DataError("flower_radius_px must be a positive (min, max) range")

    @property
    def row_axes_east(self) -> list[float]:
        return [i * self.row_spacing_m for i in range(self.rows)]


@dataclass(frozen=True)
class FlightSpec:
    altitude_m: float = 3.0
    overlap: float = 0.3
    camera: CameraModel = field(default_factory=lambda: BUILTIN_PROFILES["xnite"])
    margin_m: float = 0.3

    def __post_init__(self) -> None:
        if not self.altitude_m > 0:
            raise DataError("altitude must be positive")
        if not 0.0 <= self.overlap < 1.0:
            raise DataError("overlap must lie in [0, 1)")


@dataclass(frozen=True)
class FieldObject:
    east_m: float
    north_m: float
    radius_m: float
    kind: str  # "flower" | "fruit"
    plant: tuple[int, int]


@dataclass
class SimulatedSurvey:
    field: FieldSpec
    flight: FlightSpec
    frames: list[MonoImage]
    poses: list[FramePose]
    annotations: list[list[Annotation]]
    objects: list[FieldObject]
    plane: TangentPlane

    @property
    def flowers(self) -> list[GeoPoint]:
        return [GeoPoint(o.east_m, o.north_m) for o in self.objects if o.kind == "flower"]

    @property
    def confusers(self) -> list[GeoPoint]:
        return [GeoPoint(o.east_m, o.north_m) for o in self.objects if o.kind == "fruit"]


def _place(rng: np.random.Generator, cx: float, cy: float, radius: float, existing: list[FieldObject], min_sep: float) -> tuple[float, float]:
    best, best_d = (cx, cy), -1.0
    for _ in range(200):
        r = radius * math.sqrt(rng.random())
        t = 2.0 * math.pi * rng.random()
        x, y = cx + r * math.cos(t), cy + r * math.sin(t)
        d = min((math.hypot(x - o.east_m, y - o.north_m) for o in existing), default=math.inf)
        if d >= min_sep:
            return x, y
        if d > best_d:
            best, best_d = (x, y), d
    return best


def layout_field(spec: FieldSpec, gsd_m: float, seed: int) -> list[FieldObject]:
    """Flower and fruit positions; ``gsd_m`` converts the pixel radius range to metres."""
    rng = np.random.default_rng([seed, 1])
    lo, hi = spec.flower_radius_px
    objects: list[FieldObject] = []
    for i in range(spec.rows):
        for j in range(spec.plants_per_row):
            px, py = i * spec.row_spacing_m, j * spec.plant_spacing_m
            if spec.flowers_per_plant_spread > 0:
                n = max(0, int(round(rng.normal(spec.flowers_per_plant_mean, spec.flowers_per_plant_spread))))
            else:
                n = int(round(spec.flowers_per_plant_mean))
            near = [o for o in objects if abs(o.east_m - px) < 1.0 and abs(o.north_m - py) < 1.0]
            for _ in range(n):
                x, y = _place(rng, px, py, spec.plant_radius_m, near, spec.min_separation_m)
                obj = FieldObject(x, y, rng.uniform(lo, hi) * gsd_m, "flower", (i, j))
                objects.append(obj)
                near.append(obj)
            if rng.random() < spec.confuser_probability:
                x, y = _place(rng, px, py, spec.plant_radius_m, near, spec.min_separation_m)
                obj = FieldObject(x, y, rng.uniform(lo, hi) * gsd_m, "fruit", (i, j))
                objects.append(obj)
                near.append(obj)
    return objects


def _axis_centres(lo: float, hi: float, footprint: float, overlap: float) -> list[float]:
    extent = hi - lo
    if extent <= footprint:
        return [(lo + hi) / 2.0]
    step = footprint * (1.0 - overlap)
    n = math.ceil((extent - footprint) / step - 1e-9) + 1
    span = (n - 1) * step + footprint
    start = lo - (span - extent) / 2.0 + footprint / 2.0
    return [start + k * step for k in range(n)]


def lawnmower_poses(spec: FieldSpec, flight: FlightSpec, plane: TangentPlane) -> list[FramePose]:
    """Legs run north/south along the rows; alternate legs fly back with yaw pi."""
    fw, fh = ground_footprint(flight.camera, flight.altitude_m)
    m = flight.margin_m + spec.plant_radius_m
    east_lo, east_hi = -m, (spec.rows - 1) * spec.row_spacing_m + m
    north_lo, north_hi = -m, (spec.plants_per_row - 1) * spec.plant_spacing_m + m
    easts = _axis_centres(east_lo, east_hi, fw, flight.overlap)
    norths = _axis_centres(north_lo, north_hi, fh, flight.overlap)
    poses = []
    for leg, e in enumerate(easts):
        seq = norths if leg % 2 == 0 else norths[::-1]
        yaw = 0.0 if leg % 2 == 0 else math.pi
        for n in seq:
            lat, lon = plane.to_geo(e, n)
            poses.append(FramePose(f"f{len(poses):04d}", lat, lon, flight.altitude_m, yaw))
    return poses


def _background(width: int, height: int, spec: FieldSpec, seed: int, index: int) -> np.ndarray:
    rng = np.random.default_rng([seed, spec.background_seed, 2, index])
    coarse = rng.integers(0, 256, size=(max(2, height // 24), max(2, width // 24)), dtype=np.uint8)
    inv = np.array([[coarse.shape[1] / width, 0.0, 0.0], [0.0, coarse.shape[0] / height, 0.0]])
    smooth = kernels.warp_bilinear(coarse, inv, height, width, kernels.BORDER_CLAMP).astype(np.float64)
    fine = rng.normal(0.0, 3.0, size=(height, width))
    bg = spec.background_level + (smooth / 255.0 - 0.5) * 2.0 * spec.background_contrast + fine
    return np.clip(np.floor(bg + 0.5), 0, 120)


def _disc_coverage(cx: float, cy: float, r: float, x0: int, y0: int, x1: int, y1: int) -> np.ndarray:
    s = SUPERSAMPLE
    xs = x0 + (np.arange((x1 - x0) * s) + 0.5) / s
    ys = y0 + (np.arange((y1 - y0) * s) + 0.5) / s
    inside = ((xs[None, :] - cx) ** 2 + (ys[:, None] - cy) ** 2) <= r * r
    return inside.reshape(y1 - y0, s, x1 - x0, s).mean(axis=(1, 3))


def render_frame(
    pose: FramePose,
    cam: CameraModel,
    objects: list[FieldObject],
    spec: FieldSpec,
    plane: TangentPlane,
    seed: int,
    index: int,
) -> tuple[MonoImage, list[Annotation]]:
    w, h = cam.sensor_width_px, cam.sensor_height_px
    gsd_m = compute_gsd(cam, pose.altitude_agl_m) / 100.0
    img = _background(w, h, spec, seed, index)
    anns = []
    for o in objects:
        u, v = ground_to_pixel(pose, cam, o.east_m, o.north_m, plane)
        r = o.radius_m / gsd_m
        x0, y0 = max(0, math.floor(u - r - 1)), max(0, math.floor(v - r - 1))
        x1, y1 = min(w, math.ceil(u + r + 1)), min(h, math.ceil(v + r + 1))
        if x1 <= x0 or y1 <= y0:
            continue
        cov = _disc_coverage(u, v, r, x0, y0, x1, y1)
        patch = img[y0:y1, x0:x1]
        img[y0:y1, x0:x1] = np.floor(patch * (1.0 - cov) + BLOB_VALUE * cov + 0.5)
        if o.kind == "flower" and 0 <= u < w and 0 <= v < h:
            box = BBox.from_corners(max(0.0, u - r), max(0.0, v - r), min(float(w), u + r), min(float(h), v + r))
            anns.append(Annotation(0, box))
    return MonoImage(img.astype(np.uint8)), anns


def simulate_survey(field_spec: FieldSpec, flight: FlightSpec, seed: int = 0, jobs: int = 1) -> SimulatedSurvey:
    """Render a full survey; identical inputs give byte-identical frames."""
    plane = TangentPlane(*field_spec.origin)
    gsd_m = compute_gsd(flight.camera, flight.altitude_m) / 100.0
    objects = layout_field(field_spec, gsd_m, seed)
    poses = lawnmower_poses(field_spec, flight, plane)

    def work(k: int) -> tuple[MonoImage, list[Annotation]]:
        return render_frame(poses[k], flight.camera, objects, field_spec, plane, seed, k)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rendered = list(pool.map(work, range(len(poses))))
    else:
        rendered = [work(k) for k in range(len(poses))]
    return SimulatedSurvey(
        field=field_spec,
        flight=flight,
        frames=[r[0] for r in rendered],
        poses=poses,
        annotations=[r[1] for r in rendered],
        objects=objects,
        plane=plane,
    )
