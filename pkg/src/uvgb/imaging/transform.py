"""Resizing and box-aware augmentation of monochrome frames."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..types import Annotation, BBox, DataError, MonoImage

_MIN_BOX_SIDE = 1e-6


def resize(img: MonoImage, out_w: int, out_h: int) -> MonoImage:
    """Bilinear resize with pixel-centre alignment and edge clamping."""
    if out_w <= 0 or out_h <= 0:
        raise DataError(f"zero target dimension: {out_w}x{out_h}")
    if (out_w, out_h) == (img.width, img.height):
        return MonoImage(img.pixels.copy())
    inv = np.array(
        [[img.width / out_w, 0.0, 0.0], [0.0, img.height / out_h, 0.0]], dtype=np.float64
    )
    return MonoImage(kernels.warp_bilinear(img.pixels, inv, out_h, out_w, kernels.BORDER_CLAMP))


@dataclass(frozen=True)
class AugmentSpec:
    """One concrete augmentation. Angles are in degrees; ``seed`` drives the noise."""

    flip_h: bool = False
    flip_v: bool = False
    rot90_steps: int = 0
    rot_small_deg: float = 0.0
    shear_h_deg: float = 0.0
    shear_v_deg: float = 0.0
    noise_fraction: float = 0.05
    blur_radius_px: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.rot90_steps not in (0, 1, 2, 3):
            raise DataError(f"rot90_steps must be 0..3, got {self.rot90_steps}")
        for name in ("rot_small_deg", "shear_h_deg", "shear_v_deg"):
            v = getattr(self, name)
            if not -15.0 <= v <= 15.0:
                raise DataError(f"{name} must lie in [-15, 15], got {v}")
        if not 0.0 <= self.noise_fraction <= 1.0:
            raise DataError(f"noise_fraction must lie in [0, 1], got {self.noise_fraction}")
        if self.blur_radius_px < 0:
            raise DataError(f"blur_radius_px must be >= 0, got {self.blur_radius_px}")
        if self.seed < 0:
            raise DataError("seed must be unsigned")

    @classmethod
    def neutral(cls) -> "AugmentSpec":
        return cls(noise_fraction=0.0, blur_radius_px=0)

    @classmethod
    def random(
        cls, seed: int, max_angle_deg: float = 15.0, max_noise: float = 0.05, max_blur_px: int = 5
    ) -> "AugmentSpec":
        """Draw a spec inside the training-set ranges (flip, ±90, ±15 deg, noise, blur)."""
        rng = np.random.default_rng(seed)
        return cls(
            flip_h=bool(rng.integers(0, 2)),
            flip_v=bool(rng.integers(0, 2)),
            rot90_steps=int(rng.integers(0, 4)),
            rot_small_deg=float(rng.uniform(-max_angle_deg, max_angle_deg)),
            shear_h_deg=float(rng.uniform(-max_angle_deg, max_angle_deg)),
            shear_v_deg=float(rng.uniform(-max_angle_deg, max_angle_deg)),
            noise_fraction=float(rng.uniform(0.0, max_noise)),
            blur_radius_px=int(rng.integers(0, max_blur_px + 1)),
            seed=int(rng.integers(0, 2**32)),
        )


def _box_corners(b: BBox) -> np.ndarray:
    return np.array([[b.x, b.y], [b.x2, b.y], [b.x, b.y2], [b.x2, b.y2]], dtype=np.float64)


def _hull_clip(corners: np.ndarray, width: int, height: int) -> BBox | None:
    x1 = max(0.0, float(corners[:, 0].min()))
    y1 = max(0.0, float(corners[:, 1].min()))
    x2 = min(float(width), float(corners[:, 0].max()))
    y2 = min(float(height), float(corners[:, 1].max()))
    if x2 - x1 <= _MIN_BOX_SIDE or y2 - y1 <= _MIN_BOX_SIDE:
        return None
    return BBox(x1, y1, x2 - x1, y2 - y1)


def flip_horizontal(img: MonoImage, anns: list[Annotation]) -> tuple[MonoImage, list[Annotation]]:
    w = img.width
    out = [Annotation(a.class_id, BBox(w - a.bbox.x - a.bbox.w, a.bbox.y, a.bbox.w, a.bbox.h)) for a in anns]
    return MonoImage(img.pixels[:, ::-1].copy()), out


def flip_vertical(img: MonoImage, anns: list[Annotation]) -> tuple[MonoImage, list[Annotation]]:
    h = img.height
    out = [Annotation(a.class_id, BBox(a.bbox.x, h - a.bbox.y - a.bbox.h, a.bbox.w, a.bbox.h)) for a in anns]
    return MonoImage(img.pixels[::-1, :].copy()), out


def rotate90(img: MonoImage, anns: list[Annotation], steps: int = 1) -> tuple[MonoImage, list[Annotation]]:
    """Rotate clockwise by ``steps`` quarter turns; pixel (x, y) lands on (H-1-y, x)."""
    for _ in range(steps % 4):
        h = img.height
        anns = [
            Annotation(a.class_id, BBox(h - a.bbox.y - a.bbox.h, a.bbox.x, a.bbox.h, a.bbox.w))
            for a in anns
        ]
        img = MonoImage(np.ascontiguousarray(np.rot90(img.pixels, k=-1)))
    return img, list(anns)


def affine_about_center(rot_deg: float, shear_h_deg: float, shear_v_deg: float) -> np.ndarray:
    """Linear part of rotation followed by shear; positive rotation is counter-clockwise on screen."""
    t = math.radians(rot_deg)
    rot = np.array([[math.cos(t), math.sin(t)], [-math.sin(t), math.cos(t)]])
    shear = np.array([[1.0, math.tan(math.radians(shear_h_deg))], [math.tan(math.radians(shear_v_deg)), 1.0]])
    return shear @ rot


def warp_affine(
    img: MonoImage, anns: list[Annotation], linear: np.ndarray
) -> tuple[MonoImage, list[Annotation]]:
    """Apply ``linear`` about the image centre; zero fill, hull-and-clip boxes."""
    w, h = img.width, img.height
    c = np.array([w / 2.0, h / 2.0])
    inv_lin = np.linalg.inv(linear)
    inv = np.hstack([inv_lin, (c - inv_lin @ c)[:, None]])
    pixels = kernels.warp_bilinear(img.pixels, inv, h, w, kernels.BORDER_ZERO)
    out = []
    for a in anns:
        corners = (_box_corners(a.bbox) - c) @ linear.T + c
        b = _hull_clip(corners, w, h)
        if b is not None:
            out.append(Annotation(a.class_id, b))
    return MonoImage(pixels), out


def salt_and_pepper(img: MonoImage, fraction: float, seed: int) -> MonoImage:
    """Set ``round(fraction * N)`` distinct pixels to 0 or 255 with equal odds."""
    n_total = img.width * img.height
    n = int(math.floor(fraction * n_total + 0.5))
    if n == 0:
        return img
    rng = np.random.default_rng(seed)
    idx = rng.choice(n_total, size=n, replace=False)
    vals = rng.integers(0, 2, size=n).astype(np.uint8) * 255
    flat = img.pixels.reshape(-1).copy()
    flat[idx] = vals
    return MonoImage(flat.reshape(img.height, img.width))


def gaussian_kernel(radius: int) -> np.ndarray:
    sigma = radius / 3.0
    k = np.arange(-radius, radius + 1, dtype=np.float64)
    weights = np.exp(-(k * k) / (2.0 * sigma * sigma))
    return weights / weights.sum()


def gaussian_blur(img: MonoImage, radius: int) -> MonoImage:
    """Separable Gaussian with sigma = radius/3, truncated at ``radius``; edges replicated."""
    if radius <= 0:
        return img
    kern = gaussian_kernel(radius)
    src = img.pixels.astype(np.float64)
    h, w = src.shape
    padded = np.pad(src, ((0, 0), (radius, radius)), mode="edge")
    tmp = np.zeros_like(src)
    for i, wt in enumerate(kern):
        tmp += wt * padded[:, i:i + w]
    padded = np.pad(tmp, ((radius, radius), (0, 0)), mode="edge")
    out = np.zeros_like(src)
    for i, wt in enumerate(kern):
        out += wt * padded[i:i + h, :]
    return MonoImage(np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8))


def augment(
    img: MonoImage, anns: list[Annotation], spec: AugmentSpec
) -> tuple[MonoImage, list[Annotation]]:
    """Flips, quarter turns, small rotation, shear, then noise and blur.

    Deterministic for a given (img, anns, spec).
    """
    anns = list(anns)
    if spec.flip_h:
        img, anns = flip_horizontal(img, anns)
    if spec.flip_v:
        img, anns = flip_vertical(img, anns)
    if spec.rot90_steps:
        img, anns = rotate90(img, anns, spec.rot90_steps)
    if spec.rot_small_deg or spec.shear_h_deg or spec.shear_v_deg:
        lin = affine_about_center(spec.rot_small_deg, spec.shear_h_deg, spec.shear_v_deg)
        img, anns = warp_affine(img, anns, lin)
    # quarter turns and flips keep boxes in-frame; clip anyway so inputs that overhang are normalised
    clipped = []
    for a in anns:
        if a.bbox.x >= 0 and a.bbox.y >= 0 and a.bbox.x2 <= img.width and a.bbox.y2 <= img.height:
            clipped.append(a)
            continue
        b = _hull_clip(_box_corners(a.bbox), img.width, img.height)
        if b is not None:
            clipped.append(Annotation(a.class_id, b))
    if spec.noise_fraction > 0:
        img = salt_and_pepper(img, spec.noise_fraction, spec.seed)
    if spec.blur_radius_px > 0:
        img = gaussian_blur(img, spec.blur_radius_px)
    return img, clipped
