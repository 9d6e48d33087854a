"""Image I/O, resizing, tiling, augmentation and dataset handling."""
from .dataset import load_manifest, save_manifest, split_dataset
from .io import (
    load_image,
    read_annotations,
    read_detections,
    save_image,
    write_annotations,
    write_detections,
)
from .tiling import Tile, clip_annotations_to_tile, stitch_detections, tile
from .transform import AugmentSpec, augment, resize

__all__ = [
    "AugmentSpec",
    "Tile",
    "augment",
    "clip_annotations_to_tile",
    "load_image",
    "load_manifest",
    "read_annotations",
    "read_detections",
    "resize",
    "save_image",
    "save_manifest",
    "split_dataset",
    "stitch_detections",
    "tile",
    "write_annotations",
    "write_detections",
]
