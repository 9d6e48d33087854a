"""Dataset manifests and deterministic train/val/test splitting.

Manifest file format (JSON)::

    {
      "format": "uvgb-manifest/1",
      "class_names": ["flower"],
      "cameras": {"xnite": {"focal_length_mm": 3.6, "pixel_pitch_um": 13.9,
                            "sensor_width_px": 640, "sensor_height_px": 480}},
      "entries": [
        {"image": "images/f001.png", "labels": "labels/f001.txt",
         "split": "train", "width": 640, "height": 480}
      ]
    }

Paths are relative to the manifest's directory. ``cameras`` is optional and
holds named camera profiles; ``width``/``height`` are optional and read from
the image header when absent. Label files use the normalised
``class_id cx cy w h`` line format.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from PIL import Image

from ..types import DataError, DatasetManifest, ManifestEntry
from .io import read_annotations, write_annotations

MANIFEST_FORMAT = "uvgb-manifest/1"
DEFAULT_SPLIT = (0.4, 0.4, 0.2)
IMAGE_SUFFIXES = (".png", ".pgm")


def largest_remainder(total: int, fractions: Sequence[float]) -> list[int]:
    """Integer sizes summing to ``total``; leftover units go to the largest remainders (ties: earlier)."""
    quotas = [total * f for f in fractions]
    sizes = [int(math.floor(q)) for q in quotas]
    rest = total - sum(sizes)
    order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - sizes[i]), i))
    for i in order[:rest]:
        sizes[i] += 1
    return sizes


def split_dataset(
    manifest: DatasetManifest,
    fractions: Sequence[float] = DEFAULT_SPLIT,
    seed: int = 0,
) -> DatasetManifest:
    """Shuffle entries with ``seed`` and tag them train/val/test by cumulative fractions."""
    if not manifest.entries:
        raise DataError("cannot split an empty manifest")
    if len(fractions) != 3 or any(f < 0 for f in fractions):
        raise DataError(f"need three non-negative fractions, got {tuple(fractions)}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise DataError(f"fractions must sum to 1, got {sum(fractions)!r}")
    n = len(manifest.entries)
    sizes = largest_remainder(n, fractions)
    perm = np.random.default_rng(seed).permutation(n)
    tags = ["train"] * sizes[0] + ["val"] * sizes[1] + ["test"] * sizes[2]
    tag_of = {int(idx): tag for idx, tag in zip(perm, tags)}
    entries = [replace(e, split=tag_of[i]) for i, e in enumerate(manifest.entries)]
    return DatasetManifest(entries=entries, class_names=list(manifest.class_names))


def _image_size(path: Path) -> tuple[int, int]:
    with Image.open(path) as im:
        return im.size


def load_manifest(path: str | Path) -> tuple[DatasetManifest, dict[str, dict[str, Any]]]:
    """Read a manifest and its label files; returns the manifest and its camera profiles."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid manifest JSON ({exc})") from exc
    if doc.get("format", MANIFEST_FORMAT) != MANIFEST_FORMAT:
        raise DataError(f"{path}: unsupported manifest format {doc.get('format')!r}")
    root = path.parent
    entries = []
    for i, raw in enumerate(doc.get("entries", [])):
        if "image" not in raw:
            raise DataError(f"{path}: entry {i} has no 'image'")
        image = raw["image"]
        label = raw.get("labels")
        width, height = raw.get("width"), raw.get("height")
        anns = []
        if label is not None:
            if width is None or height is None:
                width, height = _image_size(root / image)
            anns = read_annotations(root / label, width, height)
        entries.append(
            ManifestEntry(
                image=image,
                annotations=anns,
                split=raw.get("split", "unsplit"),
                label_path=label,
                width=width,
                height=height,
            )
        )
    manifest = DatasetManifest(entries=entries, class_names=list(doc.get("class_names", [])))
    return manifest, dict(doc.get("cameras", {}))


def save_manifest(
    manifest: DatasetManifest,
    path: str | Path,
    cameras: dict[str, dict[str, Any]] | None = None,
    write_labels: bool = False,
) -> Path:
    """Write the manifest JSON; with ``write_labels`` also (re)write each label file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    root = path.parent
    rows = []
    for e in manifest.entries:
        row: dict[str, Any] = {"image": e.image}
        if e.label_path is not None:
            row["labels"] = e.label_path
        row["split"] = e.split
        if e.width is not None and e.height is not None:
            row["width"], row["height"] = e.width, e.height
        rows.append(row)
        if write_labels and e.label_path is not None:
            if e.width is None or e.height is None:
                raise DataError(f"entry {e.image} needs width/height to write labels")
            write_annotations(root / e.label_path, e.annotations, e.width, e.height)
    doc: dict[str, Any] = {"format": MANIFEST_FORMAT, "class_names": manifest.class_names}
    if cameras:
        doc["cameras"] = cameras
    doc["entries"] = rows
    path.write_text(json.dumps(doc, indent=2) + "\n")
    return path


def manifest_from_dirs(
    image_dir: str | Path, label_dir: str | Path | None, root: str | Path, class_names: Sequence[str]
) -> DatasetManifest:
    """Pair every image in ``image_dir`` with a same-stem ``.txt`` in ``label_dir``."""
    image_dir, root = Path(image_dir), Path(root)
    entries = []
    for img_path in sorted(p for p in image_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES):
        width, height = _image_size(img_path)
        label_rel = None
        anns = []
        if label_dir is not None:
            lp = Path(label_dir) / (img_path.stem + ".txt")
            label_rel = _relpath(lp, root)
            anns = read_annotations(lp, width, height)
        entries.append(
            ManifestEntry(
                image=_relpath(img_path, root),
                annotations=anns,
                label_path=label_rel,
                width=width,
                height=height,
            )
        )
    return DatasetManifest(entries=entries, class_names=list(class_names))


def _relpath(p: Path, root: Path) -> str:
    return os.path.relpath(p.resolve(), root.resolve())
