"""Command-line entry point: ``uvgb <subcommand> ...``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 detector backend error.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from .detect import BackendError, BlobDetectorConfig, DetectorHandle, detect_frame_tiled
from .evaluate import evaluate, write_pr_csv, write_summary_csv
from .imaging.dataset import IMAGE_SUFFIXES, load_manifest, save_manifest, split_dataset
from .imaging.io import (
    load_image,
    read_annotations,
    read_detections,
    save_image,
    write_annotations,
    write_detections,
)
from .imaging.tiling import clip_annotations_to_tile, tile, tile_rect
from .imaging.transform import AugmentSpec, augment, resize
from .optics import BUILTIN_PROFILES, altitude_for_gsd, compute_gsd, get_profile, ground_footprint
from .radiometry import fit_calibration, read_samples_csv, synthetic_standards, write_calibration, write_samples_csv
from .survey.count import survey_count, write_survey_report
from .survey.georef import TangentPlane, read_poses_csv, write_poses_csv
from .survey.simulate import FieldSpec, FlightSpec, simulate_survey
from .svg import calibration_plot, pr_plot
from .types import Annotation, BBox, DataError, DatasetManifest, ManifestEntry

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BACKEND = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _require(path: str | Path, what: str, is_dir: bool = False) -> Path:
    p = Path(path)
    if is_dir and not p.is_dir():
        raise DataError(f"{what} is not a directory: {p}")
    if not is_dir and not p.is_file():
        raise DataError(f"{what} not found: {p}")
    return p


def _camera(args: argparse.Namespace):
    extra = None
    if getattr(args, "manifest", None):
        _, extra = load_manifest(_require(args.manifest, "manifest"))
    return get_profile(args.camera, extra)


def _image_files(directory: Path) -> list[Path]:
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


def _pmap(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _handle(args: argparse.Namespace) -> DetectorHandle:
    if args.model:
        if not Path(args.model).is_file():
            raise BackendError(f"model file not readable: {args.model}")
        return DetectorHandle.external(args.model, args.threshold, args.input_size)
    cfg = BlobDetectorConfig(args.brightness, args.min_area, args.max_area, args.min_circularity)
    return DetectorHandle.baseline(cfg, args.threshold)


def _fmt(v: float) -> str:
    return f"{v:.6g}"


# ---------------------------------------------------------------- subcommands


def cmd_calibrate(args: argparse.Namespace) -> int:
    out = Path(args.out)
    if args.synthetic:
        samples = synthetic_standards(noise_pct=args.noise, seed=args.seed)
        out.mkdir(parents=True, exist_ok=True)
        write_samples_csv(out / "samples.csv", samples)
    else:
        if not args.samples:
            raise UsageError("calibrate needs SAMPLES_CSV or --synthetic")
        samples = read_samples_csv(_require(args.samples, "samples CSV"))
    curve = fit_calibration(samples)
    write_calibration(out / "calibration.json", curve, len(samples))
    calibration_plot(
        [s.mean_pixel_value for s in samples],
        [s.percent_reflectance for s in samples],
        curve.slope,
        curve.intercept,
        curve.r_squared,
    ).save(out / "calibration.svg")
    print(f"slope={curve.slope!r} intercept={curve.intercept!r} r_squared={curve.r_squared!r} n={len(samples)}")
    return EXIT_OK


def cmd_plan(args: argparse.Namespace) -> int:
    cam = _camera(args)
    if (args.altitude is None) == (args.gsd is None):
        raise UsageError("plan needs exactly one of --altitude or --gsd")
    if args.altitude is not None:
        altitude = args.altitude
        gsd = compute_gsd(cam, altitude)
    else:
        gsd = args.gsd
        altitude = altitude_for_gsd(cam, gsd)
    fw, fh = ground_footprint(cam, altitude)
    result = {"gsd_cm_per_px": gsd, "altitude_m": altitude, "footprint_w_m": fw, "footprint_h_m": fh}
    if args.json:
        print(json.dumps(result))
    else:
        print(" ".join(f"{k}={_fmt(v)}" for k, v in result.items()))
    return EXIT_OK


def cmd_tile(args: argparse.Namespace) -> int:
    img = load_image(_require(args.image, "image"))
    anns = read_annotations(_require(args.labels, "labels"), img.width, img.height) if args.labels else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.image).stem
    rows = []
    for k, t in enumerate(tile(img, args.tile_size, args.overlap)):
        name = f"{stem}_t{k:03d}"
        timg = t.image
        size = args.resize or args.tile_size
        if args.resize and args.resize != args.tile_size:
            timg = resize(timg, args.resize, args.resize)
        save_image(timg, out / f"{name}.png")
        if anns is not None:
            local = clip_annotations_to_tile(anns, tile_rect(t), args.min_visible)
            if args.resize and args.resize != args.tile_size:
                s = args.resize / args.tile_size
                local = [Annotation(a.class_id, BBox(a.bbox.x * s, a.bbox.y * s, a.bbox.w * s, a.bbox.h * s)) for a in local]
            write_annotations(out / f"{name}.txt", local, size, size)
        rows.append((name, t.offset_x, t.offset_y))
    with (out / "tiles.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("tile", "offset_x", "offset_y", "tile_size", "scale"))
        for name, ox, oy in rows:
            w.writerow((name, ox, oy, args.tile_size, (args.resize or args.tile_size) / args.tile_size))
    print(f"tiles={len(rows)}")
    return EXIT_OK


def _augment_seed(seed: int, entry: int, copy: int) -> int:
    return (seed * 1_000_003 + entry * 1009 + copy) % (2**32)


def cmd_augment(args: argparse.Namespace) -> int:
    src = _require(args.manifest, "manifest")
    manifest, cameras = load_manifest(src)
    out = Path(args.out)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "labels").mkdir(parents=True, exist_ok=True)

    def work(item):
        i, entry = item
        img = load_image(src.parent / entry.image)
        made = []
        for c in range(args.copies):
            spec = AugmentSpec.random(_augment_seed(args.seed, i, c), max_noise=args.max_noise, max_blur_px=args.max_blur)
            aimg, aanns = augment(img, entry.annotations, spec)
            stem = f"{Path(entry.image).stem}_aug{c:02d}"
            save_image(aimg, out / "images" / f"{stem}.png")
            made.append(
                ManifestEntry(
                    image=f"images/{stem}.png",
                    annotations=aanns,
                    label_path=f"labels/{stem}.txt",
                    width=aimg.width,
                    height=aimg.height,
                )
            )
        return made

    results = _pmap(work, list(enumerate(manifest.entries)), args.jobs)
    entries = [e for batch in results for e in batch]
    save_manifest(DatasetManifest(entries, manifest.class_names), out / "manifest.json", cameras, write_labels=True)
    print(f"images={len(entries)}")
    return EXIT_OK


def cmd_split(args: argparse.Namespace) -> int:
    src = _require(args.manifest, "manifest")
    try:
        fractions = tuple(float(f) for f in args.fractions.split(","))
    except ValueError as exc:
        raise UsageError(f"bad --fractions {args.fractions!r}") from exc
    manifest, cameras = load_manifest(src)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    split = split_dataset(manifest, fractions, args.seed)

    def rebase(p: str | None) -> str | None:
        if p is None:
            return None
        return os.path.relpath((src.parent / p).resolve(), out.resolve())

    for e in split.entries:
        e.image = rebase(e.image)
        e.label_path = rebase(e.label_path)
    save_manifest(split, out / "manifest.json", cameras)
    sizes = {t: len(split.by_split(t)) for t in ("train", "val", "test")}
    print(" ".join(f"{k}={v}" for k, v in sizes.items()))
    return EXIT_OK


def cmd_detect(args: argparse.Namespace) -> int:
    src = Path(args.input)
    files = _image_files(_require(src, "input directory", is_dir=True)) if src.is_dir() else [_require(src, "image")]
    handle = _handle(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def work(path: Path) -> int:
        img = load_image(path)
        dets = detect_frame_tiled(handle, img, args.tile_size, args.overlap, args.dedup_iou, args.tile_input_size)
        write_detections(out / f"{path.stem}.txt", dets, img.width, img.height)
        return len(dets)

    counts = _pmap(work, files, args.jobs if handle.kind == "baseline" else 1)
    print(f"frames={len(files)} detections={sum(counts)}")
    return EXIT_OK


def load_eval_inputs(gt_dir: Path, det_dir: Path, allow_missing: bool = False):
    """Read label and detection files in normalised units (IoU is invariant to per-axis scaling)."""
    gts = {p.stem: read_annotations(p, 1, 1) for p in sorted(gt_dir.glob("*.txt"))}
    dets = {p.stem: read_detections(p, 1, 1) for p in sorted(det_dir.glob("*.txt"))}
    if set(gts) != set(dets):
        only_gt = sorted(set(gts) - set(dets))
        only_det = sorted(set(dets) - set(gts))
        if not allow_missing or only_det:
            raise DataError(
                f"mismatched frame sets: {len(only_gt)} without detections, {len(only_det)} without ground truth"
                + (f" (e.g. {(only_gt or only_det)[0]})" if only_gt or only_det else "")
            )
        for k in only_gt:
            dets[k] = []
    return dets, gts


def cmd_eval(args: argparse.Namespace) -> int:
    gt_dir = _require(args.gt, "ground-truth directory", is_dir=True)
    det_dir = _require(args.det, "detection directory", is_dir=True)
    dets, gts = load_eval_inputs(gt_dir, det_dir, args.allow_missing)
    report = evaluate(dets, gts, args.iou)
    out = Path(args.out)
    names = args.class_names.split(",") if args.class_names else None
    write_summary_csv(report, out / "summary.csv", names)
    write_pr_csv(report, out / "pr.csv")
    curves = {
        (names[c] if names and c < len(names) else f"class {c}"): [(r, p) for _, r, p in cr.pr]
        for c, cr in report.classes.items()
    }
    pr_plot(curves, f"Precision-recall @ IoU {args.iou:g}").save(out / "pr.svg")
    r = report.rates
    rate_txt = (
        f"tp_rate={r[0] * 100:.2f}% fp_rate={r[1] * 100:.2f}% fn_rate={r[2] * 100:.2f}%" if r else "rates=n/a"
    )
    print(f"frames={report.frames} tp={report.tp} fp={report.fp} fn={report.fn} {rate_txt} mAP={report.mean_ap:.4f}")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    cam = get_profile(args.camera)
    spec = FieldSpec(
        rows=args.rows,
        plants_per_row=args.plants,
        row_spacing_m=args.row_spacing,
        plant_spacing_m=args.plant_spacing,
        flowers_per_plant_mean=args.flowers_mean,
        flowers_per_plant_spread=args.flowers_spread,
        confuser_probability=args.confusers,
        background_seed=args.seed,
    )
    flight = FlightSpec(altitude_m=args.altitude, overlap=args.overlap, camera=cam)
    sim = simulate_survey(spec, flight, args.seed, args.jobs)
    out = Path(args.out)
    for img, pose, anns in zip(sim.frames, sim.poses, sim.annotations):
        save_image(img, out / "frames" / f"{pose.frame_id}.png")
        write_annotations(out / "labels" / f"{pose.frame_id}.txt", anns, img.width, img.height)
    write_poses_csv(out / "poses.csv", sim.poses)
    with (out / "truth.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("kind", "east_m", "north_m", "radius_m", "row"))
        for o in sim.objects:
            w.writerow((o.kind, f"{o.east_m:.4f}", f"{o.north_m:.4f}", f"{o.radius_m:.4f}", o.plant[0] + 1))
    field_doc = {
        "origin": list(spec.origin),
        "row_axes_east_m": spec.row_axes_east,
        "row_spacing_m": spec.row_spacing_m,
        "camera": args.camera,
        "flowers": len(sim.flowers),
        "confusers": len(sim.confusers),
    }
    (out / "field.json").write_text(json.dumps(field_doc, indent=2) + "\n")
    print(f"frames={len(sim.frames)} flowers={len(sim.flowers)} confusers={len(sim.confusers)}")
    return EXIT_OK


def cmd_survey(args: argparse.Namespace) -> int:
    frames_dir = _require(args.frames, "frames directory", is_dir=True)
    poses = read_poses_csv(_require(args.poses, "poses CSV"))
    cam = _camera(args)
    rows: list[float] = []
    spacing = args.row_spacing
    plane = None
    if args.field:
        doc = json.loads(_require(args.field, "field file").read_text())
        rows = list(doc.get("row_axes_east_m", []))
        spacing = doc.get("row_spacing_m", spacing)
        if "origin" in doc:
            plane = TangentPlane(*doc["origin"])
    if args.rows_east:
        rows = [float(v) for v in args.rows_east.split(",")]
    images = []
    for p in poses:
        cands = [frames_dir / f"{p.frame_id}{s}" for s in IMAGE_SUFFIXES]
        path = next((c for c in cands if c.is_file()), None)
        if path is None:
            raise DataError(f"no frame image for pose {p.frame_id} in {frames_dir}")
        images.append(path)
    handle = _handle(args)
    frames = _pmap(load_image, images, args.jobs)
    report = survey_count(
        frames,
        poses,
        handle,
        cam,
        dedup_radius_m=args.dedup_radius,
        row_axes_east=rows,
        row_spacing_m=spacing,
        plane=plane,
        tile_size=args.tile_size,
        tile_overlap=args.overlap,
        dedup_iou=args.dedup_iou,
        jobs=args.jobs,
    )
    write_survey_report(report, args.out)
    per_row = " ".join(f"{k}={v}" for k, v in report.per_row.items())
    print(f"frames={report.frames_processed} raw={report.raw_detections} total={report.total} {per_row}")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _detector_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("detector")
    g.add_argument("--model", help="ONNX model file; omit to use the bright-blob baseline")
    g.add_argument("--input-size", type=int, default=768, help="external model input size (px)")
    g.add_argument("--threshold", type=float, default=0.51, help="confidence threshold (default 0.51)")
    g.add_argument("--brightness", type=int, default=200, help="baseline binarisation threshold")
    g.add_argument("--min-area", type=float, default=5.0)
    g.add_argument("--max-area", type=float, default=5000.0)
    g.add_argument("--min-circularity", type=float, default=0.6)
    g.add_argument("--tile-size", type=int, default=768)
    g.add_argument("--overlap", type=int, default=0, help="tile overlap (px)")
    g.add_argument("--dedup-iou", type=float, default=0.5, help="NMS IoU when stitching tiles")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uvgb", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="fit %%R vs pixel value from reflectance standards")
    p.add_argument("samples", nargs="?", help="CSV: standard_id,percent_reflectance,mean_pixel_value")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--synthetic", action="store_true", help="generate six synthetic standards instead")
    p.add_argument("--noise", type=float, default=1.0, help="synthetic %%R noise amplitude")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("plan", help="GSD for an altitude, or altitude for a GSD")
    p.add_argument("--altitude", type=float, help="flight altitude (m)")
    p.add_argument("--gsd", type=float, help="target GSD (cm/px)")
    p.add_argument("--camera", default="xnite", help=f"camera profile ({', '.join(BUILTIN_PROFILES)})")
    p.add_argument("--manifest", help="manifest with extra camera profiles")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("tile", help="cut a frame into square tiles (and clip its labels)")
    p.add_argument("image")
    p.add_argument("--labels", help="label file for the image")
    p.add_argument("--out", required=True)
    p.add_argument("--tile-size", type=int, default=768)
    p.add_argument("--overlap", type=int, default=0)
    p.add_argument("--resize", type=int, help="resize each tile to this square size")
    p.add_argument("--min-visible", type=float, default=0.25)
    p.set_defaults(func=cmd_tile)

    p = sub.add_parser("augment", help="write randomly augmented copies of a manifest's images")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--copies", type=int, default=3)
    p.add_argument("--max-noise", type=float, default=0.05)
    p.add_argument("--max-blur", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("split", help="deterministic train/val/test split of a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output directory for manifest.json")
    p.add_argument("--fractions", default="0.4,0.4,0.2")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("detect", help="run a detector over frames and write detection files")
    p.add_argument("input", help="image file or directory of images")
    p.add_argument("--out", required=True)
    p.add_argument("--tile-input-size", type=int, help="resize tiles to this size before inference")
    p.add_argument("--jobs", type=int, default=1)
    _detector_args(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="evaluate detection files against label files")
    p.add_argument("--gt", required=True, help="directory of label files")
    p.add_argument("--det", required=True, help="directory of detection files")
    p.add_argument("--out", required=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--class-names", help="comma-separated class names")
    p.add_argument("--allow-missing", action="store_true", help="treat missing detection files as empty")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="render a synthetic field survey with ground truth")
    p.add_argument("--out", required=True)
    p.add_argument("--rows", type=int, default=3)
    p.add_argument("--plants", type=int, default=12, help="plants per row")
    p.add_argument("--row-spacing", type=float, default=1.0)
    p.add_argument("--plant-spacing", type=float, default=0.5)
    p.add_argument("--flowers-mean", type=float, default=3.0)
    p.add_argument("--flowers-spread", type=float, default=0.0)
    p.add_argument("--confusers", type=float, default=0.0, help="per-plant fruit probability")
    p.add_argument("--altitude", type=float, default=3.0)
    p.add_argument("--overlap", type=float, default=0.3, help="frame overlap fraction")
    p.add_argument("--camera", default="xnite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("survey", help="count flowers over georeferenced frames")
    p.add_argument("--frames", required=True, help="directory of <frame_id>.png frames")
    p.add_argument("--poses", required=True, help="CSV: frame_id,lat,lon,altitude_m,yaw_deg")
    p.add_argument("--out", required=True)
    p.add_argument("--camera", default="xnite")
    p.add_argument("--manifest", help="manifest with extra camera profiles")
    p.add_argument("--field", help="field.json from simulate (row axes, origin)")
    p.add_argument("--rows-east", help="comma-separated row axis east offsets (m)")
    p.add_argument("--row-spacing", type=float, default=1.0)
    p.add_argument("--dedup-radius", type=float, default=0.1)
    p.add_argument("--jobs", type=int, default=1)
    _detector_args(p)
    p.set_defaults(func=cmd_survey)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"uvgb {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BackendError as exc:
        print(f"uvgb {args.command}: backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (DataError, FileNotFoundError, ValueError, KeyError, json.JSONDecodeError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"uvgb {args.command}: error: {msg}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
