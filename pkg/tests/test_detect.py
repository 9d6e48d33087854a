import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import ndimage

from uvgb.detect import (
    BackendError,
    BlobDetectorConfig,
    DetectorHandle,
    OnnxBackend,
    apply_threshold,
    detect_blobs,
    detect_frame_tiled,
    run_detector,
)
from uvgb.evaluate import match_detections
from uvgb.imaging.tiling import stitch_detections
from uvgb.types import Annotation, BBox, DataError, Detection, MonoImage


def disk_scene(w, h, disks, background=30):
    yy, xx = np.mgrid[0:h, 0:w]
    arr = np.full((h, w), background, dtype=np.uint8)
    for cx, cy, r in disks:
        arr[(xx + 0.5 - cx) ** 2 + (yy + 0.5 - cy) ** 2 <= r * r] = 255
    return MonoImage(arr)


class TestBlobs:
    def test_empty(self, backend):
        assert detect_blobs(MonoImage.blank(64, 64)) == []

    def test_single_disk_matches_component_oracle(self, backend):
        img = disk_scene(64, 64, [(30.0, 25.0, 8.0)])
        dets = detect_blobs(img)
        assert len(dets) == 1
        b = dets[0].bbox
        assert b.x <= 30 <= b.x2 and b.y <= 25 <= b.y2
        lab, n = ndimage.label(img.pixels >= 200, structure=np.ones((3, 3)))
        (sl,) = ndimage.find_objects(lab)
        assert (b.y, b.x, b.y2, b.x2) == (sl[0].start, sl[1].start, sl[0].stop, sl[1].stop)
        assert dets[0].confidence == 1.0 and dets[0].class_id == 0

    def test_area_filter(self, backend):
        img = disk_scene(80, 40, [(20, 20, 8), (60, 20, 1.0)])
        assert len(detect_blobs(img, BlobDetectorConfig(min_area_px=10))) == 1

    def test_circularity_rejects_lines(self):
        arr = np.zeros((20, 60), dtype=np.uint8)
        arr[10, 5:55] = 255
        arr[5:9, 5:9] = 255
        dets = detect_blobs(MonoImage(arr), BlobDetectorConfig(min_area_px=1))
        assert [d.bbox for d in dets] == [BBox(5, 5, 4, 4)]

    def test_confidence_is_mean_brightness(self):
        arr = np.zeros((20, 20), dtype=np.uint8)
        arr[5:9, 5:9] = 210
        arr[5:7, 5:9] = 250
        (d,) = detect_blobs(MonoImage(arr), BlobDetectorConfig(min_area_px=1))
        assert d.confidence == pytest.approx((8 * 250 + 8 * 210) / 16 / 255)

    def test_sorted_by_confidence_then_position(self):
        arr = np.zeros((30, 30), dtype=np.uint8)
        for (y, x, v) in [(20, 2, 220), (2, 20, 220), (2, 2, 240)]:
            arr[y:y + 4, x:x + 4] = v
        dets = detect_blobs(MonoImage(arr), BlobDetectorConfig(min_area_px=1))
        assert [(d.bbox.x, d.bbox.y) for d in dets] == [(2, 2), (20, 2), (2, 20)]

    @settings(max_examples=30, deadline=None)
    @given(dx=st.integers(-10, 10), dy=st.integers(-10, 10), seed=st.integers(0, 1000))
    def test_translation_equivariance(self, dx, dy, seed):
        rng = np.random.default_rng(seed)
        disks = [(rng.uniform(20, 80), rng.uniform(20, 60), rng.uniform(2.5, 6)) for _ in range(4)]
        img = disk_scene(100, 80, disks)
        shifted = np.full_like(img.pixels, 30)
        src = img.pixels[max(0, -dy):80 - max(0, dy), max(0, -dx):100 - max(0, dx)]
        shifted[max(0, dy):max(0, dy) + src.shape[0], max(0, dx):max(0, dx) + src.shape[1]] = src
        a = sorted((d.bbox.x + dx, d.bbox.y + dy, d.bbox.w, d.bbox.h, d.confidence) for d in detect_blobs(img))
        b = sorted((d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h, d.confidence) for d in detect_blobs(MonoImage(shifted)))
        assert a == b

    def test_config_validation(self):
        with pytest.raises(DataError):
            BlobDetectorConfig(brightness_threshold=300)
        with pytest.raises(DataError):
            BlobDetectorConfig(min_area_px=10, max_area_px=10)


class TestThreshold:
    dets = [Detection(0, BBox(0, 0, 1, 1), 0.9), Detection(0, BBox(5, 5, 1, 1), 0.5)]

    def test_default_cut(self):
        assert len(apply_threshold(self.dets, 0.51)) == 1
        assert apply_threshold(self.dets, 0.0) == self.dets

    def test_handle_cut_on_external(self):
        h = DetectorHandle.external(lambda img: list(self.dets))
        assert run_detector(h, MonoImage.blank(8, 8)) == self.dets[:1]

    @given(confs=st.lists(st.floats(0, 1), max_size=30), a=st.floats(0, 1), b=st.floats(0, 1))
    def test_monotone(self, confs, a, b):
        lo, hi = sorted((a, b))
        dets = [Detection(0, BBox(i, 0, 1, 1), c) for i, c in enumerate(confs)]
        assert len(apply_threshold(dets, hi)) <= len(apply_threshold(dets, lo))

    def test_baseline_deterministic(self):
        img = disk_scene(64, 64, [(10, 10, 4), (40, 40, 5)])
        h = DetectorHandle.baseline()
        assert run_detector(h, img) == run_detector(h, img)

    def test_handle_validation(self):
        with pytest.raises(DataError):
            DetectorHandle(kind="magic")
        with pytest.raises(DataError):
            DetectorHandle.baseline(confidence_threshold=1.5)
        with pytest.raises(DataError):
            DetectorHandle(kind="external")


class TestExternal:
    def test_missing_model_file(self, tmp_path):
        with pytest.raises(BackendError, match="not readable"):
            OnnxBackend(tmp_path / "model.onnx")

    def test_unavailable_runtime_is_reported(self, tmp_path):
        model = tmp_path / "model.onnx"
        model.write_bytes(b"\x00garbage")
        with pytest.raises(BackendError):
            run_detector(DetectorHandle.external(model), MonoImage.blank(8, 8))


class TestTiled:
    def test_small_frame_equals_padded_single_run(self):
        img = disk_scene(100, 60, [(20, 20, 5), (80, 40, 6)])
        padded = np.zeros((128, 128), dtype=np.uint8)
        padded[:60, :100] = img.pixels
        h = DetectorHandle.baseline()
        assert detect_frame_tiled(h, img, 128) == run_detector(h, MonoImage(padded))

    def test_empty_frame(self):
        assert detect_frame_tiled(DetectorHandle.baseline(), MonoImage.blank(300, 200), 128, 32) == []

    def test_overlap_zone_flower_counted_once(self):
        # tiles at x = 0 and 64 with size 128; the flower sits inside both
        img = disk_scene(192, 128, [(96, 64, 6)])
        out = detect_frame_tiled(DetectorHandle.baseline(), img, 128, 64)
        assert len(out) == 1
        assert out[0].bbox == detect_blobs(img)[0].bbox

    def test_two_tile_duplicate_keeps_higher_confidence(self):
        lo = Detection(0, BBox(10, 10, 10, 10), 0.7)
        hi = Detection(0, BBox(11, 10, 10, 10), 0.95)
        out = stitch_detections([([lo], 0, 0), ([hi], 0, 0)], 0.5)
        assert out == [hi]

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_no_seam_losses_with_wide_overlap(self, seed):
        rng = np.random.default_rng(seed)
        w, h, rmax = 400, 300, 6.0
        disks = []
        while len(disks) < 25:
            c = (rng.uniform(8, w - 8), rng.uniform(8, h - 8), rng.uniform(3, rmax))
            if all(math.hypot(c[0] - d[0], c[1] - d[1]) > c[2] + d[2] + 3 for d in disks):
                disks.append(c)
        img = disk_scene(w, h, disks)
        handle = DetectorHandle.baseline()
        full = run_detector(handle, img)
        tiled = detect_frame_tiled(handle, img, 96, math.ceil(2 * 2 * rmax))
        m = match_detections(tiled, [Annotation(0, d.bbox) for d in full], 0.5)
        assert m.fn == 0


def test_simulated_confusers_are_detected():
    from uvgb.survey.simulate import FieldSpec, FlightSpec, simulate_survey
    from uvgb.survey.georef import ground_to_pixel

    sim = simulate_survey(FieldSpec(rows=2, plants_per_row=4, confuser_probability=1.0), FlightSpec(altitude_m=2.0), seed=5)
    handle = DetectorHandle.baseline()
    checked = 0
    for frame, pose in zip(sim.frames, sim.poses):
        dets = run_detector(handle, frame)
        for c in sim.confusers:
            u, v = ground_to_pixel(pose, sim.flight.camera, c.east_m, c.north_m, sim.plane)
            if 10 <= u < frame.width - 10 and 10 <= v < frame.height - 10:
                checked += 1
                assert any(d.bbox.x <= u <= d.bbox.x2 and d.bbox.y <= v <= d.bbox.y2 for d in dets)
    assert checked > 0
