import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uvgb.boxes import iou
from uvgb.evaluate import (
    average_precision,
    evaluate,
    match_detections,
    rates,
    write_pr_csv,
    write_summary_csv,
)
from uvgb.types import Annotation, BBox, DataError, Detection


def det(x, y, w, h, c, cls=0):
    return Detection(cls, BBox(x, y, w, h), c)


def gt(x, y, w, h, cls=0):
    return Annotation(cls, BBox(x, y, w, h))


# -- independent oracle on integer boxes ------------------------------------

def _iou_exact(a, b):
    ix = max(0, min(a[0] + a[2], b[0] + b[2]) - max(a[0], b[0]))
    iy = max(0, min(a[1] + a[3], b[1] + b[3]) - max(a[1], b[1]))
    inter = ix * iy
    return Fraction(inter, a[2] * a[3] + b[2] * b[3] - inter)


def _greedy_tp(prefix, gts, thr):
    free = list(range(len(gts)))
    tp = 0
    for box, _ in prefix:
        scored = [(_iou_exact(box, gts[g]), -g) for g in free]
        if scored:
            v, neg = max(scored)
            if v >= thr:
                free.remove(-neg)
                tp += 1
    return tp


def oracle_ap(dets, gts, thr=Fraction(1, 2)):
    """Re-match every confidence prefix independently and integrate the envelope."""
    if not gts:
        return 1.0 if not dets else 0.0
    ranked = sorted(dets, key=lambda d: -d[1])
    n = len(gts)
    points = []
    for k in range(1, len(ranked) + 1):
        tp = _greedy_tp(ranked[:k], gts, thr)
        points.append((Fraction(tp, n), Fraction(tp, k)))
    total = Fraction(0)
    for j in range(1, n + 1):
        total += max((p for r, p in points if r >= Fraction(j, n)), default=Fraction(0))
    return float(total / n)


int_box = st.tuples(st.integers(0, 20), st.integers(0, 20), st.integers(1, 8), st.integers(1, 8))


@st.composite
def scenes(draw):
    gts = draw(st.lists(int_box, max_size=8))
    boxes = draw(st.lists(int_box, max_size=12))
    near = draw(st.lists(st.sampled_from(gts), max_size=8)) if gts else []
    boxes = boxes + [(x + draw(st.integers(-1, 1)), y, w, h) for x, y, w, h in near]
    confs = draw(st.lists(st.integers(1, 10_000), min_size=len(boxes), max_size=len(boxes), unique=True))
    return list(zip(boxes, [c / 10_000 for c in confs])), gts


def _as_types(scene):
    dets, gts = scene
    return [det(*b, c) for b, c in dets], [gt(*g) for g in gts]


class TestIou:
    def test_examples(self):
        assert iou(BBox(1, 2, 3, 4), BBox(1, 2, 3, 4)) == 1.0
        assert iou(BBox(0, 0, 1, 1), BBox(5, 5, 1, 1)) == 0.0
        assert iou(BBox(0, 0, 2, 2), BBox(1, 0, 2, 2)) == pytest.approx(1 / 3)

    @given(a=int_box, b=int_box)
    def test_matches_exact(self, a, b):
        assert iou(BBox(*a), BBox(*b)) == pytest.approx(float(_iou_exact(a, b)), abs=1e-15)


class TestMatching:
    def test_examples(self):
        g = [gt(0, 0, 10, 10)]
        m = match_detections([det(0, 0, 10, 10, 0.5)], g)
        assert (m.tp, m.fp, m.fn) == (1, 0, 0)
        m = match_detections([det(1, 0, 10, 10, 0.6), det(0, 0, 10, 10, 0.9)], g)
        assert (m.tp, m.fp, m.fn) == (1, 1, 0) and m.pairs[0][0] == 1
        m = match_detections([], [gt(0, 0, 1, 1)] * 3)
        assert m.fn == 3

    @given(scene=scenes(), thr=st.sampled_from([0.3, 0.5, 0.7]))
    def test_counts_and_one_to_one(self, scene, thr):
        dets, gts = _as_types(scene)
        m = match_detections(dets, gts, thr)
        assert m.tp == len(m.pairs)
        assert m.tp + m.fp == len(dets) and m.tp + m.fn == len(gts)
        assert len({p[0] for p in m.pairs}) == len({p[1] for p in m.pairs}) == m.tp

    @given(scene=scenes(), a=st.floats(0.05, 1), b=st.floats(0.05, 1))
    def test_lower_iou_never_decreases_tp(self, scene, a, b):
        dets, gts = _as_types(scene)
        lo, hi = sorted((a, b))
        assert match_detections(dets, gts, lo).tp >= match_detections(dets, gts, hi).tp


class TestRates:
    def test_aerial_counts(self):
        tp, fp, fn = rates(1218, 2042, 25)
        assert (round(tp * 100, 2), round(fp * 100, 2), round(fn * 100, 2)) == (37.08, 62.16, 0.76)
        assert abs(tp * 100 - 37.1) < 0.1 and abs(fp * 100 - 62.2) < 0.1

    def test_close_range_counts(self):
        tp, fp, fn = rates(77, 0, 2)
        assert (round(tp * 100, 2), fp, round(fn * 100, 2)) == (97.47, 0.0, 2.53)

    def test_trivial_and_error(self):
        assert rates(1, 0, 0) == (1.0, 0.0, 0.0)
        with pytest.raises(DataError):
            rates(0, 0, 0)

    @given(st.integers(0, 10**6), st.integers(0, 10**6), st.integers(1, 10**6))
    def test_sum_to_one(self, tp, fp, fn):
        assert sum(rates(tp, fp, fn)) == pytest.approx(1.0, abs=1e-9)


class TestAveragePrecision:
    def test_single_hit(self):
        assert average_precision([det(0, 0, 4, 4, 0.2)], [gt(0, 0, 4, 4)]) == 1.0

    def test_worked_example(self):
        g = [gt(0, 0, 10, 10), gt(50, 50, 10, 10)]
        d = [det(0, 0, 10, 10, 0.9), det(100, 100, 5, 5, 0.8), det(50, 50, 10, 10, 0.7)]
        assert average_precision(d, g) == pytest.approx(0.5 + (2 / 3) * 0.5)
        assert average_precision(d, g) == oracle_ap([((0, 0, 10, 10), .9), ((100, 100, 5, 5), .8), ((50, 50, 10, 10), .7)],
                                                     [(0, 0, 10, 10), (50, 50, 10, 10)])

    def test_empty_conventions(self):
        assert average_precision([], []) == 1.0
        assert average_precision([det(0, 0, 1, 1, 0.5)], []) == 0.0
        assert average_precision([], [gt(0, 0, 1, 1)]) == 0.0

    @settings(max_examples=300, deadline=None)
    @given(scene=scenes())
    def test_equals_brute_force_oracle_exactly(self, scene):
        dets, gts = _as_types(scene)
        assert average_precision(dets, gts) == oracle_ap(*scene)

    @given(scene=scenes(), seed=st.integers(0, 1000))
    def test_order_independent(self, scene, seed):
        dets, gts = _as_types(scene)
        shuffled = dets[:]
        random.Random(seed).shuffle(shuffled)
        assert average_precision(shuffled, gts) == average_precision(dets, gts)

    @given(scene=scenes(), k=st.floats(0.1, 5))
    def test_rank_only(self, scene, k):
        dets, gts = _as_types(scene)
        moved = [Detection(d.class_id, d.bbox, d.confidence ** k) for d in dets]
        assert average_precision(moved, gts) == average_precision(dets, gts)

    @given(scene=scenes())
    def test_bounded(self, scene):
        assert 0.0 <= average_precision(*_as_types(scene)) <= 1.0


class TestEvaluate:
    def test_single_frame_equals_per_frame(self):
        d = [det(0, 0, 10, 10, 0.9), det(100, 100, 5, 5, 0.8), det(50, 50, 10, 10, 0.7)]
        g = [gt(0, 0, 10, 10), gt(50, 50, 10, 10)]
        rep = evaluate({"a": d}, {"a": g})
        m = match_detections(d, g)
        assert (rep.tp, rep.fp, rep.fn) == (m.tp, m.fp, m.fn)
        assert rep.mean_ap == average_precision(d, g)

    @given(a=scenes(), b=scenes())
    def test_counts_additive(self, a, b):
        da, ga = _as_types(a)
        db, gb = _as_types(b)
        joint = evaluate({"a": da, "b": db}, {"a": ga, "b": gb})
        sa, sb = evaluate({"a": da}, {"a": ga}), evaluate({"b": db}, {"b": gb})
        assert (joint.tp, joint.fp, joint.fn) == (sa.tp + sb.tp, sa.fp + sb.fp, sa.fn + sb.fn)

    def test_planted_simulator_scene(self):
        from uvgb.survey.simulate import FieldSpec, FlightSpec, simulate_survey

        sim = simulate_survey(FieldSpec(rows=2, plants_per_row=3), FlightSpec(altitude_m=1.5), seed=2)
        rng = random.Random(0)
        dets, gts, planted_fp = {}, {}, 0
        for k, anns in enumerate(sim.annotations):
            gts[k] = anns
            dets[k] = [Detection(0, a.bbox, rng.uniform(0.6, 1.0)) for a in anns]
            extra = rng.randint(0, 3)
            planted_fp += extra
            dets[k] += [det(1000 + 20 * i, 1000, 5, 5, rng.uniform(0, 1)) for i in range(extra)]
        rep = evaluate(dets, gts)
        n = sum(len(a) for a in sim.annotations)
        assert (rep.tp, rep.fp, rep.fn) == (n, planted_fp, 0)

    def test_per_class_and_mismatch(self):
        d = {"f": [det(0, 0, 5, 5, 0.9, 0), det(10, 10, 5, 5, 0.9, 1)]}
        g = {"f": [gt(0, 0, 5, 5, 0), gt(30, 30, 5, 5, 1)]}
        rep = evaluate(d, g)
        assert rep.classes[0].ap == 1.0 and rep.classes[1].ap == 0.0 and rep.mean_ap == 0.5
        with pytest.raises(DataError, match="mismatched"):
            evaluate({"a": []}, {"b": []})

    def test_reports_written(self, tmp_path):
        rep = evaluate({"a": [det(0, 0, 5, 5, 0.9)]}, {"a": [gt(0, 0, 5, 5)]})
        summary = write_summary_csv(rep, tmp_path / "s.csv", ["flower"]).read_text().splitlines()
        assert summary[0].startswith("class,n_gt") and summary[1].startswith("flower,1,1,1,0,0") and summary[-1].startswith("all,")
        pr = write_pr_csv(rep, tmp_path / "pr.csv").read_text().splitlines()
        assert pr[1] == "0,1,0.9,1.0,1.0"
