"""Detection evaluation: greedy matching, TP/FP/FN rates, AP and mAP at an IoU cut.

Rates divide each count by ``tp + fp + fn``; this is the convention behind the
published aerial detection tables (e.g. 1218 TP, 2042 FP, 25 FN give 37.1 %,
62.2 % and 0.76 %).
"""
from __future__ import annotations

import csv
from fractions import Fraction
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Mapping, Sequence

from .boxes import detection_order, iou
from .types import Annotation, DataError, Detection


@dataclass(frozen=True)
class MatchResult:
    tp: int
    fp: int
    fn: int
    pairs: tuple[tuple[int, int, float], ...]  # (detection idx, gt idx, IoU)
    tp_flags: tuple[bool, ...] = ()  # per detection, in input order


def match_detections(
    dets: Sequence[Detection], gts: Sequence[Annotation], iou_threshold: float = 0.5
) -> MatchResult:
    """One-to-one greedy matching in descending confidence order.

    Each detection claims the unmatched ground truth with the highest IoU
    (lowest index on ties) provided that IoU reaches ``iou_threshold``.
    """
    taken = [False] * len(gts)
    flags = [False] * len(dets)
    pairs = []
    for di in detection_order(dets):
        best, best_iou = -1, -1.0
        for gi, g in enumerate(gts):
            if taken[gi]:
                continue
            v = iou(dets[di].bbox, g.bbox)
            if v > best_iou:
                best, best_iou = gi, v
        if best >= 0 and best_iou >= iou_threshold:
            taken[best] = True
            flags[di] = True
            pairs.append((di, best, best_iou))
    tp = len(pairs)
    return MatchResult(tp, len(dets) - tp, len(gts) - tp, tuple(pairs), tuple(flags))


def rates(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """(tp, fp, fn) as fractions of ``tp + fp + fn``."""
    total = tp + fp + fn
    if total <= 0:
        raise DataError("rates need at least one of tp, fp, fn to be positive")
    return tp / total, fp / total, fn / total


def pr_points(ranked_tp: Sequence[bool], n_gt: int) -> list[tuple[float, float]]:
    """(recall, precision) after each ranked detection."""
    out = []
    ctp = 0
    for k, hit in enumerate(ranked_tp, start=1):
        ctp += bool(hit)
        out.append((ctp / n_gt if n_gt else 0.0, ctp / k))
    return out


def ap_from_ranked(ranked_tp: Sequence[bool], n_gt: int) -> float:
    """All-points interpolated AP from TP flags sorted by descending confidence.

    Recall grows by exactly ``1/n_gt`` at each TP, so AP is the mean of the
    precision envelope over TP ranks. It is summed in exact rationals and
    rounded once.
    """
    if n_gt == 0:
        return 1.0 if not ranked_tp else 0.0
    precision = []
    ctp = 0
    for k, hit in enumerate(ranked_tp, start=1):
        ctp += bool(hit)
        precision.append(Fraction(ctp, k))
    total = Fraction(0)
    best = Fraction(0)
    for k in range(len(precision) - 1, -1, -1):
        best = max(best, precision[k])
        if ranked_tp[k]:
            total += best
    return float(total / n_gt)


def average_precision(
    dets: Sequence[Detection], gts: Sequence[Annotation], iou_threshold: float = 0.5
) -> float:
    m = match_detections(dets, gts, iou_threshold)
    ranked = [m.tp_flags[i] for i in detection_order(dets)]
    return ap_from_ranked(ranked, len(gts))


@dataclass
class ClassReport:
    class_id: int
    n_gt: int
    n_det: int
    tp: int
    fp: int
    fn: int
    ap: float
    pr: list[tuple[float, float, float]] = field(default_factory=list)  # (confidence, recall, precision)

    @property
    def rates(self) -> tuple[float, float, float] | None:
        return rates(self.tp, self.fp, self.fn) if self.tp + self.fp + self.fn else None


@dataclass
class EvalReport:
    iou_threshold: float
    classes: dict[int, ClassReport]
    frames: int

    @property
    def tp(self) -> int:
        return sum(c.tp for c in self.classes.values())

    @property
    def fp(self) -> int:
        return sum(c.fp for c in self.classes.values())

    @property
    def fn(self) -> int:
        return sum(c.fn for c in self.classes.values())

    @property
    def rates(self) -> tuple[float, float, float] | None:
        return rates(self.tp, self.fp, self.fn) if self.tp + self.fp + self.fn else None

    @property
    def mean_ap(self) -> float:
        if not self.classes:
            return 1.0
        return sum(c.ap for c in self.classes.values()) / len(self.classes)

    @property
    def precision(self) -> float:
        n = self.tp + self.fp
        return self.tp / n if n else 0.0

    @property
    def recall(self) -> float:
        n = self.tp + self.fn
        return self.tp / n if n else 0.0


def evaluate(
    dets_per_frame: Mapping[Hashable, Sequence[Detection]],
    gts_per_frame: Mapping[Hashable, Sequence[Annotation]],
    iou_threshold: float = 0.5,
) -> EvalReport:
    """Match per frame and per class, then pool counts and rank detections globally."""
    if set(dets_per_frame) != set(gts_per_frame):
        missing = set(gts_per_frame) ^ set(dets_per_frame)
        raise DataError(f"mismatched frame sets; {len(missing)} frame(s) present on one side only")
    frames = sorted(gts_per_frame, key=str)
    class_ids = sorted(
        {d.class_id for f in frames for d in dets_per_frame[f]}
        | {g.class_id for f in frames for g in gts_per_frame[f]}
    )
    classes = {}
    for c in class_ids:
        ranked: list[tuple[float, int, int, bool]] = []
        n_gt = n_det = tp = 0
        for fi, f in enumerate(frames):
            dets = [d for d in dets_per_frame[f] if d.class_id == c]
            gts = [g for g in gts_per_frame[f] if g.class_id == c]
            m = match_detections(dets, gts, iou_threshold)
            for rank, di in enumerate(detection_order(dets)):
                ranked.append((-dets[di].confidence, fi, rank, m.tp_flags[di]))
            n_gt += len(gts)
            n_det += len(dets)
            tp += m.tp
        ranked.sort()
        flags = [r[3] for r in ranked]
        pr = [(-r[0], rec, prec) for r, (rec, prec) in zip(ranked, pr_points(flags, n_gt))]
        classes[c] = ClassReport(
            class_id=c,
            n_gt=n_gt,
            n_det=n_det,
            tp=tp,
            fp=n_det - tp,
            fn=n_gt - tp,
            ap=ap_from_ranked(flags, n_gt),
            pr=pr,
        )
    return EvalReport(iou_threshold=iou_threshold, classes=classes, frames=len(frames))


SUMMARY_FIELDS = (
    "class", "n_gt", "n_det", "tp", "fp", "fn", "tp_rate", "fp_rate", "fn_rate", "precision", "recall", "ap",
)


def _rate_cells(r: tuple[float, float, float] | None) -> list[str]:
    return [repr(v) for v in r] if r is not None else ["", "", ""]


def write_summary_csv(report: EvalReport, path: str | Path, class_names: Sequence[str] | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for c, cr in report.classes.items():
            name = class_names[c] if class_names and c < len(class_names) else str(c)
            prec = cr.tp / cr.n_det if cr.n_det else 0.0
            rec = cr.tp / cr.n_gt if cr.n_gt else 0.0
            w.writerow([name, cr.n_gt, cr.n_det, cr.tp, cr.fp, cr.fn, *_rate_cells(cr.rates), repr(prec), repr(rec), repr(cr.ap)])
        w.writerow(
            [
                "all",
                report.tp + report.fn,
                report.tp + report.fp,
                report.tp,
                report.fp,
                report.fn,
                *_rate_cells(report.rates),
                repr(report.precision),
                repr(report.recall),
                repr(report.mean_ap),
            ]
        )
    return path


def write_pr_csv(report: EvalReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("class", "rank", "confidence", "recall", "precision"))
        for c, cr in report.classes.items():
            for rank, (conf, rec, prec) in enumerate(cr.pr, start=1):
                w.writerow([c, rank, repr(conf), repr(rec), repr(prec)])
    return path
