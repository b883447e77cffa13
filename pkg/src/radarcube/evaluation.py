"""Peak extraction from center-point heatmaps, greedy matching and AP/AR."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .fusion_loss import Center
from .radar_model import CLASSES, TargetClass

DEFAULT_THRESHOLD = 0.2
DEFAULT_DISTANCE = {TargetClass.PEDESTRIAN: 4.0, TargetClass.CYCLIST: 6.0, TargetClass.CAR: 10.0}


@dataclass(frozen=True)
class Detection:
    frame: int
    range_bin: int
    angle_bin: int
    cls: TargetClass
    confidence: float


@dataclass
class MatchResult:
    tp: dict[TargetClass, int] = field(default_factory=lambda: {c: 0 for c in CLASSES})
    fp: dict[TargetClass, int] = field(default_factory=lambda: {c: 0 for c in CLASSES})
    fn: dict[TargetClass, int] = field(default_factory=lambda: {c: 0 for c in CLASSES})
    pairs: list[tuple[Detection, Center, float]] = field(default_factory=list)

    def merge(self, other: "MatchResult") -> "MatchResult":
        out = MatchResult()
        for c in CLASSES:
            out.tp[c] = self.tp[c] + other.tp[c]
            out.fp[c] = self.fp[c] + other.fp[c]
            out.fn[c] = self.fn[c] + other.fn[c]
        out.pairs = self.pairs + other.pairs
        return out

    def present_classes(self) -> list[TargetClass]:
        return [c for c in CLASSES if self.tp[c] + self.fp[c] + self.fn[c] > 0]


def extract_detections(pred: np.ndarray, threshold: float = DEFAULT_THRESHOLD) -> list[Detection]:
    """3x3 local maxima at or above ``threshold`` per frame and class.

    A plateau of equal maxima yields one detection at its lowest
    (range, angle) cell. Output is sorted by confidence, highest first.
    """
    from scipy.ndimage import label

    pred = np.asarray(pred, dtype=np.float64)
    if pred.ndim == 3:
        pred = pred[None]
    dets = []
    eight = np.ones((3, 3), dtype=int)
    for t in range(pred.shape[0]):
        for k in range(pred.shape[3]):
            heat = np.ascontiguousarray(pred[t, :, :, k])
            mask = kernels.local_max_mask(heat, threshold)
            if not mask.any():
                continue
            labels, n = label(mask, structure=eight)
            rows, cols = np.nonzero(labels)
            seen = set()
            # np.nonzero walks row-major, so the first cell of each label is the lowest
            for r, a in zip(rows, cols):
                lab = labels[r, a]
                if lab in seen:
                    continue
                seen.add(lab)
                dets.append(Detection(t, int(r), int(a), CLASSES[k], float(heat[r, a])))
    dets.sort(key=lambda d: (-d.confidence, d.frame, d.range_bin, d.angle_bin, d.cls.index))
    return dets


def match_detections(
    dets: Sequence[Detection],
    truth: Iterable[Center],
    thresholds: dict[TargetClass, float] | None = None,
) -> MatchResult:
    """Greedy matching in descending confidence.

    Each detection takes the nearest unmatched ground truth of its class and
    frame whose Euclidean bin distance is below the class threshold.
    """
    thresholds = {**DEFAULT_DISTANCE, **(thresholds or {})}
    truth = list(truth)
    used = [False] * len(truth)
    result = MatchResult()
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].confidence, i))
    for i in order:
        d = dets[i]
        best = None
        for j, g in enumerate(truth):
            if used[j] or g.cls != d.cls or g.t != d.frame:
                continue
            dist = math.hypot(d.range_bin - g.r, d.angle_bin - g.theta)
            if dist < thresholds[d.cls] and (best is None or dist < best[0]):
                best = (dist, j)
        if best is None:
            result.fp[d.cls] += 1
        else:
            used[best[1]] = True
            result.tp[d.cls] += 1
            result.pairs.append((d, truth[best[1]], best[0]))
    for j, g in enumerate(truth):
        if not used[j]:
            result.fn[g.cls] += 1
    return result


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def precision_recall(m: MatchResult, cls: TargetClass | None = None) -> tuple[float, float]:
    """Precision and recall, pooled over classes unless ``cls`` is given; 0/0 is 0."""
    classes = CLASSES if cls is None else (TargetClass.parse(cls),)
    tp = sum(m.tp[c] for c in classes)
    fp = sum(m.fp[c] for c in classes)
    fn = sum(m.fn[c] for c in classes)
    return _ratio(tp, tp + fp), _ratio(tp, tp + fn)


def average_precision_recall(results: Sequence[MatchResult]) -> tuple[float, float]:
    """Mean over the classes present in each scene, then mean over scenes.

    A class counts as present when it has any ground truth or detection;
    scenes with neither are skipped.
    """
    per_scene = []
    for m in results:
        classes = m.present_classes()
        if not classes:
            continue
        pr = [precision_recall(m, c) for c in classes]
        per_scene.append((sum(p for p, _ in pr) / len(pr), sum(r for _, r in pr) / len(pr)))
    if not per_scene:
        return 0.0, 0.0
    return (sum(p for p, _ in per_scene) / len(per_scene), sum(r for _, r in per_scene) / len(per_scene))


def evaluate(pred: np.ndarray, truth: Iterable[Center], threshold: float = DEFAULT_THRESHOLD,
             thresholds: dict[TargetClass, float] | None = None) -> MatchResult:
    return match_detections(extract_detections(pred, threshold), truth, thresholds)


def metrics_document(results: Sequence[MatchResult]) -> dict:
    total = MatchResult()
    for m in results:
        total = total.merge(m)
    per_class = {}
    for c in CLASSES:
        p, r = precision_recall(total, c)
        per_class[c.value] = {"tp": total.tp[c], "fp": total.fp[c], "fn": total.fn[c],
                              "precision": p, "recall": r}
    ap, ar = average_precision_recall(results)
    return {"per_class": per_class, "AP": ap, "AR": ar}


def metrics_csv(doc: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["class", "tp", "fp", "fn", "precision", "recall"])
    for name, row in doc["per_class"].items():
        writer.writerow([name, row["tp"], row["fp"], row["fn"], f"{row['precision']:.6f}", f"{row['recall']:.6f}"])
    writer.writerow(["AP", "", "", "", f"{doc['AP']:.6f}", ""])
    writer.writerow(["AR", "", "", "", "", f"{doc['AR']:.6f}"])
    return buf.getvalue()
