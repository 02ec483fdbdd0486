"""Detection evaluation: greedy matching and COCO-style average precision.

Implements 101-point interpolated AP over the IOU threshold ladder
0.50:0.05:0.95, averaged per class and then per threshold. Crowd
ground truths are excluded from matching and from the ground-truth
count (a simplification of the full COCO ignore semantics, adequate
for synthetic desk-scale corpora).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import baselines
from .cluster import ClusterConfig, cp_cluster, default_alpha_schedule
from .errors import DataFormatError
from .geometry import BBox

IOU_THRESHOLDS = (0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95)
RECALL_POINTS = np.linspace(0.0, 1.0, 101)

VALID_METHODS = ("nms", "soft-nms", "snms-wfa", "cp")
_METHOD_ALIASES = {"cp-cluster": "cp", "softnms": "soft-nms", "snmswfa": "snms-wfa"}


@dataclass
class GroundTruthBox:
    x1: float
    y1: float
    x2: float
    y2: float
    class_id: int
    image_id: int
    crowd: bool = False


@dataclass
class EvalResult:
    """AP per IOU threshold plus the usual summary extracts."""

    ap_per_threshold: dict[float, float]
    map: float
    ap50: float
    ap75: float
    per_class_ap: dict[int, dict[float, float]] = field(default_factory=dict)
    counts: dict[float, dict[str, int]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "map": self.map,
            "ap50": self.ap50,
            "ap75": self.ap75,
            "ap_per_threshold": {f"{t:.2f}": ap for t, ap in self.ap_per_threshold.items()},
            "per_class": {
                str(c): {f"{t:.2f}": ap for t, ap in per_t.items()}
                for c, per_t in self.per_class_ap.items()
            },
            "counts": {f"{t:.2f}": dict(c) for t, c in self.counts.items()},
        }


def _iou_xyxy(ax1, ay1, ax2, ay2, bx1, by1, bx2, by2) -> float:
    iw = min(ax2, bx2) - max(ax1, bx1)
    if iw <= 0.0:
        return 0.0
    ih = min(ay2, by2) - max(ay1, by1)
    if ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def match_detections(dets: list[BBox], gts: list[GroundTruthBox],
                     iou_thresh: float) -> list[tuple[int, int | None]]:
    """Greedy score-ordered matching for one image and one class.

    Detections are processed in descending score order (position
    tie-break); each takes the still-unmatched ground truth with the
    highest IOU >= iou_thresh (lowest position on IOU ties). Crowd
    ground truths never match. Returns (det position, gt position or
    None) pairs in processing order.
    """
    order = sorted(range(len(dets)), key=lambda k: (-dets[k].score, k))
    taken = [False] * len(gts)
    out: list[tuple[int, int | None]] = []
    for k in order:
        d = dets[k]
        best_iou = 0.0
        best_g = -1
        for g, gt in enumerate(gts):
            if taken[g] or gt.crowd:
                continue
            v = _iou_xyxy(d.x1, d.y1, d.x2, d.y2, gt.x1, gt.y1, gt.x2, gt.y2)
            if v >= iou_thresh and v > best_iou:
                best_iou = v
                best_g = g
        if best_g >= 0:
            taken[best_g] = True
            out.append((k, best_g))
        else:
            out.append((k, None))
    return out


def average_precision(tp_ranked, num_gt: int) -> float | None:
    """101-point interpolated AP from rank-ordered TP/FP labels.

    ``tp_ranked`` must already be in descending score order. Returns
    0.0 when there are detections but no ground truth, and None when
    there is neither (the class should then be skipped entirely).
    """
    tp = np.asarray(tp_ranked, dtype=bool)
    if num_gt == 0:
        return None if len(tp) == 0 else 0.0
    if len(tp) == 0:
        return 0.0
    cum_tp = np.cumsum(tp)
    recall = cum_tp / num_gt
    precision = cum_tp / np.arange(1, len(tp) + 1)
    # Right-to-left envelope: precision at recall r is the max at recall >= r.
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, RECALL_POINTS, side="left")
    sampled = np.where(idx < len(tp), envelope[np.minimum(idx, len(tp) - 1)], 0.0)
    return float(sampled.mean())


def evaluate(dets_by_image: dict[int, list[BBox]],
             gts_by_image: dict[int, list[GroundTruthBox]]) -> EvalResult:
    """Evaluate grouped detections against grouped ground truth.

    Every detection image id must exist in the ground truth; images
    without detections are simply unmatched. Classes absent from both
    sides are skipped, classes with detections but no ground truth
    score 0.
    """
    orphans = sorted(set(dets_by_image) - set(gts_by_image))
    if orphans:
        raise DataFormatError(
            f"detection image ids missing from ground truth: {orphans}"
        )
    images = sorted(gts_by_image)
    classes: set[int] = set()
    for img in images:
        classes.update(g.class_id for g in gts_by_image[img] if not g.crowd)
        classes.update(d.class_id for d in dets_by_image.get(img, []))

    per_class_ap: dict[int, dict[float, float]] = {}
    counts = {
        t: {"detections": 0, "ground_truths": 0, "matched": 0}
        for t in IOU_THRESHOLDS
    }
    for cls in sorted(classes):
        pooled: list[tuple[float, int, int, dict[float, bool]]] = []
        num_gt = 0
        for img in images:
            dlist = [d for d in dets_by_image.get(img, []) if d.class_id == cls]
            glist = [g for g in gts_by_image[img] if g.class_id == cls and not g.crowd]
            num_gt += len(glist)
            if not dlist:
                continue
            match_at: list[dict[float, bool]] = [dict() for _ in dlist]
            for t in IOU_THRESHOLDS:
                for k, g in match_detections(dlist, glist, t):
                    match_at[k][t] = g is not None
            for k, d in enumerate(dlist):
                key = d.index if d.index is not None else k
                pooled.append((d.score, img, key, match_at[k]))
        if num_gt == 0 and not pooled:
            continue
        pooled.sort(key=lambda e: (-e[0], e[1], e[2]))
        per_t: dict[float, float] = {}
        for t in IOU_THRESHOLDS:
            tp_ranked = [e[3][t] for e in pooled]
            ap = average_precision(tp_ranked, num_gt)
            per_t[t] = 0.0 if ap is None else ap
            counts[t]["detections"] += len(pooled)
            counts[t]["ground_truths"] += num_gt
            counts[t]["matched"] += sum(tp_ranked)
        per_class_ap[cls] = per_t

    if per_class_ap:
        ap_per_threshold = {
            t: float(np.mean([per_t[t] for per_t in per_class_ap.values()]))
            for t in IOU_THRESHOLDS
        }
    else:
        ap_per_threshold = {t: 0.0 for t in IOU_THRESHOLDS}
    mean_ap = float(np.mean(list(ap_per_threshold.values())))
    return EvalResult(
        ap_per_threshold=ap_per_threshold,
        map=mean_ap,
        ap50=ap_per_threshold[0.50],
        ap75=ap_per_threshold[0.75],
        per_class_ap=per_class_ap,
        counts=counts,
    )


def make_method(name: str, params: dict | None = None):
    """Build a ``boxes -> boxes`` callable for a named method."""
    params = dict(params or {})
    name = _METHOD_ALIASES.get(name, name)
    if name not in VALID_METHODS:
        raise DataFormatError(
            f"unknown method {name!r}; valid methods: {', '.join(VALID_METHODS)}"
        )
    if name == "cp":
        threads = params.pop("threads", None)
        config = config_from_params(params)
        config.validate()
        return lambda boxes: cp_cluster(boxes, config, threads=threads)
    if name == "nms":
        theta = params.get("iou_thresh", 0.6)
        aware = params.get("class_aware", True)
        return lambda boxes: baselines.nms(boxes, theta=theta, class_aware=aware)
    baselines._check_soft_params(params.get("mode", "linear"), params.get("sigma", 0.5))
    kwargs = {
        "theta": params.get("iou_thresh", 0.6),
        "mode": params.get("mode", "linear"),
        "sigma": params.get("sigma", 0.5),
        "score_thresh": params.get("score_thresh", 0.001),
        "class_aware": params.get("class_aware", True),
    }
    if name == "soft-nms":
        return lambda boxes: baselines.soft_nms(boxes, **kwargs)
    kwargs["theta_n"] = params.get("theta_n", 0.8)
    return lambda boxes: baselines.snms_wfa(boxes, **kwargs)


def config_from_params(params: dict) -> ClusterConfig:
    """ClusterConfig from flat CLI-style parameter names."""
    iterations = int(params.get("iterations", 2))
    alpha = params.get("alpha")
    if alpha is None:
        alpha = default_alpha_schedule(iterations)
    return ClusterConfig(
        theta0=params.get("iou_thresh", 0.6),
        lambda_=params.get("lambda_", 0.2),
        theta_n=params.get("theta_n", 0.8),
        zeta=int(params.get("zeta", 2)),
        iterations=iterations,
        alpha_schedule=tuple(alpha),
        min_score=params.get("min_score", 0.001),
        class_aware=params.get("class_aware", True),
        sort_output=params.get("sort_output", True),
    )


def compare_methods(dets_by_image: dict[int, list[BBox]],
                    gts_by_image: dict[int, list[GroundTruthBox]],
                    methods: list[tuple[str, dict]]) -> list[dict]:
    """Run several methods on the same raw detections and evaluate each.

    Returns one report row per method: {method, params, map, ap50,
    ap75, per_class, wall_time_ms}. Timing covers the post-processing
    calls only, not evaluation or I/O.
    """
    rows = []
    for name, params in methods:
        apply = make_method(name, params)
        start = time.perf_counter()
        processed = {img: apply(list(boxes)) for img, boxes in dets_by_image.items()}
        wall_ms = (time.perf_counter() - start) * 1000.0
        result = evaluate(processed, gts_by_image)
        rows.append({
            "method": _METHOD_ALIASES.get(name, name),
            "params": params,
            "map": result.map,
            "ap50": result.ap50,
            "ap75": result.ap75,
            "per_class": {
                str(c): {f"{t:.2f}": ap for t, ap in per_t.items()}
                for c, per_t in result.per_class_ap.items()
            },
            "wall_time_ms": wall_ms,
        })
    return rows
