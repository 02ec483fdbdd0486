"""Reference post-processing baselines: hard NMS and Soft-NMS variants.

These are the greedy, inherently sequential methods the propagation
cluster is compared against. All of them are pure functions with
deterministic index tie-breaks and never touch box coordinates.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .errors import ConfigurationError
from .geometry import BBox, boxes_to_arrays


def nms(boxes: list[BBox], theta: float = 0.6, class_aware: bool = True) -> list[BBox]:
    """Greedy hard suppression.

    Repeatedly keeps the highest-scored remaining box (ties break to
    the lower index) and discards same-class boxes overlapping it with
    IOU strictly above ``theta``. Kept boxes return in descending
    score order with their original scores.
    """
    n = len(boxes)
    if n == 0:
        return []
    corners, scores, classes = boxes_to_arrays(boxes)
    order = np.lexsort((np.arange(n), -scores))
    keep = _kernels.greedy_nms_keep(corners, classes, order, theta, class_aware)
    return [boxes[int(i)] for i in order if keep[int(i)]]


def soft_nms(boxes: list[BBox], theta: float = 0.6, mode: str = "linear",
             sigma: float = 0.5, score_thresh: float = 0.001,
             class_aware: bool = True) -> list[BBox]:
    """Score-decay suppression instead of hard removal.

    Each step selects the highest currently-scored remaining box, then
    decays every remaining same-class box: linear mode multiplies by
    (1 - IOU) when IOU > theta, gaussian mode by exp(-IOU^2 / sigma)
    unconditionally. Boxes whose score falls below ``score_thresh``
    drop out. Output follows selection order.
    """
    _check_soft_params(mode, sigma)
    return _soft_nms_loop(boxes, theta, mode, sigma, score_thresh, class_aware,
                          theta_n=None)


def snms_wfa(boxes: list[BBox], theta: float = 0.6, theta_n: float = 0.8,
             mode: str = "linear", sigma: float = 0.5, score_thresh: float = 0.001,
             class_aware: bool = True) -> list[BBox]:
    """Soft-NMS with weaker-friends amplification at selection time.

    Identical to :func:`soft_nms` except that each selected box is
    first boosted by the positive message computed over its current
    weaker friends (remaining same-class boxes with IOU > theta_n and
    lower score, index tie-break), before those friends get decayed.
    """
    _check_soft_params(mode, sigma)
    if theta_n <= theta:
        raise ConfigurationError(f"theta_n ({theta_n}) must exceed theta ({theta})")
    return _soft_nms_loop(boxes, theta, mode, sigma, score_thresh, class_aware,
                          theta_n=theta_n)


def _soft_nms_loop(boxes, theta, mode, sigma, score_thresh, class_aware, theta_n):
    n = len(boxes)
    if n == 0:
        return []
    corners, scores, classes = boxes_to_arrays(boxes)
    areas = (corners[:, 2] - corners[:, 0]) * (corners[:, 3] - corners[:, 1])
    active = np.ones(n, dtype=bool)
    picked: list[int] = []
    indices = np.arange(n)
    while True:
        candidates = np.where(active, scores, -np.inf)
        m = int(candidates.argmax())
        if not active[m]:
            break
        active[m] = False
        same = active & (classes == classes[m]) if class_aware else active.copy()
        js = indices[same]
        v = _iou_row(corners, areas, m, js) if len(js) else None
        if theta_n is not None and len(js):
            sj = scores[js]
            friend = (v > theta_n) & ((sj < scores[m]) | ((sj == scores[m]) & (js > m)))
            q = int(friend.sum())
            if q:
                wmax = float(sj[friend].max())
                scores[m] = scores[m] + (q / (q + 1.0)) * (1.0 - scores[m]) * wmax
        if scores[m] >= score_thresh:
            picked.append(m)
        if len(js):
            if mode == "linear":
                rescored = np.where(v > theta, scores[js] * (1.0 - v), scores[js])
            else:
                rescored = scores[js] * np.exp(-(v * v) / sigma)
            scores[js] = rescored
            active[js[rescored < score_thresh]] = False
    return [
        BBox(boxes[k].x1, boxes[k].y1, boxes[k].x2, boxes[k].y2, float(scores[k]),
             boxes[k].class_id, index=boxes[k].index if boxes[k].index is not None else k)
        for k in picked
    ]


def _iou_row(corners, areas, m, js):
    iw = np.minimum(corners[m, 2], corners[js, 2]) - np.maximum(corners[m, 0], corners[js, 0])
    ih = np.minimum(corners[m, 3], corners[js, 3]) - np.maximum(corners[m, 1], corners[js, 1])
    valid = (iw > 0.0) & (ih > 0.0)
    inter = np.where(valid, iw * ih, 0.0)
    union = areas[m] + areas[js] - inter
    return np.where(valid & (union > 0.0), inter / np.where(union > 0.0, union, 1.0), 0.0)


def _check_soft_params(mode: str, sigma: float) -> None:
    if mode not in ("linear", "gaussian"):
        raise ConfigurationError(f"mode must be 'linear' or 'gaussian', got {mode!r}")
    if mode == "gaussian" and sigma <= 0.0:
        raise ConfigurationError(f"sigma must be > 0 for gaussian mode, got {sigma}")
