"""Axis-aligned box arithmetic: areas, intersections, IOU.

Boxes use corner format (x1, y1, x2, y2) with continuous pixel
coordinates and no "+1" inflation, matching modern detector output.
Zero-area boxes are legal; their IOU with anything is 0.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass
class BBox:
    """One candidate detection.

    ``index`` is the box's ordinal position within its detection set,
    assigned at ingestion. It never changes and serves as the
    deterministic tie-breaker everywhere scores compare equal.
    """

    x1: float
    y1: float
    x2: float
    y2: float
    score: float
    class_id: int = 0
    index: int | None = None

    def with_score(self, score: float) -> "BBox":
        return replace(self, score=score)


def area(b: BBox) -> float:
    """Area of a box; 0 for degenerate (zero-extent) boxes."""
    return (b.x2 - b.x1) * (b.y2 - b.y1)


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes, in [0, 1].

    Defined as 0 when the union area is 0 (two zero-area boxes), so no
    caller ever has to branch on degenerate input.
    """
    iw = min(a.x2, b.x2) - max(a.x1, b.x1)
    if iw <= 0.0:
        return 0.0
    ih = min(a.y2, b.y2) - max(a.y1, b.y1)
    if ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = area(a) + area(b) - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def boxes_to_arrays(boxes: list[BBox]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split a box list into (n,4) corners, (n,) scores, (n,) class ids."""
    n = len(boxes)
    corners = np.empty((n, 4), dtype=np.float64)
    scores = np.empty(n, dtype=np.float64)
    classes = np.empty(n, dtype=np.int64)
    for k, b in enumerate(boxes):
        corners[k, 0] = b.x1
        corners[k, 1] = b.y1
        corners[k, 2] = b.x2
        corners[k, 3] = b.y2
        scores[k] = b.score
        classes[k] = b.class_id
    return corners, scores, classes


def boxes_from_arrays(
    corners: np.ndarray, scores: np.ndarray, classes: np.ndarray
) -> list[BBox]:
    """Inverse of :func:`boxes_to_arrays`; indices follow array order."""
    return [
        BBox(
            float(corners[k, 0]),
            float(corners[k, 1]),
            float(corners[k, 2]),
            float(corners[k, 3]),
            float(scores[k]),
            int(classes[k]),
            index=k,
        )
        for k in range(len(scores))
    ]


def pairwise_iou(corners: np.ndarray) -> np.ndarray:
    """Dense (n, n) IOU matrix for corner-format boxes, class-agnostic."""
    from ._kernels import pairwise_iou_matrix

    n = len(corners)
    return pairwise_iou_matrix(
        np.ascontiguousarray(corners, dtype=np.float64),
        np.zeros(n, dtype=np.int64),
        False,
    )
