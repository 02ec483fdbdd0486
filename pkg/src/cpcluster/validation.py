"""Input validation helpers for the array and object interfaces."""

from __future__ import annotations

import numpy as np

from .errors import DataFormatError
from .geometry import BBox

DETECTION_COLUMNS = ("x1", "y1", "x2", "y2", "score", "class_id")


def check_detection_array(X) -> np.ndarray:
    """Validate an (n, 6) detection array and return it as float64.

    Columns are (x1, y1, x2, y2, score, class_id). Extents must be
    non-negative, scores in [0, 1], class ids non-negative integers.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != 6:
        raise DataFormatError(
            f"expected an (n, 6) array with columns {DETECTION_COLUMNS}, got shape {X.shape}"
        )
    if len(X) == 0:
        return X
    if not np.all(np.isfinite(X)):
        raise DataFormatError("detection array contains non-finite values")
    if np.any(X[:, 2] < X[:, 0]) or np.any(X[:, 3] < X[:, 1]):
        bad = int(np.nonzero((X[:, 2] < X[:, 0]) | (X[:, 3] < X[:, 1]))[0][0])
        raise DataFormatError(f"row {bad}: negative box extent")
    if np.any(X[:, 4] < 0.0) or np.any(X[:, 4] > 1.0):
        bad = int(np.nonzero((X[:, 4] < 0.0) | (X[:, 4] > 1.0))[0][0])
        raise DataFormatError(f"row {bad}: score outside [0, 1]")
    if np.any(X[:, 5] != np.floor(X[:, 5])) or np.any(X[:, 5] < 0):
        bad = int(np.nonzero((X[:, 5] != np.floor(X[:, 5])) | (X[:, 5] < 0))[0][0])
        raise DataFormatError(f"row {bad}: class_id must be a non-negative integer")
    return X


def check_boxes(boxes: list[BBox]) -> None:
    """Validate a list of boxes against the ingestion rules."""
    for k, b in enumerate(boxes):
        if b.x2 < b.x1 or b.y2 < b.y1:
            raise DataFormatError(f"box {k}: negative extent")
        if not 0.0 <= b.score <= 1.0:
            raise DataFormatError(f"box {k}: score {b.score} outside [0, 1]")
        if b.class_id < 0:
            raise DataFormatError(f"box {k}: negative class_id")


def array_to_boxes(X: np.ndarray) -> list[BBox]:
    return [
        BBox(float(r[0]), float(r[1]), float(r[2]), float(r[3]), float(r[4]),
             int(r[5]), index=k)
        for k, r in enumerate(X)
    ]


def boxes_to_array(boxes: list[BBox]) -> np.ndarray:
    out = np.empty((len(boxes), 6), dtype=np.float64)
    for k, b in enumerate(boxes):
        out[k] = (b.x1, b.y1, b.x2, b.y2, b.score, b.class_id)
    return out
