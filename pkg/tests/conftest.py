"""Shared fixtures and fuzz-input builders."""

from __future__ import annotations

import numpy as np
import pytest

from cpcluster import _kernels
from cpcluster.geometry import BBox
from cpcluster.io import SynthSpec, generate_corpus, parse_detections, parse_ground_truth


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the numba kernels once before anything is timed."""
    corners = np.array([[0.0, 0.0, 10.0, 10.0], [1.0, 1.0, 9.0, 9.0]])
    classes = np.zeros(2, dtype=np.int64)
    scores = np.array([0.9, 0.5])
    iou = _kernels.pairwise_iou_matrix(corners, classes, True)
    received = np.zeros((2, 2), dtype=np.int16)
    _kernels.message_pass(iou, scores, received, 0.5, 0.8, 2, 1.0)
    _kernels.message_pass_pairs(corners, classes, True, scores, received, 0.5, 0.8, 2, 1.0)
    _kernels.greedy_nms_keep(corners, classes, np.array([0, 1], dtype=np.int64), 0.5, True)


def random_box_set(rng: np.random.Generator, max_boxes: int = 50,
                   max_classes: int = 3) -> list[BBox]:
    """Mixed-density detection set: clustered boxes, strays, score ties,
    exact duplicates, and occasional zero-area boxes."""
    n = int(rng.integers(0, max_boxes + 1))
    n_anchor = max(1, n // 6)
    anchors = rng.uniform(0.0, 400.0, (n_anchor, 2))
    boxes: list[BBox] = []
    for k in range(n):
        cls = int(rng.integers(0, max_classes))
        if rng.random() < 0.75:
            ax, ay = anchors[int(rng.integers(0, n_anchor))]
            w = float(rng.uniform(30.0, 90.0))
            h = float(rng.uniform(30.0, 90.0))
            cx = float(ax + rng.normal(0.0, 9.0))
            cy = float(ay + rng.normal(0.0, 9.0))
            x1, y1, x2, y2 = cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2
        else:
            x1 = float(rng.uniform(0.0, 400.0))
            y1 = float(rng.uniform(0.0, 400.0))
            w = 0.0 if rng.random() < 0.04 else float(rng.uniform(0.0, 80.0))
            h = float(rng.uniform(0.0, 80.0))
            x2, y2 = x1 + w, y1 + h
        score = float(rng.uniform(0.0, 1.0))
        if rng.random() < 0.12:
            score = round(score, 1)
        boxes.append(BBox(x1, y1, x2, y2, score, cls, index=k))
    if n >= 2 and rng.random() < 0.3:
        # exact duplicate pair (possibly with equal score): stresses
        # index tie-breaks and the IOU == 1 suppression path
        src = boxes[int(rng.integers(0, n))]
        at = int(rng.integers(0, n))
        dup_score = src.score if rng.random() < 0.5 else boxes[at].score
        boxes[at] = BBox(src.x1, src.y1, src.x2, src.y2, dup_score,
                         src.class_id, index=at)
    return boxes


@pytest.fixture(scope="session")
def seed42_corpus(tmp_path_factory):
    """Default-spec synthetic corpus (seed 42), in memory and on disk."""
    spec = SynthSpec()
    records, gt_doc = generate_corpus(spec)
    root = tmp_path_factory.mktemp("corpus42")
    dets_path = root / "dets.json"
    gt_path = root / "gt.json"
    from cpcluster.io import save_json
    save_json(records, dets_path)
    save_json(gt_doc, gt_path)
    return {
        "spec": spec,
        "records": records,
        "gt_doc": gt_doc,
        "dets": parse_detections(records),
        "gt": parse_ground_truth(gt_doc),
        "dets_path": dets_path,
        "gt_path": gt_path,
    }
