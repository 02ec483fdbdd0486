"""Overlap graph over a detection set.

Boxes are nodes; an undirected edge connects two same-class boxes
whose IOU strictly exceeds the threshold theta. The dense pairwise IOU
matrix is computed once per detection set and reused when the
threshold grows, so re-thresholding never recomputes geometry.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._kernels import pairwise_iou_matrix
from .errors import ConfigurationError
from .geometry import BBox, boxes_to_arrays


@dataclass(frozen=True)
class NeighborGraph:
    """Per-class adjacency with a cached pairwise IOU matrix.

    ``iou`` is symmetric with cross-class entries forced to 0 when the
    graph is class-aware, so the edge test reduces to iou > theta.
    Instances are immutable and safe to share across threads.
    """

    theta: float
    iou: np.ndarray = field(repr=False)
    classes: np.ndarray = field(repr=False)
    class_aware: bool = True

    @property
    def n(self) -> int:
        return len(self.classes)

    def neighbors(self, i: int) -> np.ndarray:
        """Ascending indices j with an edge to i (iou > theta, strict)."""
        mask = self.iou[i] > self.theta
        mask[i] = False
        return np.nonzero(mask)[0]

    @property
    def adjacency(self) -> list[np.ndarray]:
        return [self.neighbors(i) for i in range(self.n)]

    def edges(self) -> set[tuple[int, int]]:
        """Edge set as (low, high) index pairs; intended for tests."""
        out = set()
        for i in range(self.n):
            for j in self.neighbors(i):
                if i < j:
                    out.add((i, int(j)))
        return out


def build_graph(boxes: list[BBox], theta: float, class_aware: bool = True) -> NeighborGraph:
    """Materialize the overlap graph for a detection set.

    When ``class_aware`` is off all boxes count as one class. Empty
    input yields an empty graph.
    """
    if not 0.0 <= theta < 1.0:
        raise ConfigurationError(f"theta must be in [0, 1), got {theta}")
    corners, _, classes = boxes_to_arrays(boxes)
    return build_graph_arrays(corners, classes, theta, class_aware)


def build_graph_arrays(corners: np.ndarray, classes: np.ndarray, theta: float,
                       class_aware: bool = True) -> NeighborGraph:
    iou = pairwise_iou_matrix(
        np.ascontiguousarray(corners, dtype=np.float64),
        np.ascontiguousarray(classes, dtype=np.int64),
        class_aware,
    )
    iou.setflags(write=False)
    return NeighborGraph(theta=theta, iou=iou, classes=classes, class_aware=class_aware)


def rebuild_with_theta(graph: NeighborGraph, theta: float) -> NeighborGraph:
    """Re-threshold adjacency from the cached IOU matrix (no geometry redone)."""
    if theta < graph.theta:
        raise ConfigurationError(
            f"new theta {theta} must be >= current theta {graph.theta}"
        )
    return replace(graph, theta=theta)
