"""Iterative confidence-propagation clustering driver.

Each round freezes the current scores, computes a positive message
(weaker-friends reward) and a negative message (strongest-penalizer
suppression) for every box from that snapshot, applies both at once,
then raises the overlap threshold. Scores provably stay in [0, 1]
without clamping: rewards are normalized by (1 - score) and penalties
never exceed the score itself. Box coordinates and classes are never
modified; only confidences move.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigurationError
from .geometry import BBox, boxes_to_arrays
from .geometry import iou as box_iou
from .messages import SuppressionMatrix
from .validation import check_boxes


def default_alpha_schedule(iterations: int) -> tuple[float, ...]:
    """Strongest-suppressor first round, nearest-suppressor afterwards."""
    if iterations <= 0:
        return ()
    return (1.0,) + (0.0,) * (iterations - 1)


@dataclass(frozen=True)
class ClusterConfig:
    """All clustering hyperparameters.

    theta0 is the starting overlap threshold; it grows by lambda_ each
    round. theta_n gates which overlaps count as weaker friends, zeta
    caps how often one box may suppress another, and alpha_schedule
    blends score ratio vs. overlap when picking the suppressor (one
    entry per round).
    """

    theta0: float = 0.6
    lambda_: float = 0.2
    theta_n: float = 0.8
    zeta: int = 2
    iterations: int = 2
    alpha_schedule: tuple[float, ...] = (1.0, 0.0)
    min_score: float = 0.001
    class_aware: bool = True
    sort_output: bool = True

    def validate(self) -> None:
        if not 0.0 <= self.theta0 < 1.0:
            raise ConfigurationError(f"theta0 must be in [0, 1), got {self.theta0}")
        if self.lambda_ < 0.0:
            raise ConfigurationError(f"lambda_ must be >= 0, got {self.lambda_}")
        if not self.theta0 < self.theta_n <= 1.0:
            raise ConfigurationError(
                f"theta_n must be in (theta0, 1], got {self.theta_n} with theta0={self.theta0}"
            )
        if int(self.zeta) != self.zeta or not 1 <= self.zeta <= 32767:
            # upper bound keeps suppression counts within their int16 store
            raise ConfigurationError(f"zeta must be a positive integer <= 32767, got {self.zeta}")
        if int(self.iterations) != self.iterations or self.iterations < 0:
            raise ConfigurationError(
                f"iterations must be a non-negative integer, got {self.iterations}"
            )
        if len(self.alpha_schedule) != self.iterations:
            raise ConfigurationError(
                f"alpha_schedule has {len(self.alpha_schedule)} entries "
                f"for {self.iterations} iterations"
            )
        if any(not 0.0 <= a <= 1.0 for a in self.alpha_schedule):
            raise ConfigurationError(f"alpha values must lie in [0, 1]: {self.alpha_schedule}")
        if not 0.0 <= self.min_score <= 1.0:
            raise ConfigurationError(f"min_score must be in [0, 1], got {self.min_score}")
        if self.iterations >= 1:
            final_theta = self.theta0 + (self.iterations - 1) * self.lambda_
            if not final_theta < 1.0:
                raise ConfigurationError(
                    f"theta0 + (iterations-1)*lambda_ = {final_theta} must stay below 1"
                )


# Above this size the dense IOU cache stops paying for itself (the
# first full-matrix sweep is page-fault bound) and the cache-free
# pair-scan kernel takes over. Both paths are bit-identical.
DENSE_CACHE_MAX_BOXES = 4096


def propagate_scores(corners: np.ndarray, scores: np.ndarray, classes: np.ndarray,
                     config: ClusterConfig, threads: int | None = None,
                     dense_cache: bool | None = None) -> np.ndarray:
    """Array-level core: run all rounds and return the updated scores.

    No filtering or sorting happens here; index order is preserved.
    Results are identical for any thread count and for either value of
    ``dense_cache`` (by default the dense pairwise-IOU cache is used up
    to :data:`DENSE_CACHE_MAX_BOXES` boxes).
    """
    config.validate()
    n = len(scores)
    out = np.array(scores, dtype=np.float64, copy=True)
    if n == 0 or config.iterations == 0:
        return out
    if dense_cache is None:
        dense_cache = n <= DENSE_CACHE_MAX_BOXES
    corners = np.ascontiguousarray(corners, dtype=np.float64)
    classes = np.ascontiguousarray(classes, dtype=np.int64)
    iou = None
    if dense_cache:
        iou = _kernels.pairwise_iou_matrix(corners, classes, config.class_aware)
    sup = SuppressionMatrix(n)
    with _kernels.thread_count(threads):
        for t in range(config.iterations):
            theta_t = config.theta0 + t * config.lambda_
            if dense_cache:
                m_pos, m_neg, suppressor = _kernels.message_pass(
                    iou, out, sup.received, theta_t,
                    config.theta_n, config.zeta, config.alpha_schedule[t],
                )
            else:
                m_pos, m_neg, suppressor = _kernels.message_pass_pairs(
                    corners, classes, config.class_aware, out, sup.received,
                    theta_t, config.theta_n, config.zeta, config.alpha_schedule[t],
                )
            out = (out + m_pos) - m_neg
            assert out.min() >= 0.0 and out.max() <= 1.0, \
                "propagated score left [0, 1]; update bounds violated"
            sup.apply_suppressors(suppressor)
    return out


def cp_cluster(boxes: list[BBox], config: ClusterConfig | None = None,
               threads: int | None = None) -> list[BBox]:
    """Re-score a detection set by confidence propagation.

    Returns the same boxes (coordinates, classes, original indices
    preserved) with updated scores, minus those that end below
    ``config.min_score``. With ``sort_output`` the survivors come back
    in descending score order, ties broken by original position.
    """
    config = config or ClusterConfig()
    config.validate()
    if not boxes:
        return []
    check_boxes(boxes)
    corners, scores, classes = boxes_to_arrays(boxes)
    final = propagate_scores(corners, scores, classes, config, threads)
    kept = np.nonzero(final >= config.min_score)[0]
    if config.sort_output and len(kept):
        kept = kept[np.lexsort((kept, -final[kept]))]
    out = []
    for pos in kept:
        pos = int(pos)
        b = boxes[pos]
        out.append(BBox(b.x1, b.y1, b.x2, b.y2, float(final[pos]), b.class_id,
                        index=b.index if b.index is not None else pos))
    return out


def reference_cp_cluster(boxes: list[BBox], config: ClusterConfig | None = None) -> list[BBox]:
    """Deliberately naive single-threaded oracle for :func:`cp_cluster`.

    Recomputes every pairwise IOU on the fly each round (no cache, no
    kernels) and scans all pairs per box. Semantics are identical to
    the optimized path; intended for tests and differential fuzzing on
    small sets.
    """
    config = config or ClusterConfig()
    config.validate()
    n = len(boxes)
    if n == 0:
        return []
    scores = [float(b.score) for b in boxes]
    sup_counts: dict[tuple[int, int], int] = {}
    for t in range(config.iterations):
        theta = config.theta0 + t * config.lambda_
        alpha = config.alpha_schedule[t]
        snap = list(scores)
        m_pos = [0.0] * n
        m_neg = [0.0] * n
        chosen = [-1] * n
        for i in range(n):
            bi = boxes[i]
            si = snap[i]
            q = 0
            wmax = 0.0
            best_t = -math.inf
            best_j = -1
            for j in range(n):
                if j == i:
                    continue
                bj = boxes[j]
                if config.class_aware and bj.class_id != bi.class_id:
                    continue
                v = box_iou(bi, bj)
                if v <= theta:
                    continue
                sj = snap[j]
                if sj > si or (sj == si and j < i):
                    if sup_counts.get((j, i), 0) < config.zeta:
                        if alpha == 0.0:
                            impact = v / theta if theta > 0.0 else math.inf
                        elif si == 0.0:
                            impact = math.inf
                        elif alpha == 1.0:
                            impact = sj / si
                        else:
                            norm = v / theta if theta > 0.0 else math.inf
                            impact = alpha * (sj / si) + (1.0 - alpha) * norm
                        if impact > best_t:
                            best_t = impact
                            best_j = j
                elif v > config.theta_n:
                    q += 1
                    if sj > wmax:
                        wmax = sj
            m_pos[i] = (q / (q + 1.0)) * (1.0 - si) * wmax
            if best_j >= 0:
                m_neg[i] = si * box_iou(bi, boxes[best_j])
                chosen[i] = best_j
        for i in range(n):
            scores[i] = (snap[i] + m_pos[i]) - m_neg[i]
            assert 0.0 <= scores[i] <= 1.0, \
                "propagated score left [0, 1]; update bounds violated"
        for i in range(n):
            if chosen[i] >= 0:
                sup_counts[(chosen[i], i)] = sup_counts.get((chosen[i], i), 0) + 1
    kept = [p for p in range(n) if scores[p] >= config.min_score]
    if config.sort_output:
        kept.sort(key=lambda p: (-scores[p], p))
    return [
        BBox(boxes[p].x1, boxes[p].y1, boxes[p].x2, boxes[p].y2, scores[p],
             boxes[p].class_id, index=boxes[p].index if boxes[p].index is not None else p)
        for p in kept
    ]
