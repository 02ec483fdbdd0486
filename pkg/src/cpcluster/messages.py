"""Positive and negative confidence messages for one update round.

All quantities are computed from a frozen score snapshot, so the
per-box computations are order-free: any parallel schedule produces
the same result as a sequential sweep.

Ordering convention used throughout: box j is *stronger* than box i
iff score[j] > score[i], or the scores are equal and j has the lower
index. Exactly one of two distinct boxes is stronger, which keeps
duplicate detections suppressible deterministically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .graph import NeighborGraph


@dataclass(frozen=True)
class ScoreSnapshot:
    """Scores frozen at the start of an update round."""

    scores: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64)
        object.__setattr__(self, "scores", s)
        if len(s) and (s.min() < 0.0 or s.max() > 1.0):
            raise ValueError("snapshot scores must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.scores)


class SuppressionMatrix:
    """Counts how many rounds box j has been chosen to suppress box i.

    Entries only ever increment and are capped implicitly by the round
    count. Stored transposed (receiver-major) so eligibility scans walk
    contiguous memory.
    """

    def __init__(self, n: int):
        self._received = np.zeros((n, n), dtype=np.int16)

    @property
    def n(self) -> int:
        return len(self._received)

    @property
    def received(self) -> np.ndarray:
        """Internal layout: received[i, j] = times j suppressed i."""
        return self._received

    def count(self, j: int, i: int) -> int:
        """Times box j has suppressed box i."""
        return int(self._received[i, j])

    def counts(self) -> np.ndarray:
        """Suppressor-major copy: counts()[j, i] = count(j, i)."""
        return self._received.T.copy()

    def increment(self, j: int, i: int) -> None:
        if j == i:
            raise ValueError("a box cannot suppress itself")
        self._received[i, j] += 1

    def apply_suppressors(self, suppressor: np.ndarray) -> None:
        """Record one suppression per box with a non-negative suppressor."""
        i_idx = np.nonzero(suppressor >= 0)[0]
        self._received[i_idx, suppressor[i_idx]] += 1


@dataclass(frozen=True)
class MessageUpdate:
    """Per-box message vectors for one round.

    ``suppressor[i]`` is -1 when box i had no eligible stronger
    neighbor. A suppressor can be present with m_neg[i] == 0 only in
    the degenerate case score[i] == 0.
    """

    m_pos: np.ndarray
    m_neg: np.ndarray
    suppressor: np.ndarray = field(repr=False)


def weaker_friends(i: int, graph: NeighborGraph, snapshot: ScoreSnapshot,
                   theta_n: float) -> set[int]:
    """Neighbors of i that are weaker and overlap it beyond theta_n."""
    s = snapshot.scores
    si = s[i]
    out = set()
    for j in graph.neighbors(i):
        j = int(j)
        if graph.iou[i, j] > theta_n and _weaker(s[j], j, si, i):
            out.add(j)
    return out


def positive_message(i: int, friends: set[int], snapshot: ScoreSnapshot) -> float:
    """Confidence reward from a weaker-friend set; 0 when it is empty.

    Scales with both the friend count and the strongest friend, and is
    normalized by (1 - score) so the updated score cannot exceed 1.
    """
    q = len(friends)
    if q == 0:
        return 0.0
    s = snapshot.scores
    wmax = max(float(s[j]) for j in friends)
    return (q / (q + 1.0)) * (1.0 - float(s[i])) * wmax


def stronger_neighbors(i: int, graph: NeighborGraph, snapshot: ScoreSnapshot) -> set[int]:
    """Neighbors of i that are stronger under the total order."""
    s = snapshot.scores
    si = s[i]
    return {
        int(j) for j in graph.neighbors(i)
        if _stronger(s[int(j)], int(j), si, i)
    }


def negative_impact(j: int, i: int, snapshot: ScoreSnapshot, graph: NeighborGraph,
                    alpha: float, theta: float) -> float:
    """How aggressively stronger box j penalizes box i.

    alpha = 1 ranks by score ratio, alpha = 0 by normalized overlap.
    score[i] == 0 with alpha > 0 yields +inf: j dominates maximally.
    """
    s = snapshot.scores
    return _impact_py(float(s[j]), float(s[i]), float(graph.iou[i, j]), alpha, theta)


def negative_message(i: int, graph: NeighborGraph, snapshot: ScoreSnapshot,
                     sup: SuppressionMatrix, zeta: int, alpha: float,
                     theta: float) -> tuple[float, int | None]:
    """Penalty for box i from its single most impactful eligible suppressor.

    Eligible suppressors are stronger neighbors that have suppressed i
    fewer than zeta times; ties on impact break to the lowest index.
    Returns (0, None) when nothing is eligible. The caller is
    responsible for recording the suppression via ``sup.increment``.
    """
    s = snapshot.scores
    si = float(s[i])
    best_t = -math.inf
    best_j = -1
    for j in graph.neighbors(i):
        j = int(j)
        if not _stronger(s[j], j, si, i):
            continue
        if sup.count(j, i) >= zeta:
            continue
        t = _impact_py(float(s[j]), si, float(graph.iou[i, j]), alpha, theta)
        if t > best_t:
            best_t = t
            best_j = j
    if best_j < 0:
        return 0.0, None
    return si * float(graph.iou[i, best_j]), best_j


def compute_messages(graph: NeighborGraph, snapshot: ScoreSnapshot,
                     sup: SuppressionMatrix, theta_n: float, zeta: int,
                     alpha: float, threads: int | None = None) -> MessageUpdate:
    """Vectorized message round for all boxes at once.

    Produces exactly the values the per-box operations above would:
    the kernel shares their expression order. Does not modify ``sup``.
    """
    with _kernels.thread_count(threads):
        m_pos, m_neg, suppressor = _kernels.message_pass(
            graph.iou, snapshot.scores, sup.received,
            graph.theta, theta_n, zeta, alpha,
        )
    return MessageUpdate(m_pos=m_pos, m_neg=m_neg, suppressor=suppressor)


def _stronger(sj: float, j: int, si: float, i: int) -> bool:
    return sj > si or (sj == si and j < i)


def _weaker(sj: float, j: int, si: float, i: int) -> bool:
    return sj < si or (sj == si and j > i)


def _impact_py(sj: float, si: float, v: float, alpha: float, theta: float) -> float:
    # Mirror of the kernel's _impact; keep branches in lockstep.
    if alpha == 0.0:
        return v / theta if theta > 0.0 else math.inf
    if si == 0.0:
        return math.inf
    if alpha == 1.0:
        return sj / si
    t = v / theta if theta > 0.0 else math.inf
    return alpha * (sj / si) + (1.0 - alpha) * t
