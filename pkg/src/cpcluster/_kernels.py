"""Numba kernels behind the hot paths.

Every kernel is written so that each output slot is computed
independently from inputs frozen before the call: results are
bit-identical for any thread count, and identical to the pure-Python
reference implementations (same expression order, IEEE semantics,
fastmath off).
"""

from __future__ import annotations

import contextlib
import math
import warnings

import numba
import numpy as np
from numba import get_thread_id, njit, prange

# Environmental noise on hosts with an old TBB; the fallback layers work fine.
warnings.filterwarnings("ignore", message="The TBB threading layer requires TBB version")


@njit(cache=True)
def _pair_iou(x1a, y1a, x2a, y2a, x1b, y1b, x2b, y2b, area_a, area_b):
    # Same expression order as geometry.iou so both paths round identically.
    iw = min(x2a, x2b) - max(x1a, x1b)
    if iw <= 0.0:
        return 0.0
    ih = min(y2a, y2b) - max(y1a, y1b)
    if ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = area_a + area_b - inter
    if union <= 0.0:
        return 0.0
    return inter / union


@njit(cache=True)
def _split_columns(corners):
    n = corners.shape[0]
    x1 = np.empty(n, dtype=np.float64)
    y1 = np.empty(n, dtype=np.float64)
    x2 = np.empty(n, dtype=np.float64)
    y2 = np.empty(n, dtype=np.float64)
    areas = np.empty(n, dtype=np.float64)
    for i in range(n):
        x1[i] = corners[i, 0]
        y1[i] = corners[i, 1]
        x2[i] = corners[i, 2]
        y2[i] = corners[i, 3]
        areas[i] = (x2[i] - x1[i]) * (y2[i] - y1[i])
    return x1, y1, x2, y2, areas


@njit(cache=True)
def _interleaved_order(n):
    # Upper-triangle row i holds n-1-i pairs; pairing leading and
    # trailing rows keeps statically chunked workers balanced.
    order = np.empty(n, dtype=np.int64)
    for band in range((n + 1) // 2):
        order[2 * band] = band
        tail = n - 1 - band
        if tail != band:
            order[2 * band + 1] = tail
    return order


@njit(cache=True, parallel=True)
def _pairwise_iou_matrix(corners, classes, class_aware, out):
    n = corners.shape[0]
    x1, y1, x2, y2, areas = _split_columns(corners)
    # out arrives zero-filled; only overlapping same-class pairs are
    # stored, so untouched zero pages stay copy-on-write (cheap to read).
    # Rows cover the upper triangle only (mirrored on store); every
    # cell is written at most once, keeping any schedule bit-identical.
    row_order = _interleaved_order(n)
    for p in prange(n):
        i = row_order[p]
        xi1 = x1[i]
        yi1 = y1[i]
        xi2 = x2[i]
        yi2 = y2[i]
        area_i = areas[i]
        cls_i = classes[i]
        row = out[i]
        row[i] = _pair_iou(xi1, yi1, xi2, yi2, xi1, yi1, xi2, yi2,
                           area_i, area_i)
        for j in range(i + 1, n):
            iw = min(xi2, x2[j]) - max(xi1, x1[j])
            ih = min(yi2, y2[j]) - max(yi1, y1[j])
            if iw > 0.0 and ih > 0.0:
                if class_aware and cls_i != classes[j]:
                    continue
                inter = iw * ih
                union = area_i + areas[j] - inter
                if union > 0.0:
                    v = inter / union
                    row[j] = v
                    out[j, i] = v


@njit(cache=True)
def _impact(sj, si, v, alpha, theta):
    # Blend of score ratio and threshold-normalized overlap; si == 0 with
    # alpha > 0 means the stronger box dominates unboundedly.
    if alpha == 0.0:
        return v / theta if theta > 0.0 else math.inf
    if si == 0.0:
        return math.inf
    if alpha == 1.0:
        return sj / si
    t = v / theta if theta > 0.0 else math.inf
    return alpha * (sj / si) + (1.0 - alpha) * t


@njit(cache=True, parallel=True)
def _message_pass(iou, scores, received, theta, theta_n, zeta, alpha,
                  m_pos, m_neg, suppressor):
    n = scores.shape[0]
    for i in prange(n):
        row = iou[i]
        rec = received[i]
        si = scores[i]
        q = 0
        wmax = 0.0
        best_t = -math.inf
        best_j = -1
        for j in range(n):
            v = row[j]
            if v <= theta or j == i:
                continue
            sj = scores[j]
            if sj > si or (sj == si and j < i):
                # j is a stronger neighbor; eligible while under the cap.
                if rec[j] < zeta:
                    t = _impact(sj, si, v, alpha, theta)
                    if t > best_t:
                        best_t = t
                        best_j = j
            elif v > theta_n:
                q += 1
                if sj > wmax:
                    wmax = sj
        m_pos[i] = (q / (q + 1.0)) * (1.0 - si) * wmax
        if best_j >= 0:
            m_neg[i] = si * row[best_j]
            suppressor[i] = best_j
        else:
            m_neg[i] = 0.0
            suppressor[i] = -1


@njit(cache=True, parallel=True)
def _message_pass_pairs(corners, classes, class_aware, scores, received,
                        theta, theta_n, zeta, alpha,
                        q_part, wmax_part, bestt_part, bestj_part,
                        m_pos, m_neg, suppressor):
    # Cache-free variant: recomputes overlaps over the upper triangle
    # and accumulates per-worker partials. Friend counts are exact
    # integer sums and the suppressor choice is an argmax under the
    # total order (impact, -index), so the merged result is
    # bit-identical for any pair-to-worker assignment.
    n = scores.shape[0]
    nw = q_part.shape[0]
    x1, y1, x2, y2, areas = _split_columns(corners)
    for w in range(nw):
        for i in range(n):
            q_part[w, i] = 0
            wmax_part[w, i] = 0.0
            bestt_part[w, i] = -math.inf
            bestj_part[w, i] = -1
    row_order = _interleaved_order(n)
    for p in prange(n):
        w = get_thread_id()
        i = row_order[p]
        xi1 = x1[i]
        yi1 = y1[i]
        xi2 = x2[i]
        yi2 = y2[i]
        area_i = areas[i]
        cls_i = classes[i]
        si = scores[i]
        for j in range(i + 1, n):
            iw = min(xi2, x2[j]) - max(xi1, x1[j])
            ih = min(yi2, y2[j]) - max(yi1, y1[j])
            if iw > 0.0 and ih > 0.0:
                if class_aware and cls_i != classes[j]:
                    continue
                inter = iw * ih
                union = area_i + areas[j] - inter
                if union <= 0.0:
                    continue
                v = inter / union
                if v <= theta:
                    continue
                sj = scores[j]
                if sj > si:
                    # j stronger: candidate suppressor of i, and i is a
                    # weaker-friend candidate for j.
                    if received[i, j] < zeta:
                        t = _impact(sj, si, v, alpha, theta)
                        if t > bestt_part[w, i] or (
                                t == bestt_part[w, i] and j < bestj_part[w, i]):
                            bestt_part[w, i] = t
                            bestj_part[w, i] = j
                    if v > theta_n:
                        q_part[w, j] += 1
                        if si > wmax_part[w, j]:
                            wmax_part[w, j] = si
                else:
                    # i stronger (score tie breaks to the lower index i).
                    if received[j, i] < zeta:
                        t = _impact(si, sj, v, alpha, theta)
                        if t > bestt_part[w, j] or (
                                t == bestt_part[w, j] and i < bestj_part[w, j]):
                            bestt_part[w, j] = t
                            bestj_part[w, j] = i
                    if v > theta_n:
                        q_part[w, i] += 1
                        if sj > wmax_part[w, i]:
                            wmax_part[w, i] = sj
    for i in prange(n):
        q = 0
        wmax = 0.0
        best_t = -math.inf
        best_j = -1
        for w in range(nw):
            q += q_part[w, i]
            if wmax_part[w, i] > wmax:
                wmax = wmax_part[w, i]
            pj = bestj_part[w, i]
            if pj >= 0:
                pt = bestt_part[w, i]
                if best_j < 0 or pt > best_t or (pt == best_t and pj < best_j):
                    best_t = pt
                    best_j = pj
        m_pos[i] = (q / (q + 1.0)) * (1.0 - scores[i]) * wmax
        if best_j >= 0:
            m_neg[i] = scores[i] * _pair_iou(
                x1[i], y1[i], x2[i], y2[i],
                x1[best_j], y1[best_j], x2[best_j], y2[best_j],
                areas[i], areas[best_j],
            )
            suppressor[i] = best_j
        else:
            m_neg[i] = 0.0
            suppressor[i] = -1


@njit(cache=True)
def _greedy_nms(corners, classes, order, theta, class_aware, keep):
    n = order.shape[0]
    areas = np.empty(n, dtype=np.float64)
    for i in range(n):
        areas[i] = (corners[i, 2] - corners[i, 0]) * (corners[i, 3] - corners[i, 1])
    suppressed = np.zeros(n, dtype=np.bool_)
    for a in range(n):
        i = order[a]
        if suppressed[i]:
            continue
        keep[i] = True
        for b in range(a + 1, n):
            j = order[b]
            if suppressed[j]:
                continue
            if class_aware and classes[i] != classes[j]:
                continue
            v = _pair_iou(
                corners[i, 0], corners[i, 1], corners[i, 2], corners[i, 3],
                corners[j, 0], corners[j, 1], corners[j, 2], corners[j, 3],
                areas[i], areas[j],
            )
            if v > theta:
                suppressed[j] = True


def pairwise_iou_matrix(corners: np.ndarray, classes: np.ndarray,
                        class_aware: bool) -> np.ndarray:
    """Dense pairwise IOU; cross-class entries forced to 0 when class-aware."""
    n = corners.shape[0]
    out = np.zeros((n, n), dtype=np.float64)
    if n:
        _pairwise_iou_matrix(corners, classes, class_aware, out)
    return out


def message_pass(iou: np.ndarray, scores: np.ndarray, received: np.ndarray,
                 theta: float, theta_n: float, zeta: int, alpha: float,
                 ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One synchronous message round from a frozen score snapshot.

    Returns (m_pos, m_neg, suppressor); suppressor is -1 where no
    eligible stronger neighbor exists. ``received[i, j]`` counts how
    often j has suppressed i in previous rounds and is not modified.
    """
    n = scores.shape[0]
    m_pos = np.zeros(n, dtype=np.float64)
    m_neg = np.zeros(n, dtype=np.float64)
    suppressor = np.full(n, -1, dtype=np.int64)
    if n:
        _message_pass(iou, scores, received, theta, theta_n, zeta, alpha,
                      m_pos, m_neg, suppressor)
    return m_pos, m_neg, suppressor


def message_pass_pairs(corners: np.ndarray, classes: np.ndarray, class_aware: bool,
                       scores: np.ndarray, received: np.ndarray,
                       theta: float, theta_n: float, zeta: int, alpha: float,
                       ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cache-free equivalent of :func:`message_pass` for large sets.

    Recomputes pairwise overlaps instead of reading a dense matrix;
    the results are bit-identical to the dense path.
    """
    n = scores.shape[0]
    m_pos = np.zeros(n, dtype=np.float64)
    m_neg = np.zeros(n, dtype=np.float64)
    suppressor = np.full(n, -1, dtype=np.int64)
    if n:
        nw = numba.get_num_threads()
        q_part = np.zeros((nw, n), dtype=np.int64)
        wmax_part = np.zeros((nw, n), dtype=np.float64)
        bestt_part = np.zeros((nw, n), dtype=np.float64)
        bestj_part = np.zeros((nw, n), dtype=np.int64)
        _message_pass_pairs(corners, classes, class_aware, scores, received,
                            theta, theta_n, zeta, alpha,
                            q_part, wmax_part, bestt_part, bestj_part,
                            m_pos, m_neg, suppressor)
    return m_pos, m_neg, suppressor


def greedy_nms_keep(corners: np.ndarray, classes: np.ndarray, order: np.ndarray,
                    theta: float, class_aware: bool) -> np.ndarray:
    """Boolean keep mask for greedy suppression along ``order``."""
    keep = np.zeros(corners.shape[0], dtype=np.bool_)
    if len(order):
        _greedy_nms(corners, classes, order, theta, class_aware, keep)
    return keep


def max_threads() -> int:
    return numba.config.NUMBA_NUM_THREADS


@contextlib.contextmanager
def thread_count(threads: int | None):
    """Temporarily pin the worker count; requests above the pool clamp."""
    if threads is None:
        yield
        return
    if threads < 1:
        raise ValueError("threads must be >= 1")
    previous = numba.get_num_threads()
    numba.set_num_threads(min(threads, max_threads()))
    try:
        yield
    finally:
        numba.set_num_threads(previous)
