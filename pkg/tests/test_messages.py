import math

import numpy as np
import pytest

from conftest import random_box_set
from cpcluster.geometry import BBox
from cpcluster.graph import build_graph, rebuild_with_theta
from cpcluster.messages import (
    MessageUpdate,
    ScoreSnapshot,
    SuppressionMatrix,
    compute_messages,
    negative_impact,
    negative_message,
    positive_message,
    stronger_neighbors,
    weaker_friends,
)


def snapshot_of(boxes):
    return ScoreSnapshot(np.array([b.score for b in boxes], dtype=np.float64))


def test_weaker_friends_isolated_box():
    boxes = [BBox(0, 0, 10, 10, 0.9, 0, 0)]
    g = build_graph(boxes, 0.6)
    assert weaker_friends(0, g, snapshot_of(boxes), 0.8) == set()


def test_weaker_friends_membership_conditions():
    # neighbors at IOU 0.85/0.85/0.70 with scores 0.4/0.3/0.5; theta_n=0.8
    boxes = [
        BBox(0, 0, 100, 100, 0.9, 0, 0),
        BBox(0, 0, 100, 85, 0.4, 0, 1),   # IOU 0.85
        BBox(0, 0, 85, 100, 0.3, 0, 2),   # IOU 0.85
        BBox(0, 0, 100, 70, 0.5, 0, 3),   # IOU 0.70, fails the theta_n test
    ]
    g = build_graph(boxes, 0.6)
    assert weaker_friends(0, g, snapshot_of(boxes), 0.8) == {1, 2}


def test_weaker_friends_tie_break_by_index():
    boxes = [BBox(0, 0, 100, 100, 0.7, 0, 0), BBox(0, 0, 100, 90, 0.7, 0, 1)]
    g = build_graph(boxes, 0.6)
    snap = snapshot_of(boxes)
    assert weaker_friends(0, g, snap, 0.8) == {1}
    assert weaker_friends(1, g, snap, 0.8) == set()


def test_positive_message_hand_value():
    snap = ScoreSnapshot(np.array([0.5, 0.4, 0.3, 0.2]))
    m = positive_message(0, {1, 2, 3}, snap)
    assert m == (3 / 4) * (1.0 - 0.5) * 0.4
    assert abs(m - 0.15) < 1e-15


def test_positive_message_empty_and_saturated():
    snap = ScoreSnapshot(np.array([1.0, 0.6]))
    assert positive_message(0, set(), snap) == 0.0
    assert positive_message(0, {1}, snap) == 0.0  # (1 - 1.0) annihilates


def test_stronger_neighbors_cases():
    boxes = [
        BBox(0, 0, 100, 100, 0.4, 0, 0),
        BBox(0, 0, 100, 90, 0.8, 0, 1),
        BBox(0, 0, 90, 100, 0.7, 0, 2),
        BBox(0, 0, 100, 80, 0.2, 0, 3),
    ]
    g = build_graph(boxes, 0.6)
    snap = snapshot_of(boxes)
    assert stronger_neighbors(0, g, snap) == {1, 2}
    assert stronger_neighbors(1, g, snap) == set()  # top box


def test_stronger_neighbors_equal_scores_one_direction():
    boxes = [BBox(0, 0, 100, 100, 0.5, 0, 0), BBox(0, 0, 100, 95, 0.5, 0, 1)]
    g = build_graph(boxes, 0.6)
    snap = snapshot_of(boxes)
    assert stronger_neighbors(1, g, snap) == {0}
    assert stronger_neighbors(0, g, snap) == set()


def test_negative_impact_hand_values():
    # alpha=1: pure score ratio
    boxes = [BBox(0, 0, 100, 100, 0.3, 0, 0), BBox(0, 0, 100, 72, 0.9, 0, 1)]
    g = build_graph(boxes, 0.6)
    snap = snapshot_of(boxes)
    assert negative_impact(1, 0, snap, g, 1.0, 0.6) == 0.9 / 0.3
    # alpha=0: normalized overlap 0.72/0.6
    assert negative_impact(1, 0, snap, g, 0.0, 0.6) == 0.72 / 0.6
    assert abs(negative_impact(1, 0, snap, g, 0.0, 0.6) - 1.2) < 1e-15


def test_negative_impact_blend():
    boxes = [BBox(0, 0, 100, 100, 0.4, 0, 0), BBox(0, 0, 100, 66, 0.8, 0, 1)]
    g = build_graph(boxes, 0.6)
    snap = snapshot_of(boxes)
    v = negative_impact(1, 0, snap, g, 0.5, 0.6)
    assert v == 0.5 * (0.8 / 0.4) + 0.5 * (0.66 / 0.6)
    assert abs(v - 1.55) < 1e-12


def test_negative_impact_zero_score_dominates():
    boxes = [BBox(0, 0, 100, 100, 0.0, 0, 0), BBox(0, 0, 100, 90, 0.5, 0, 1)]
    g = build_graph(boxes, 0.6)
    snap = snapshot_of(boxes)
    assert negative_impact(1, 0, snap, g, 1.0, 0.6) == math.inf
    assert negative_impact(1, 0, snap, g, 0.5, 0.6) == math.inf
    # alpha=0 never touches the ratio
    assert negative_impact(1, 0, snap, g, 0.0, 0.6) == 0.9 / 0.6


def suppressor_fixture():
    # target score 0.4; stronger neighbors: b1 score 0.8 at IOU 0.65,
    # b2 score 0.7 at IOU 0.75
    boxes = [
        BBox(0, 0, 100, 100, 0.4, 0, 0),
        BBox(0, 0, 100, 65, 0.8, 0, 1),
        BBox(0, 0, 100, 75, 0.7, 0, 2),
    ]
    g = build_graph(boxes, 0.6)
    return boxes, g, snapshot_of(boxes)


def test_negative_message_alpha_flip():
    boxes, g, snap = suppressor_fixture()
    m, j = negative_message(0, g, snap, SuppressionMatrix(3), 2, 1.0, 0.6)
    assert j == 1 and m == 0.4 * 0.65
    m, j = negative_message(0, g, snap, SuppressionMatrix(3), 2, 0.0, 0.6)
    assert j == 2 and m == 0.4 * 0.75


def test_negative_message_no_stronger_neighbor():
    boxes, g, snap = suppressor_fixture()
    assert negative_message(1, g, snap, SuppressionMatrix(3), 2, 1.0, 0.6) == (0.0, None)


def test_negative_message_zeta_exhaustion():
    boxes, g, snap = suppressor_fixture()
    sup = SuppressionMatrix(3)
    sup.increment(1, 0)
    sup.increment(1, 0)
    # b1 has hit the cap (zeta=2); b2 takes over despite lower impact
    m, j = negative_message(0, g, snap, sup, 2, 1.0, 0.6)
    assert j == 2 and m == 0.4 * 0.75
    sup.increment(2, 0)
    sup.increment(2, 0)
    assert negative_message(0, g, snap, sup, 2, 1.0, 0.6) == (0.0, None)


def test_negative_message_zero_score_keeps_suppressor():
    # score 0 with an eligible stronger neighbor: message is 0 but the
    # suppressor is still reported (and will be counted by the caller)
    boxes = [BBox(0, 0, 100, 100, 0.0, 0, 0), BBox(0, 0, 100, 90, 0.5, 0, 1)]
    g = build_graph(boxes, 0.6)
    m, j = negative_message(0, g, snapshot_of(boxes), SuppressionMatrix(2), 2, 1.0, 0.6)
    assert m == 0.0 and j == 1


def test_suppression_matrix_basics():
    sup = SuppressionMatrix(3)
    assert sup.count(1, 0) == 0
    sup.increment(1, 0)
    assert sup.count(1, 0) == 1 and sup.count(0, 1) == 0
    assert sup.counts()[1, 0] == 1
    with pytest.raises(ValueError):
        sup.increment(2, 2)
    sup.apply_suppressors(np.array([1, -1, 0]))
    assert sup.count(1, 0) == 2 and sup.count(0, 2) == 1


def test_snapshot_validation():
    with pytest.raises(ValueError):
        ScoreSnapshot(np.array([0.5, 1.2]))
    with pytest.raises(ValueError):
        ScoreSnapshot(np.array([-0.1]))
    assert len(ScoreSnapshot(np.array([]))) == 0


def brute_force_update(boxes, graph, snap, sup, theta_n, zeta, alpha, theta):
    """Per-box recomputation through the unit operations."""
    n = len(boxes)
    m_pos = np.zeros(n)
    m_neg = np.zeros(n)
    suppressor = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        friends = weaker_friends(i, graph, snap, theta_n)
        m_pos[i] = positive_message(i, friends, snap)
        m, j = negative_message(i, graph, snap, sup, zeta, alpha, theta)
        m_neg[i] = m
        suppressor[i] = -1 if j is None else j
    return MessageUpdate(m_pos=m_pos, m_neg=m_neg, suppressor=suppressor)


@pytest.mark.parametrize("threads", [None, 1, 2])
def test_compute_messages_equals_brute_force(threads):
    rng = np.random.default_rng(77)
    for _ in range(30):
        boxes = random_box_set(rng, max_boxes=30)
        if not boxes:
            continue
        theta0 = float(rng.uniform(0.0, 0.7))
        theta_n = float(rng.uniform(theta0 + 0.01, 1.0))
        zeta = int(rng.integers(1, 3))
        graph = build_graph(boxes, theta0)
        sup = SuppressionMatrix(len(boxes))
        snap = snapshot_of(boxes)
        for round_no, alpha in enumerate((1.0, 0.0, 0.5)):
            upd = compute_messages(graph, snap, sup, theta_n, zeta, alpha, threads=threads)
            ref = brute_force_update(boxes, graph, snap, sup, theta_n, zeta, alpha, graph.theta)
            assert np.array_equal(upd.m_pos, ref.m_pos)
            assert np.array_equal(upd.m_neg, ref.m_neg)
            assert np.array_equal(upd.suppressor, ref.suppressor)
            scores = (snap.scores + upd.m_pos) - upd.m_neg
            snap = ScoreSnapshot(scores)
            sup.apply_suppressors(upd.suppressor)
            if round_no == 0 and graph.theta + 0.15 < 1.0:
                graph = rebuild_with_theta(graph, graph.theta + 0.15)


def test_message_bounds_and_flow_direction():
    rng = np.random.default_rng(88)
    for _ in range(25):
        boxes = random_box_set(rng, max_boxes=40)
        if not boxes:
            continue
        graph = build_graph(boxes, 0.5)
        snap = snapshot_of(boxes)
        sup = SuppressionMatrix(len(boxes))
        upd = compute_messages(graph, snap, sup, 0.8, 2, 1.0)
        s = snap.scores
        assert np.all(upd.m_pos >= 0) and np.all(upd.m_pos <= 1.0 - s)
        assert np.all(upd.m_neg >= 0) and np.all(upd.m_neg <= s)
        updated = (s + upd.m_pos) - upd.m_neg
        assert np.all(updated >= 0.0) and np.all(updated <= 1.0)
        for i in range(len(boxes)):
            j = int(upd.suppressor[i])
            assert j != i
            if j >= 0:
                # suppressors are stronger under the total order
                assert (s[j] > s[i]) or (s[j] == s[i] and j < i)
            else:
                assert upd.m_neg[i] == 0.0
            for f in weaker_friends(i, graph, snap, 0.8):
                assert (s[f] < s[i]) or (s[f] == s[i] and f > i)
