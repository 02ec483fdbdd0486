import numpy as np
import pytest

from cpcluster.errors import DataFormatError
from cpcluster.evaluation import (
    GroundTruthBox,
    IOU_THRESHOLDS,
    average_precision,
    compare_methods,
    evaluate,
    match_detections,
)
from cpcluster.geometry import BBox


def gt(x1, y1, x2, y2, cls=1, img=1, crowd=False):
    return GroundTruthBox(x1, y1, x2, y2, cls, img, crowd)


def det(x1, y1, x2, y2, score, cls=1, index=0):
    return BBox(x1, y1, x2, y2, score, cls, index=index)


def test_match_single_pair():
    matches = match_detections([det(0, 0, 100, 60, 0.9)], [gt(0, 0, 100, 100)], 0.5)
    assert matches == [(0, 0)]


def test_match_below_threshold_is_fp():
    matches = match_detections([det(0, 0, 100, 40, 0.9)], [gt(0, 0, 100, 100)], 0.5)
    assert matches == [(0, None)]


def test_match_score_order_beats_iou():
    # the higher-scored detection takes the ground truth even though
    # the other detection overlaps it better
    dets = [det(0, 0, 100, 60, 0.9, index=0), det(0, 0, 100, 90, 0.8, index=1)]
    matches = match_detections(dets, [gt(0, 0, 100, 100)], 0.5)
    assert matches == [(0, 0), (1, None)]


def test_match_crowd_excluded():
    matches = match_detections([det(0, 0, 100, 90, 0.9)],
                               [gt(0, 0, 100, 100, crowd=True)], 0.5)
    assert matches == [(0, None)]


def test_match_each_gt_used_once():
    dets = [det(0, 0, 100, 90, 0.9, index=0), det(0, 0, 100, 92, 0.8, index=1)]
    matches = match_detections(dets, [gt(0, 0, 100, 100)], 0.5)
    assert matches == [(0, 0), (1, None)]


def test_ap_perfect():
    assert average_precision([True, True, True], 3) == 1.0


def test_ap_no_detections():
    assert average_precision([], 5) == 0.0


def test_ap_no_gt_with_detections_is_zero():
    assert average_precision([False, False], 0) == 0.0


def test_ap_no_gt_no_detections_skipped():
    assert average_precision([], 0) is None


def test_ap_101_point_hand_value():
    # 1 TP then 1 FP with 2 ground truths: precision 1.0 out to recall
    # 0.5, zero beyond -> 51 of 101 samples at 1.0
    ap = average_precision([True, False], 2)
    assert abs(ap - 51 / 101) < 1e-12


def test_ap_monotone_under_fp_edits():
    rng = np.random.default_rng(41)
    for _ in range(50):
        n = int(rng.integers(1, 30))
        labels = [bool(rng.random() < 0.6) for _ in range(n)]
        num_gt = max(1, sum(labels) + int(rng.integers(0, 5)))
        base = average_precision(labels, num_gt)
        # false positive appended below every true positive
        assert average_precision(labels + [False], num_gt) <= base + 1e-15
        # removing any false positive never decreases AP
        for k, lab in enumerate(labels):
            if not lab:
                removed = labels[:k] + labels[k + 1:]
                assert average_precision(removed, num_gt) >= base - 1e-15


def perfect_world():
    gts = {
        1: [gt(0, 0, 100, 100, cls=1, img=1), gt(200, 200, 300, 260, cls=2, img=1)],
        2: [gt(50, 50, 150, 150, cls=1, img=2)],
    }
    dets = {
        img: [BBox(g.x1, g.y1, g.x2, g.y2, 1.0, g.class_id, index=k)
              for k, g in enumerate(boxes)]
        for img, boxes in gts.items()
    }
    return dets, gts


def test_evaluate_perfect_is_exactly_one():
    dets, gts = perfect_world()
    result = evaluate(dets, gts)
    assert result.map == 1.0
    assert result.ap50 == 1.0 and result.ap75 == 1.0
    assert set(result.ap_per_threshold) == set(IOU_THRESHOLDS)
    assert all(v == 1.0 for v in result.ap_per_threshold.values())


def test_evaluate_empty_detections_zero():
    _, gts = perfect_world()
    result = evaluate({}, gts)
    assert result.map == 0.0 and result.ap50 == 0.0


def test_evaluate_orphan_images_rejected():
    dets, gts = perfect_world()
    dets[99] = [det(0, 0, 10, 10, 0.5)]
    with pytest.raises(DataFormatError, match="99"):
        evaluate(dets, gts)


def test_evaluate_input_order_invariance():
    dets, gts = perfect_world()
    # degrade scores so ranking matters
    dets[1][0] = dets[1][0].with_score(0.6)
    dets[1].append(det(0, 0, 100, 52, 0.7, cls=1, index=2))  # borderline FP
    r1 = evaluate(dets, gts)
    shuffled = {img: list(reversed(boxes)) for img, boxes in dets.items()}
    r2 = evaluate(shuffled, gts)
    assert r1.ap_per_threshold == r2.ap_per_threshold


def test_evaluate_crowd_not_counted():
    gts = {1: [gt(0, 0, 100, 100, crowd=True)]}
    dets = {1: [det(0, 0, 100, 95, 0.9)]}
    result = evaluate(dets, gts)
    # detections against a crowd-only class: zero AP, zero ground truths
    assert result.map == 0.0
    assert result.counts[0.50]["ground_truths"] == 0


def test_evaluate_skips_absent_classes():
    gts = {1: [gt(0, 0, 100, 100, cls=1)]}
    dets = {1: [det(0, 0, 100, 100, 1.0, cls=1)]}
    result = evaluate(dets, gts)
    assert set(result.per_class_ap) == {1}
    assert result.map == 1.0


def test_compare_methods_rows(seed42_corpus):
    dets = {img: list(b) for img, b in list(seed42_corpus["dets"].items())[:20]}
    gts = {img: seed42_corpus["gt"].by_image[img] for img in seed42_corpus["gt"].by_image}
    rows = compare_methods(dets, gts, [("nms", {}), ("cp", {})])
    assert [r["method"] for r in rows] == ["nms", "cp"]
    for row in rows:
        assert 0.0 <= row["map"] <= 1.0
        assert row["wall_time_ms"] >= 0.0
        assert set(row) == {"method", "params", "map", "ap50", "ap75",
                            "per_class", "wall_time_ms"}


def test_compare_methods_empty_list():
    assert compare_methods({}, {}, []) == []


def test_compare_methods_unknown_name():
    with pytest.raises(DataFormatError, match="valid methods"):
        compare_methods({}, {}, [("bogus", {})])
