import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from cpcluster.geometry import BBox, area, boxes_from_arrays, boxes_to_arrays, iou, pairwise_iou

coord = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)
extent = st.floats(min_value=0.0, max_value=1e6, allow_nan=False, allow_infinity=False)


@st.composite
def valid_boxes(draw):
    x1 = draw(coord)
    y1 = draw(coord)
    return BBox(x1, y1, x1 + draw(extent), y1 + draw(extent), score=0.5)


def test_area_square():
    assert area(BBox(0, 0, 10, 10, 1.0)) == 100.0


def test_area_zero_width():
    assert area(BBox(5, 5, 5, 9, 1.0)) == 0.0


def test_area_rectangle():
    assert area(BBox(0, 0, 3, 7, 1.0)) == 21.0


def test_iou_identical():
    b = BBox(0, 0, 10, 10, 1.0)
    assert iou(b, b) == 1.0


def test_iou_disjoint():
    assert iou(BBox(0, 0, 10, 10, 1.0), BBox(20, 20, 30, 30, 1.0)) == 0.0


def test_iou_one_third():
    # intersection 50, union 150
    v = iou(BBox(0, 0, 10, 10, 1.0), BBox(5, 0, 15, 10, 1.0))
    assert v == 1 / 3


def test_iou_two_zero_area_boxes_defined_zero():
    a = BBox(5, 5, 5, 5, 1.0)
    b = BBox(5, 5, 5, 5, 1.0)
    assert iou(a, b) == 0.0


def test_iou_zero_area_against_normal():
    assert iou(BBox(5, 5, 5, 9, 1.0), BBox(0, 0, 10, 10, 1.0)) == 0.0


@settings(max_examples=200)
@given(valid_boxes(), valid_boxes())
def test_iou_symmetry_and_bounds(a, b):
    v = iou(a, b)
    assert v == iou(b, a)
    assert 0.0 <= v <= 1.0


@settings(max_examples=100)
@given(valid_boxes())
def test_self_iou_positive_area(b):
    if area(b) > 0:
        assert iou(b, b) == 1.0


# Exact in real arithmetic; floats need well-conditioned extents (a
# sub-ulp sliver is absorbed by a large shift and degenerates).
sane_coord = st.floats(min_value=-1e5, max_value=1e5, allow_nan=False)
sane_extent = st.one_of(st.just(0.0), st.floats(min_value=0.1, max_value=1e4))


@st.composite
def sane_boxes(draw):
    x1 = draw(sane_coord)
    y1 = draw(sane_coord)
    return BBox(x1, y1, x1 + draw(sane_extent), y1 + draw(sane_extent), score=0.5)


@settings(max_examples=150)
@given(sane_boxes(), sane_boxes(),
       st.floats(min_value=-1e4, max_value=1e4, allow_nan=False),
       st.floats(min_value=-1e4, max_value=1e4, allow_nan=False))
def test_translation_invariance(a, b, dx, dy):
    def shift(bb):
        return BBox(bb.x1 + dx, bb.y1 + dy, bb.x2 + dx, bb.y2 + dy, bb.score)
    assert math.isclose(iou(a, b), iou(shift(a), shift(b)),
                        rel_tol=1e-8, abs_tol=1e-8)


def test_pairwise_matches_scalar():
    rng = np.random.default_rng(3)
    from conftest import random_box_set
    boxes = random_box_set(rng, max_boxes=40)
    if not boxes:
        boxes = [BBox(0, 0, 1, 1, 0.5)]
    corners, _, _ = boxes_to_arrays(boxes)
    m = pairwise_iou(corners)
    for i, a in enumerate(boxes):
        for j, b in enumerate(boxes):
            if i == j:
                continue
            assert m[i, j] == iou(a, b)


def test_array_round_trip():
    boxes = [BBox(1.5, 2.5, 3.5, 4.5, 0.25, 7, index=0),
             BBox(0.0, 0.0, 0.0, 9.0, 1.0, 2, index=1)]
    corners, scores, classes = boxes_to_arrays(boxes)
    back = boxes_from_arrays(corners, scores, classes)
    assert back == boxes


def test_with_score_preserves_rest():
    b = BBox(1, 2, 3, 4, 0.5, 9, index=3)
    c = b.with_score(0.75)
    assert (c.x1, c.y1, c.x2, c.y2, c.class_id, c.index) == (1, 2, 3, 4, 9, 3)
    assert c.score == 0.75 and b.score == 0.5
