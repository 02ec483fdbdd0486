"""Detection/ground-truth file ingestion and synthetic corpus generation.

Files use the COCO results and annotation formats so real detector
dumps drop in unchanged: detections are a flat JSON array of
``{image_id, category_id, bbox: [x, y, w, h], score}`` records,
ground truth a ``{images, categories, annotations}`` document.
Numbers are serialized at full round-trip precision.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError
from .evaluation import GroundTruthBox
from .geometry import BBox
from .geometry import iou as iou_boxes

logger = logging.getLogger(__name__)


@dataclass
class GroundTruthData:
    images: list[int]
    categories: dict[int, str]
    by_image: dict[int, list[GroundTruthBox]]


def parse_detections(records, strict: bool = True) -> dict[int, list[BBox]]:
    """Group detection records by image; indices follow record order.

    Invalid records raise :class:`DataFormatError` naming the record
    position in strict mode; in lenient mode they are skipped, logged
    individually, and counted in a summary log line.
    """
    if not isinstance(records, list):
        raise DataFormatError("detection file must be a JSON array of records")
    grouped: dict[int, list[BBox]] = {}
    skipped = 0
    for k, rec in enumerate(records):
        try:
            box = _parse_record(k, rec)
        except DataFormatError as err:
            if strict:
                raise
            skipped += 1
            logger.warning("skipping %s", err)
            continue
        image_id, bbox = box
        bucket = grouped.setdefault(image_id, [])
        bbox.index = len(bucket)
        bucket.append(bbox)
    if skipped:
        logger.warning("skipped %d invalid detection record(s)", skipped)
    return grouped


def _parse_record(k: int, rec) -> tuple[int, BBox]:
    if not isinstance(rec, dict):
        raise DataFormatError(f"record {k}: not an object")
    try:
        image_id = rec["image_id"]
        category_id = rec["category_id"]
        bbox = rec["bbox"]
        score = rec["score"]
    except KeyError as missing:
        raise DataFormatError(f"record {k}: missing field {missing}") from None
    if not isinstance(image_id, int) or not isinstance(category_id, int):
        raise DataFormatError(f"record {k}: image_id and category_id must be integers")
    if category_id < 0:
        raise DataFormatError(f"record {k}: negative category_id")
    if (not isinstance(bbox, list) or len(bbox) != 4
            or not all(isinstance(v, (int, float)) for v in bbox)):
        raise DataFormatError(f"record {k}: bbox must be [x, y, w, h]")
    x, y, w, h = (float(v) for v in bbox)
    if w < 0.0 or h < 0.0:
        raise DataFormatError(f"record {k}: negative bbox extent (w={w}, h={h})")
    if not isinstance(score, (int, float)) or not 0.0 <= float(score) <= 1.0:
        raise DataFormatError(f"record {k}: score {score} outside [0, 1]")
    return image_id, BBox(x, y, x + w, y + h, float(score), category_id)


def load_detections(path, strict: bool = True) -> dict[int, list[BBox]]:
    """Load a COCO-results detection file, grouped by image."""
    with open(path, encoding="utf-8") as fh:
        try:
            records = json.load(fh)
        except json.JSONDecodeError as err:
            raise DataFormatError(f"{path}: invalid JSON ({err})") from err
    return parse_detections(records, strict=strict)


def detections_to_records(dets_by_image: dict[int, list[BBox]]) -> list[dict]:
    records = []
    for image_id in sorted(dets_by_image):
        for b in dets_by_image[image_id]:
            records.append({
                "image_id": image_id,
                "category_id": b.class_id,
                "bbox": [b.x1, b.y1, b.x2 - b.x1, b.y2 - b.y1],
                "score": b.score,
            })
    return records


def save_detections(dets_by_image: dict[int, list[BBox]], path) -> None:
    """Write detections back to the COCO results format."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(detections_to_records(dets_by_image), fh)
        fh.write("\n")


def parse_ground_truth(doc) -> GroundTruthData:
    if not isinstance(doc, dict):
        raise DataFormatError("ground truth must be a JSON object")
    for key in ("images", "categories", "annotations"):
        if key not in doc or not isinstance(doc[key], list):
            raise DataFormatError(f"ground truth missing array field {key!r}")
    image_ids = []
    for k, img in enumerate(doc["images"]):
        if not isinstance(img, dict) or not isinstance(img.get("id"), int):
            raise DataFormatError(f"images[{k}]: missing integer id")
        image_ids.append(img["id"])
    if len(set(image_ids)) != len(image_ids):
        raise DataFormatError("duplicate image ids")
    categories = {}
    for k, cat in enumerate(doc["categories"]):
        if not isinstance(cat, dict) or not isinstance(cat.get("id"), int):
            raise DataFormatError(f"categories[{k}]: missing integer id")
        categories[cat["id"]] = str(cat.get("name", cat["id"]))
    by_image: dict[int, list[GroundTruthBox]] = {i: [] for i in image_ids}
    seen_ann = set()
    for k, ann in enumerate(doc["annotations"]):
        if not isinstance(ann, dict):
            raise DataFormatError(f"annotations[{k}]: not an object")
        ann_id = ann.get("id")
        if ann_id in seen_ann:
            raise DataFormatError(f"annotations[{k}]: duplicate annotation id {ann_id}")
        seen_ann.add(ann_id)
        image_id = ann.get("image_id")
        category_id = ann.get("category_id")
        if image_id not in by_image:
            raise DataFormatError(f"annotations[{k}]: unknown image_id {image_id}")
        if category_id not in categories:
            raise DataFormatError(f"annotations[{k}]: unknown category_id {category_id}")
        bbox = ann.get("bbox")
        if not isinstance(bbox, list) or len(bbox) != 4:
            raise DataFormatError(f"annotations[{k}]: bbox must be [x, y, w, h]")
        x, y, w, h = (float(v) for v in bbox)
        if w < 0.0 or h < 0.0:
            raise DataFormatError(f"annotations[{k}]: negative bbox extent")
        by_image[image_id].append(GroundTruthBox(
            x, y, x + w, y + h, category_id, image_id,
            crowd=bool(ann.get("iscrowd", 0)),
        ))
    return GroundTruthData(images=image_ids, categories=categories, by_image=by_image)


def load_ground_truth(path) -> GroundTruthData:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as err:
            raise DataFormatError(f"{path}: invalid JSON ({err})") from err
    return parse_ground_truth(doc)


@dataclass(frozen=True)
class SynthSpec:
    """Parameters for the seeded synthetic corpus generator.

    ``swap_prob`` is the probability that an object's best-overlap
    candidate is NOT its highest-scored one (a higher-scored distractor
    with looser overlap is planted instead). The seed fully determines
    the output; per-image substreams keep generation order-free.
    """

    images: int = 200
    objects_per_image: tuple[int, int] = (2, 8)
    redundancy: tuple[int, int] = (2, 6)
    coord_noise: float = 6.0
    swap_prob: float = 0.3
    score_noise: float = 0.08
    num_classes: int = 3
    canvas: float = 1000.0
    seed: int = 42

    def validate(self) -> None:
        if self.images < 1:
            raise DataFormatError(f"images must be >= 1, got {self.images}")
        lo, hi = self.objects_per_image
        if not (1 <= lo <= hi):
            raise DataFormatError(f"invalid objects_per_image range {self.objects_per_image}")
        lo, hi = self.redundancy
        if not (1 <= lo <= hi):
            raise DataFormatError(f"invalid redundancy range {self.redundancy}")
        if self.coord_noise < 0:
            raise DataFormatError("coord_noise must be >= 0")
        if not 0.0 <= self.swap_prob <= 1.0:
            raise DataFormatError("swap_prob must be in [0, 1]")
        if self.score_noise < 0:
            raise DataFormatError("score_noise must be >= 0")
        if self.num_classes < 1:
            raise DataFormatError("num_classes must be >= 1")
        if self.canvas <= 0:
            raise DataFormatError("canvas must be positive")


def _grid(v: float) -> float:
    # Snap to 1/64 px so corner<->xywh conversions are exact in float64.
    return round(v * 64.0) / 64.0


def generate_corpus(spec: SynthSpec) -> tuple[list[dict], dict]:
    """Generate (detection records, ground-truth document) for a spec.

    Each ground-truth object gets one tight "primary" candidate, a
    cluster of weaker friends jittered around it (mutual IOU > 0.8),
    with probability ``swap_prob`` a looser but higher-scored
    distractor, and occasionally a far-displaced stray. Scores are
    role-based with additive noise rather than IOU-proportional, which
    is what makes the weaker-friend structure and the score/overlap
    swap controllable.
    """
    spec.validate()
    records: list[dict] = []
    annotations: list[dict] = []
    ann_id = 0
    for image_id in range(1, spec.images + 1):
        rng = np.random.default_rng([spec.seed, image_id])
        n_obj = int(rng.integers(spec.objects_per_image[0], spec.objects_per_image[1] + 1))
        for _ in range(n_obj):
            cls = int(rng.integers(1, spec.num_classes + 1))
            w = rng.uniform(60.0, 160.0)
            h = rng.uniform(60.0, 160.0)
            x = rng.uniform(0.0, spec.canvas - w)
            y = rng.uniform(0.0, spec.canvas - h)
            gx1, gy1 = _grid(x), _grid(y)
            gx2, gy2 = _grid(x + w), _grid(y + h)
            ann_id += 1
            annotations.append({
                "id": ann_id,
                "image_id": image_id,
                "category_id": cls,
                "bbox": [gx1, gy1, gx2 - gx1, gy2 - gy1],
                "iscrowd": 0,
            })

            r = int(rng.integers(spec.redundancy[0], spec.redundancy[1] + 1))
            swap = bool(rng.random() < spec.swap_prob) and r >= 2
            primary = _jitter(rng, (gx1, gy1, gx2, gy2), spec.coord_noise * 0.35)
            primary_score = float(np.clip(
                rng.uniform(0.72, 0.92) + rng.normal(0.0, spec.score_noise * 0.25),
                0.40, 0.98,
            ))
            candidates = [(primary, primary_score)]
            n_extra = r - 1
            if swap:
                distractor = _shifted(rng, (gx1, gy1, gx2, gy2),
                                      w, h, spec.coord_noise)
                distractor_score = min(primary_score + float(rng.uniform(0.015, 0.05)), 0.98)
                candidates.append((distractor, distractor_score))
                n_extra -= 1
            for _ in range(max(0, n_extra)):
                if rng.random() < 0.12:
                    stray = _shifted(rng, (gx1, gy1, gx2, gy2), w, h,
                                     spec.coord_noise, frac_lo=0.8, frac_hi=1.2)
                    stray_score = float(np.clip(
                        rng.uniform(0.05, 0.20) + rng.normal(0.0, spec.score_noise * 0.5),
                        0.02, 0.30,
                    ))
                    candidates.append((stray, stray_score))
                else:
                    friend = _jitter(rng, primary, spec.coord_noise * 0.55)
                    friend_score = float(np.clip(
                        rng.uniform(0.20, 0.62) + rng.normal(0.0, spec.score_noise * 0.5),
                        0.02, 0.68,
                    ))
                    candidates.append((friend, friend_score))
            candidates = _enforce_swap(candidates, (gx1, gy1, gx2, gy2), swap)
            for (bx1, by1, bx2, by2), score in candidates:
                records.append({
                    "image_id": image_id,
                    "category_id": cls,
                    "bbox": [bx1, by1, bx2 - bx1, by2 - by1],
                    "score": score,
                })
    gt_doc = {
        "images": [{"id": i} for i in range(1, spec.images + 1)],
        "categories": [
            {"id": c, "name": f"object_{c}"} for c in range(1, spec.num_classes + 1)
        ],
        "annotations": annotations,
    }
    return records, gt_doc


def _enforce_swap(candidates, gt_box, swap):
    """Make the best-overlap/top-score relationship match the swap draw.

    Jitter can accidentally hand a friend the best overlap; exchanging
    scores (never coordinates) restores the drawn outcome exactly.
    """
    if len(candidates) < 2:
        return candidates
    gx1, gy1, gx2, gy2 = gt_box
    gt = BBox(gx1, gy1, gx2, gy2, 1.0)
    ious = [iou_boxes(BBox(*box, 1.0), gt) for box, _ in candidates]
    scores = [s for _, s in candidates]
    best = max(range(len(ious)), key=lambda k: (ious[k], -k))
    top = max(range(len(scores)), key=lambda k: (scores[k], -k))
    if swap and best == top:
        loosest = min(range(len(ious)), key=lambda k: (ious[k], k))
        scores[best], scores[loosest] = scores[loosest], scores[best]
    elif not swap and best != top:
        scores[best], scores[top] = scores[top], scores[best]
    return [(box, s) for (box, _), s in zip(candidates, scores)]


def _jitter(rng, box, scale):
    x1, y1, x2, y2 = box
    d = rng.normal(0.0, max(scale, 1e-9), size=4) if scale > 0 else np.zeros(4)
    nx1, ny1 = _grid(x1 + d[0]), _grid(y1 + d[1])
    nx2, ny2 = _grid(x2 + d[2]), _grid(y2 + d[3])
    return min(nx1, nx2), min(ny1, ny2), max(nx1, nx2), max(ny1, ny2)


def _shifted(rng, box, w, h, noise, frac_lo=0.28, frac_hi=0.42):
    x1, y1, x2, y2 = box
    frac = rng.uniform(frac_lo, frac_hi)
    sign = 1.0 if rng.random() < 0.5 else -1.0
    if rng.random() < 0.5:
        dx, dy = sign * frac * w, 0.0
    else:
        dx, dy = 0.0, sign * frac * h
    return _jitter(rng, (x1 + dx, y1 + dy, x2 + dx, y2 + dy), noise * 0.3)


def save_json(doc, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")
