"""Confidence-propagation box clustering and NMS baselines.

Detection post-processing that replaces greedy suppression with
iterative message passing on a box-overlap graph: weaker neighbors
reward likely true positives, stronger neighbors penalize redundant
boxes, and every box updates independently from a frozen snapshot, so
the whole round parallelizes without changing the result.
"""

__version__ = "0.1.0"

from .baselines import nms, snms_wfa, soft_nms
from .cluster import ClusterConfig, cp_cluster, default_alpha_schedule, reference_cp_cluster
from .errors import ConfigurationError, DataFormatError
from .estimators import CPCluster, NMS, SNMSWFA, SoftNMS
from .evaluation import (
    EvalResult,
    GroundTruthBox,
    IOU_THRESHOLDS,
    average_precision,
    compare_methods,
    evaluate,
    match_detections,
)
from .geometry import BBox, area, iou, pairwise_iou
from .graph import NeighborGraph, build_graph, rebuild_with_theta
from .io import SynthSpec, generate_corpus, load_detections, load_ground_truth, save_detections
from .messages import (
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

__all__ = [
    "BBox",
    "CPCluster",
    "ClusterConfig",
    "ConfigurationError",
    "DataFormatError",
    "EvalResult",
    "GroundTruthBox",
    "IOU_THRESHOLDS",
    "MessageUpdate",
    "NMS",
    "NeighborGraph",
    "SNMSWFA",
    "ScoreSnapshot",
    "SoftNMS",
    "SuppressionMatrix",
    "SynthSpec",
    "area",
    "average_precision",
    "build_graph",
    "compare_methods",
    "compute_messages",
    "cp_cluster",
    "default_alpha_schedule",
    "evaluate",
    "generate_corpus",
    "iou",
    "load_detections",
    "load_ground_truth",
    "match_detections",
    "negative_impact",
    "negative_message",
    "nms",
    "pairwise_iou",
    "positive_message",
    "rebuild_with_theta",
    "reference_cp_cluster",
    "save_detections",
    "snms_wfa",
    "soft_nms",
    "stronger_neighbors",
    "weaker_friends",
]
