"""Scikit-learn style wrappers around the post-processing methods.

Each estimator is a stateless transformer over (n, 6) detection
arrays with columns (x1, y1, x2, y2, score, class_id): ``fit``
validates parameters and input, ``transform`` returns the surviving
rows with updated scores. ``get_params``/``set_params`` come from
``BaseEstimator``, so the methods drop into sklearn pipelines and
grid-search tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from . import baselines
from .cluster import ClusterConfig, cp_cluster, default_alpha_schedule
from .validation import array_to_boxes, boxes_to_array, check_detection_array


class _DetectionTransformer(BaseEstimator, TransformerMixin):
    def fit(self, X=None, y=None):
        self._check_params()
        if X is not None:
            check_detection_array(X)
        self.n_features_in_ = 6
        return self

    def transform(self, X) -> np.ndarray:
        self._check_params()
        X = check_detection_array(X)
        return boxes_to_array(self._apply(array_to_boxes(X)))

    def _check_params(self) -> None:
        raise NotImplementedError

    def _apply(self, boxes):
        raise NotImplementedError


class CPCluster(_DetectionTransformer):
    """Confidence-propagation clustering as a transformer.

    Parameters mirror :class:`cpcluster.cluster.ClusterConfig`;
    ``alpha=None`` selects the default schedule (strongest suppressor
    in round one, nearest afterwards).
    """

    def __init__(self, iou_thresh=0.6, lambda_=0.2, theta_n=0.8, zeta=2,
                 iterations=2, alpha=None, min_score=0.001, class_aware=True,
                 sort_output=True, threads=None):
        self.iou_thresh = iou_thresh
        self.lambda_ = lambda_
        self.theta_n = theta_n
        self.zeta = zeta
        self.iterations = iterations
        self.alpha = alpha
        self.min_score = min_score
        self.class_aware = class_aware
        self.sort_output = sort_output
        self.threads = threads

    def config(self) -> ClusterConfig:
        alpha = self.alpha
        if alpha is None:
            alpha = default_alpha_schedule(self.iterations)
        return ClusterConfig(
            theta0=self.iou_thresh, lambda_=self.lambda_, theta_n=self.theta_n,
            zeta=self.zeta, iterations=self.iterations,
            alpha_schedule=tuple(alpha), min_score=self.min_score,
            class_aware=self.class_aware, sort_output=self.sort_output,
        )

    def _check_params(self):
        self.config().validate()

    def _apply(self, boxes):
        return cp_cluster(boxes, self.config(), threads=self.threads)


class NMS(_DetectionTransformer):
    """Greedy hard suppression as a transformer."""

    def __init__(self, iou_thresh=0.6, class_aware=True):
        self.iou_thresh = iou_thresh
        self.class_aware = class_aware

    def _check_params(self):
        if not 0.0 <= self.iou_thresh <= 1.0:
            raise ValueError(f"iou_thresh must be in [0, 1], got {self.iou_thresh}")

    def _apply(self, boxes):
        return baselines.nms(boxes, theta=self.iou_thresh, class_aware=self.class_aware)


class SoftNMS(_DetectionTransformer):
    """Soft-NMS score decay as a transformer."""

    def __init__(self, iou_thresh=0.6, mode="linear", sigma=0.5,
                 score_thresh=0.001, class_aware=True):
        self.iou_thresh = iou_thresh
        self.mode = mode
        self.sigma = sigma
        self.score_thresh = score_thresh
        self.class_aware = class_aware

    def _check_params(self):
        baselines._check_soft_params(self.mode, self.sigma)

    def _apply(self, boxes):
        return baselines.soft_nms(
            boxes, theta=self.iou_thresh, mode=self.mode, sigma=self.sigma,
            score_thresh=self.score_thresh, class_aware=self.class_aware,
        )


class SNMSWFA(SoftNMS):
    """Soft-NMS with weaker-friends amplification at selection time."""

    def __init__(self, iou_thresh=0.6, theta_n=0.8, mode="linear", sigma=0.5,
                 score_thresh=0.001, class_aware=True):
        super().__init__(iou_thresh=iou_thresh, mode=mode, sigma=sigma,
                         score_thresh=score_thresh, class_aware=class_aware)
        self.theta_n = theta_n

    def _check_params(self):
        super()._check_params()
        if self.theta_n <= self.iou_thresh:
            raise ValueError(
                f"theta_n ({self.theta_n}) must exceed iou_thresh ({self.iou_thresh})"
            )

    def _apply(self, boxes):
        return baselines.snms_wfa(
            boxes, theta=self.iou_thresh, theta_n=self.theta_n, mode=self.mode,
            sigma=self.sigma, score_thresh=self.score_thresh,
            class_aware=self.class_aware,
        )
