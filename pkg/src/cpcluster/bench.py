"""Runtime comparison of the post-processing methods.

Generates a dense-overlap synthetic workload (no files involved) and
times each method with a monotonic clock: one discarded warm-up run,
then the median of the repeats. Final output sorting and score
filtering are excluded from the propagation timings, since they are
bookkeeping outside the algorithm itself.
"""

from __future__ import annotations

import statistics
import time

import numpy as np

from . import _kernels
from .cluster import ClusterConfig, default_alpha_schedule, propagate_scores
from .geometry import boxes_from_arrays
from .baselines import nms, soft_nms


def make_workload(n_boxes: int, n_clusters: int, seed: int = 7
                  ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Single-class boxes grouped into overlapping clusters.

    Boxes inside a cluster overlap heavily (the hard case for
    suppression); distinct clusters rarely touch.
    """
    rng = np.random.default_rng(seed)
    side = max(200.0, np.sqrt(n_clusters) * 320.0)
    centers = rng.uniform(100.0, side - 100.0, size=(n_clusters, 2))
    assign = rng.integers(0, n_clusters, size=n_boxes)
    size = rng.uniform(70.0, 110.0, size=(n_boxes, 2))
    jitter = rng.normal(0.0, 6.0, size=(n_boxes, 2))
    cxy = centers[assign] + jitter
    corners = np.empty((n_boxes, 4), dtype=np.float64)
    corners[:, 0] = cxy[:, 0] - size[:, 0] / 2
    corners[:, 1] = cxy[:, 1] - size[:, 1] / 2
    corners[:, 2] = cxy[:, 0] + size[:, 0] / 2
    corners[:, 3] = cxy[:, 1] + size[:, 1] / 2
    scores = rng.uniform(0.05, 0.98, size=n_boxes)
    classes = np.zeros(n_boxes, dtype=np.int64)
    return corners, scores, classes


def time_call(fn, repeat: int = 3) -> float:
    """Median wall milliseconds over ``repeat`` runs after one warm-up."""
    fn()
    samples = []
    for _ in range(max(1, repeat)):
        start = time.perf_counter()
        fn()
        samples.append((time.perf_counter() - start) * 1000.0)
    return statistics.median(samples)


def cp_config(iterations: int, theta0: float = 0.5, lambda_: float = 0.2,
              class_aware: bool = True) -> ClusterConfig:
    return ClusterConfig(
        theta0=theta0, lambda_=lambda_, iterations=iterations,
        alpha_schedule=default_alpha_schedule(iterations),
        sort_output=False, class_aware=class_aware,
    )


def run_bench(n_boxes: int, n_clusters: int | None = None,
              thread_list: list[int | None] | None = None,
              iteration_list: list[int] | None = None,
              repeat: int = 3, theta0: float = 0.5, seed: int = 7) -> dict:
    """Time every method/thread/iteration combination on one workload.

    Returns {"workload": {...}, "columns": [...], "rows": [(label,
    [ms per thread column])]}. Sequential baselines are measured once
    and repeated across thread columns.
    """
    if n_clusters is None:
        n_clusters = max(1, n_boxes // 5)
    if thread_list is None:
        thread_list = [1, _kernels.max_threads()]
    if iteration_list is None:
        iteration_list = [1, 2, 3]
    corners, scores, classes = make_workload(n_boxes, n_clusters, seed)
    boxes = boxes_from_arrays(corners, scores, classes)

    rows: list[tuple[str, list[float]]] = []
    nms_ms = time_call(lambda: nms(boxes, theta=theta0, class_aware=False), repeat)
    rows.append(("nms", [nms_ms] * len(thread_list)))
    soft_ms = time_call(
        lambda: soft_nms(boxes, theta=theta0, class_aware=False), repeat)
    rows.append(("soft-nms", [soft_ms] * len(thread_list)))
    for iters in iteration_list:
        config = cp_config(iters, theta0=theta0, class_aware=False)
        cells = []
        for threads in thread_list:
            cells.append(time_call(
                lambda t=threads: propagate_scores(corners, scores, classes, config, threads=t),
                repeat,
            ))
        rows.append((f"cp(iter={iters})", cells))
    return {
        "workload": {
            "boxes": n_boxes, "clusters": n_clusters, "repeat": repeat,
            "theta0": theta0, "seed": seed,
        },
        "columns": [t if t is not None else _kernels.max_threads() for t in thread_list],
        "rows": rows,
    }


def render_bench(result: dict) -> str:
    wl = result["workload"]
    lines = [
        f"workload: {wl['boxes']} boxes in {wl['clusters']} clusters, "
        f"theta0={wl['theta0']}, median of {wl['repeat']} run(s), warm-up excluded",
        "runtime (ms); propagation timings exclude output sorting/filtering",
    ]
    headers = ["method"] + [f"threads={c}" for c in result["columns"]]
    widths = [max(12, len(h)) for h in headers]
    lines.append("  ".join(h.ljust(w) for h, w in zip(headers, widths)))
    for label, cells in result["rows"]:
        cols = [label.ljust(widths[0])]
        for c, w in zip(cells, widths[1:]):
            cols.append(f"{c:.2f}".ljust(w))
        lines.append("  ".join(cols))
    return "\n".join(lines)
