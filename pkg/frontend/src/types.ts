/** One detection set as flat arrays (corner-format boxes). */
export interface FlatDetections {
  /** Contiguous n×4 corners: x1, y1, x2, y2 per box. */
  boxes: ArrayLike<number>;
  /** Confidence per box, each in [0, 1]. */
  scores: ArrayLike<number>;
  /** Non-negative integer category label per box. */
  classes: ArrayLike<number>;
  /**
   * Optional image id per box. When present, boxes are partitioned by
   * image and processed per image in one native call; when absent the
   * whole set counts as a single image.
   */
  imageIds?: ArrayLike<number>;
}

export type MethodName = "cp" | "nms" | "soft-nms" | "snms-wfa";

/** Parameter names mirror the CLI flags one to one. */
export interface MethodParams {
  iou_thresh?: number;
  iterations?: number;
  lambda_?: number;
  theta_n?: number;
  zeta?: number;
  alpha?: number[];
  min_score?: number;
  threads?: number | "auto";
  sigma?: number;
  soft_mode?: "linear" | "gaussian";
  class_aware?: boolean;
}

export interface ClusterResult {
  /** Updated score per input box, index-aligned (0 for dropped boxes). */
  scores: number[];
  /** True where the box survived post-processing. */
  keep: boolean[];
}
