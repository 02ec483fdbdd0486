import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { runCli } from "./runner.js";
import type { ClusterResult, FlatDetections, MethodName, MethodParams } from "./types.js";

export type { ClusterResult, FlatDetections, MethodName, MethodParams } from "./types.js";

const METHODS: MethodName[] = ["cp", "nms", "soft-nms", "snms-wfa"];

const DEFAULTS: Required<Omit<MethodParams, "alpha" | "threads">> & {
  alpha: number[];
  threads: "auto";
} = {
  iou_thresh: 0.6,
  iterations: 2,
  lambda_: 0.2,
  theta_n: 0.8,
  zeta: 2,
  alpha: [1.0, 0.0],
  min_score: 0.001,
  threads: "auto",
  sigma: 0.5,
  soft_mode: "linear",
  class_aware: true,
};

/** Defaults for a method, mirroring the native CLI flag defaults. */
export function defaultParams(method: MethodName): MethodParams {
  if (!METHODS.includes(method)) {
    throw new Error(`unknown method '${method}'; valid methods: ${METHODS.join(", ")}`);
  }
  const p: MethodParams = { iou_thresh: DEFAULTS.iou_thresh, class_aware: true };
  if (method === "cp") {
    Object.assign(p, {
      iterations: DEFAULTS.iterations,
      lambda_: DEFAULTS.lambda_,
      theta_n: DEFAULTS.theta_n,
      zeta: DEFAULTS.zeta,
      alpha: [...DEFAULTS.alpha],
      min_score: DEFAULTS.min_score,
      threads: DEFAULTS.threads,
    });
  } else if (method === "soft-nms" || method === "snms-wfa") {
    Object.assign(p, {
      sigma: DEFAULTS.sigma,
      soft_mode: DEFAULTS.soft_mode,
      min_score: DEFAULTS.min_score,
    });
    if (method === "snms-wfa") {
      p.theta_n = DEFAULTS.theta_n;
    }
  }
  return p;
}

/** Native package version string, queried from the CLI. */
export function version(): string {
  return runCli(["--version"]).trim();
}

function validate(dets: FlatDetections): number {
  const n = dets.scores.length;
  if (dets.boxes.length !== 4 * n) {
    throw new Error(`boxes has ${dets.boxes.length} values, expected ${4 * n}`);
  }
  if (dets.classes.length !== n) {
    throw new Error(`classes has ${dets.classes.length} entries, expected ${n}`);
  }
  if (dets.imageIds !== undefined && dets.imageIds.length !== n) {
    throw new Error(`imageIds has ${dets.imageIds.length} entries, expected ${n}`);
  }
  for (let k = 0; k < n; k++) {
    const x1 = dets.boxes[4 * k];
    const y1 = dets.boxes[4 * k + 1];
    const x2 = dets.boxes[4 * k + 2];
    const y2 = dets.boxes[4 * k + 3];
    if (![x1, y1, x2, y2].every(Number.isFinite)) {
      throw new Error(`row ${k}: non-finite coordinates`);
    }
    if (x2 < x1 || y2 < y1) {
      throw new Error(`row ${k}: negative box extent`);
    }
    const s = dets.scores[k];
    if (!(Number.isFinite(s) && s >= 0 && s <= 1)) {
      throw new Error(`row ${k}: score ${s} outside [0, 1]`);
    }
    const c = dets.classes[k];
    if (!Number.isInteger(c) || c < 0) {
      throw new Error(`row ${k}: class_id must be a non-negative integer`);
    }
  }
  return n;
}

function flagsFor(method: MethodName, params: MethodParams): string[] {
  const known = new Set([
    "iou_thresh", "iterations", "lambda_", "theta_n", "zeta", "alpha",
    "min_score", "threads", "sigma", "soft_mode", "class_aware",
  ]);
  for (const key of Object.keys(params)) {
    if (!known.has(key)) {
      throw new Error(`unknown parameter '${key}'`);
    }
  }
  const flags: string[] = ["--method", method];
  const push = (flag: string, value: unknown) => {
    if (value !== undefined) {
      flags.push(flag, String(value));
    }
  };
  push("--iou-thresh", params.iou_thresh);
  push("--iterations", params.iterations);
  push("--lambda", params.lambda_);
  push("--theta-n", params.theta_n);
  push("--zeta", params.zeta);
  if (params.alpha !== undefined) {
    flags.push("--alpha", params.alpha.join(","));
  }
  push("--min-score", params.min_score);
  push("--threads", params.threads);
  push("--sigma", params.sigma);
  push("--soft-mode", params.soft_mode);
  if (params.class_aware === false) {
    flags.push("--class-agnostic");
  }
  return flags;
}

interface DetRecord {
  image_id: number;
  category_id: number;
  bbox: [number, number, number, number];
  score: number;
}

function coordKey(imageId: number, x1: number, y1: number, x2: number, y2: number,
                  cls: number): string {
  return `${imageId}|${x1},${y1},${x2},${y2}|${cls}`;
}

/**
 * Run one post-processing method on a flat detection set.
 *
 * Input arrays are never mutated and the output stays index-aligned
 * with the input (no sorting; callers sort if desired). Boxes dropped
 * by the method come back with keep=false and score 0. Results are
 * identical to running the native CLI with equivalent flags.
 */
export function clusterArrays(dets: FlatDetections, method: MethodName,
                              params: MethodParams = {}): ClusterResult {
  if (!METHODS.includes(method)) {
    throw new Error(`unknown method '${method}'; valid methods: ${METHODS.join(", ")}`);
  }
  const n = validate(dets);
  const scores = new Array<number>(n).fill(0);
  const keep = new Array<boolean>(n).fill(false);
  if (n === 0) {
    return { scores, keep };
  }

  const records: DetRecord[] = [];
  for (let k = 0; k < n; k++) {
    const x1 = Number(dets.boxes[4 * k]);
    const y1 = Number(dets.boxes[4 * k + 1]);
    const x2 = Number(dets.boxes[4 * k + 2]);
    const y2 = Number(dets.boxes[4 * k + 3]);
    records.push({
      image_id: dets.imageIds ? Number(dets.imageIds[k]) : 0,
      category_id: Number(dets.classes[k]),
      bbox: [x1, y1, x2 - x1, y2 - y1],
      score: Number(dets.scores[k]),
    });
  }

  // original indices by (image, corners, class); duplicates queue in
  // index order
  const lookup = new Map<string, number[]>();
  records.forEach((rec, k) => {
    const key = coordKey(rec.image_id, rec.bbox[0], rec.bbox[1],
                         rec.bbox[0] + rec.bbox[2], rec.bbox[1] + rec.bbox[3],
                         rec.category_id);
    const queue = lookup.get(key);
    if (queue) {
      queue.push(k);
    } else {
      lookup.set(key, [k]);
    }
  });

  const dir = mkdtempSync(join(tmpdir(), "cpcluster-"));
  try {
    const inPath = join(dir, "in.json");
    const outPath = join(dir, "out.json");
    writeFileSync(inPath, JSON.stringify(records));
    runCli(["cluster", "--input", inPath, "--output", outPath,
            ...flagsFor(method, params)]);
    const produced = JSON.parse(readFileSync(outPath, "utf-8")) as DetRecord[];
    for (const rec of produced) {
      const key = coordKey(rec.image_id, rec.bbox[0], rec.bbox[1],
                           rec.bbox[0] + rec.bbox[2], rec.bbox[1] + rec.bbox[3],
                           rec.category_id);
      const queue = lookup.get(key);
      if (!queue || queue.length === 0) {
        throw new Error(`native output contains an unmatched record (${key})`);
      }
      const k = queue.shift() as number;
      scores[k] = rec.score;
      keep[k] = true;
    }
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
  return { scores, keep };
}

export function cpCluster(dets: FlatDetections, params: MethodParams = {}): ClusterResult {
  return clusterArrays(dets, "cp", params);
}

export function nms(dets: FlatDetections, params: MethodParams = {}): ClusterResult {
  return clusterArrays(dets, "nms", params);
}

export function softNms(dets: FlatDetections, params: MethodParams = {}): ClusterResult {
  return clusterArrays(dets, "soft-nms", params);
}

export function snmsWfa(dets: FlatDetections, params: MethodParams = {}): ClusterResult {
  return clusterArrays(dets, "snms-wfa", params);
}
