"""Command-line interface.

Subcommands: cluster, eval, compare, synth, bench. Exit codes: 0
success, 1 usage/flag error, 2 data error (unreadable or invalid
input files). Heavy imports happen inside handlers so --help stays
fast.
"""

from __future__ import annotations

import argparse
import sys
import time

from . import __version__

METHOD_CHOICES = ("cp", "nms", "soft-nms", "snms-wfa")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the CLI contract wants 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _usage_error(parser, message) -> int:
    parser.print_usage(sys.stderr)
    sys.stderr.write(f"{parser.prog}: error: {message}\n")
    return 1


def _data_error(message) -> int:
    sys.stderr.write(f"error: {message}\n")
    return 2


def _add_method_flags(p):
    p.add_argument("--iou-thresh", type=float, default=0.6,
                   help="overlap threshold theta (starting value for cp)")
    p.add_argument("--iterations", type=int, default=2,
                   help="cp message-passing rounds")
    p.add_argument("--lambda", dest="lambda_", type=float, default=0.2,
                   help="cp per-round threshold increment")
    p.add_argument("--theta-n", type=float, default=0.8,
                   help="weaker-friend overlap threshold (cp, snms-wfa)")
    p.add_argument("--zeta", type=int, default=2,
                   help="max times one box may suppress another (cp)")
    p.add_argument("--alpha", type=str, default="1.0,0.0",
                   help="comma list of per-round suppressor blend factors (cp)")
    p.add_argument("--min-score", type=float, default=0.001,
                   help="drop boxes scoring below this after processing")
    p.add_argument("--class-agnostic", action="store_true",
                   help="ignore class labels when building overlaps")
    p.add_argument("--threads", type=str, default="auto",
                   help="worker threads for cp ('auto' or a positive integer)")
    p.add_argument("--sigma", type=float, default=0.5,
                   help="gaussian decay width (soft-nms, snms-wfa)")
    p.add_argument("--soft-mode", choices=("linear", "gaussian"), default="linear",
                   help="soft-nms decay mode")


def _parse_threads(parser, value: str):
    if value == "auto":
        return None
    try:
        n = int(value)
    except ValueError:
        n = 0
    if n < 1:
        raise SystemExit(_usage_error(parser, f"--threads: expected 'auto' or a positive integer, got {value!r}"))
    return n


def _parse_alpha(parser, value: str, iterations: int):
    from .cluster import default_alpha_schedule
    if value == "1.0,0.0" and iterations != 2:
        # Default schedule adapts to the round count: strongest
        # suppressor first, nearest suppressor afterwards.
        return default_alpha_schedule(iterations)
    try:
        alpha = tuple(float(v) for v in value.split(","))
    except ValueError:
        raise SystemExit(_usage_error(parser, f"--alpha: expected a comma list of numbers, got {value!r}"))
    return alpha


def _method_params(parser, args) -> dict:
    params = {
        "iou_thresh": args.iou_thresh,
        "class_aware": not args.class_agnostic,
        "mode": args.soft_mode,
        "sigma": args.sigma,
        "score_thresh": args.min_score,
        "theta_n": args.theta_n,
        "lambda_": args.lambda_,
        "zeta": args.zeta,
        "iterations": args.iterations,
        "min_score": args.min_score,
        "threads": _parse_threads(parser, args.threads),
    }
    if args.iterations < 1:
        raise SystemExit(_usage_error(parser, "--iterations: N must be >= 1"))
    params["alpha"] = _parse_alpha(parser, args.alpha, args.iterations)
    return params


def _range_arg(parser, flag, value):
    parts = value.split("..")
    try:
        if len(parts) == 1:
            lo = hi = int(parts[0])
        elif len(parts) == 2:
            lo, hi = int(parts[0]), int(parts[1])
        else:
            raise ValueError
    except ValueError:
        raise SystemExit(_usage_error(parser, f"{flag}: expected A..B or N, got {value!r}"))
    if lo < 1 or hi < lo:
        raise SystemExit(_usage_error(parser, f"{flag}: invalid range {value!r}"))
    return lo, hi


def cmd_cluster(parser, args) -> int:
    from .errors import ConfigurationError, DataFormatError
    from .evaluation import make_method
    from .io import load_detections, save_detections

    params = _method_params(parser, args)
    try:
        apply = make_method(args.method, params)
    except (ConfigurationError, DataFormatError) as err:
        return _usage_error(parser, str(err))
    try:
        dets = load_detections(args.input)
    except (OSError, DataFormatError) as err:
        return _data_error(err)
    start = time.perf_counter()
    out = {}
    try:
        for image_id in sorted(dets):
            processed = apply(dets[image_id])
            out[image_id] = processed
            print(f"image {image_id}: {len(dets[image_id])} -> {len(processed)} boxes")
    except ConfigurationError as err:
        return _usage_error(parser, str(err))
    wall_ms = (time.perf_counter() - start) * 1000.0
    save_detections(out, args.output)
    print(f"processed {len(dets)} image(s) in {wall_ms:.1f} ms -> {args.output}")
    return 0


def cmd_eval(parser, args) -> int:
    from .errors import DataFormatError
    from .evaluation import evaluate
    from .io import load_detections, load_ground_truth, save_json

    try:
        dets = load_detections(args.dets)
        gt = load_ground_truth(args.gt)
        result = evaluate(dets, gt.by_image)
    except (OSError, DataFormatError) as err:
        return _data_error(err)
    print(f"mAP  {result.map:.4f}")
    print(f"AP50 {result.ap50:.4f}")
    print(f"AP75 {result.ap75:.4f}")
    if args.report:
        save_json(result.to_dict(), args.report)
        print(f"report written to {args.report}")
    return 0


def cmd_compare(parser, args) -> int:
    from .errors import ConfigurationError, DataFormatError
    from .evaluation import VALID_METHODS, compare_methods, make_method
    from .io import load_detections, load_ground_truth, save_json

    names = [m.strip() for m in args.methods.split(",") if m.strip()]
    for name in names:
        if name not in METHOD_CHOICES and name != "cp-cluster":
            return _usage_error(
                parser, f"unknown method {name!r}; valid methods: {', '.join(VALID_METHODS)}")
    params = _method_params(parser, args)
    try:
        for name in names:
            make_method(name, params)
    except ConfigurationError as err:
        return _usage_error(parser, str(err))
    try:
        dets = load_detections(args.dets)
        gt = load_ground_truth(args.gt)
        rows = compare_methods(dets, gt.by_image, [(n, params) for n in names])
    except (OSError, DataFormatError) as err:
        return _data_error(err)
    header = f"{'method':<12} {'mAP':>8} {'AP50':>8} {'AP75':>8} {'time_ms':>10}"
    print(header)
    print("-" * len(header))
    for row in rows:
        print(f"{row['method']:<12} {row['map']:>8.4f} {row['ap50']:>8.4f} "
              f"{row['ap75']:>8.4f} {row['wall_time_ms']:>10.1f}")
    if args.report:
        save_json({"methods": rows}, args.report)
        print(f"report written to {args.report}")
    return 0


def cmd_synth(parser, args) -> int:
    from .errors import DataFormatError
    from .io import SynthSpec, generate_corpus, save_json

    spec = SynthSpec(
        images=args.images,
        objects_per_image=_range_arg(parser, "--objects", args.objects),
        redundancy=_range_arg(parser, "--redundancy", args.redundancy),
        coord_noise=args.noise,
        swap_prob=args.swap_prob,
        score_noise=args.score_noise,
        num_classes=args.classes,
        seed=args.seed,
    )
    try:
        spec.validate()
    except DataFormatError as err:
        return _usage_error(parser, str(err))
    records, gt_doc = generate_corpus(spec)
    try:
        save_json(records, args.out_dets)
        save_json(gt_doc, args.out_gt)
    except OSError as err:
        return _data_error(err)
    print(f"{len(records)} detections over {spec.images} image(s) -> {args.out_dets}")
    print(f"{len(gt_doc['annotations'])} ground-truth boxes -> {args.out_gt}")
    return 0


def cmd_bench(parser, args) -> int:
    from .bench import render_bench, run_bench

    if args.boxes < 1:
        return _usage_error(parser, "--boxes: must be >= 1")
    if args.repeat < 1:
        return _usage_error(parser, "--repeat: must be >= 1")
    clusters = args.clusters
    if clusters is not None and clusters < 1:
        return _usage_error(parser, "--clusters: must be >= 1")
    try:
        thread_list = [
            (None if v.strip() == "auto" else int(v)) for v in args.threads.split(",")
        ]
        iteration_list = [int(v) for v in args.iterations.split(",")]
    except ValueError:
        return _usage_error(parser, "--threads/--iterations: expected comma lists")
    if any(t is not None and t < 1 for t in thread_list):
        return _usage_error(parser, "--threads: entries must be >= 1 or 'auto'")
    if any(i < 1 for i in iteration_list):
        return _usage_error(parser, "--iterations: entries must be >= 1")
    result = run_bench(
        args.boxes, clusters, thread_list, iteration_list,
        repeat=args.repeat, theta0=args.iou_thresh, seed=args.seed,
    )
    print(render_bench(result))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(
        prog="cpcluster",
        description="Confidence-propagation box clustering and NMS baselines.",
    )
    parser.add_argument("--version", action="version", version=f"cpcluster {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("cluster", help="post-process a detection file",
                       formatter_class=fmt)
    p.add_argument("--input", required=True, help="detection file (COCO results JSON)")
    p.add_argument("--output", required=True, help="output detection file")
    p.add_argument("--method", choices=METHOD_CHOICES, default="cp")
    _add_method_flags(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("eval", help="evaluate detections against ground truth",
                       formatter_class=fmt)
    p.add_argument("--dets", required=True, help="detection file")
    p.add_argument("--gt", required=True, help="ground-truth file (COCO annotations JSON)")
    p.add_argument("--report", default=None, help="write a JSON report here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="run several methods and compare metrics",
                       formatter_class=fmt)
    p.add_argument("--dets", required=True, help="raw detection file")
    p.add_argument("--gt", required=True, help="ground-truth file")
    p.add_argument("--methods", default="nms,soft-nms,snms-wfa,cp",
                   help="comma list of methods to run")
    p.add_argument("--report", default=None, help="write a JSON report here")
    _add_method_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("synth", help="generate a seeded synthetic corpus",
                       formatter_class=fmt)
    p.add_argument("--images", type=int, default=200)
    p.add_argument("--objects", default="2..8", help="objects per image (A..B)")
    p.add_argument("--redundancy", default="2..6", help="candidates per object (A..B)")
    p.add_argument("--noise", type=float, default=6.0, help="coordinate jitter scale (px)")
    p.add_argument("--swap-prob", type=float, default=0.3,
                   help="probability the best-overlap candidate is not the top-scored one")
    p.add_argument("--score-noise", type=float, default=0.08, help="score jitter scale")
    p.add_argument("--classes", type=int, default=3, help="number of object classes")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out-dets", required=True)
    p.add_argument("--out-gt", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="time the methods on a synthetic workload",
                       formatter_class=fmt)
    p.add_argument("--boxes", type=int, default=2000)
    p.add_argument("--clusters", type=int, default=None,
                   help="overlap clusters (default: boxes/5)")
    p.add_argument("--threads", default="1,auto", help="comma list of worker counts")
    p.add_argument("--iterations", default="1,2,3", help="comma list of cp round counts")
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--iou-thresh", type=float, default=0.5,
                   help="theta for all methods (0.5 keeps three cp rounds valid)")
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(parser, args)


if __name__ == "__main__":
    sys.exit(main())
