"""Command-line entry point for the full pipeline.

Subcommands: eval, npbb, transfer, preprocess, split, binarize, train,
predict, review. Diagnostics go to stderr, data to files or stdout. Exit
codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from . import io
from .boxgen import (
    GenConfig,
    compute_npbb_count,
    fit_box_stats,
    frame_rng_seed,
    generate_npbb_set,
    overlap_report,
)
from .dataset import ClassRegroup, SplitSpec, binarize_classes, ratio_report, split_dataset, training_entries
from .detection import MatchResult, filter_detections, match_and_score
from .errors import PedcloudError
from .model import CLUSTER_LABELS, ClusterManifest, ManifestEntry, PointCloud
from .projection import coverage_report, transfer_labels
from .sampling import AugmentSpec, SampleSpec, apply_sample_spec, normalize
from .net import (
    TrainSpec,
    default_msg_spec,
    default_ssg_spec,
    evaluate,
    forward,
    load_params,
    save_params,
    softmax,
    spec_from_dict,
    train,
)


def _header(args, extra: str = "") -> None:
    if not getattr(args, "quiet", False):
        seed = getattr(args, "seed", None)
        bits = [f"pedcloud {args.command}"]
        if seed is not None:
            bits.append(f"seed={seed}")
        bits.append(f"threads={getattr(args, 'threads', 1)}")
        if extra:
            bits.append(extra)
        print("  ".join(bits), file=sys.stderr)


def _say(args, msg: str) -> None:
    if not getattr(args, "quiet", False):
        print(msg, file=sys.stderr)


def _write_json(doc, out_path: str | None) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# eval


def cmd_eval(args) -> int:
    _header(args)
    preds = io.read_detections(args.pred)
    gts = io.read_detections(args.gt)
    if args.conf_thresh is not None:
        preds = {f: filter_detections(b, args.conf_thresh, args.nms_iou) for f, b in preds.items()}
    frames = sorted(set(preds) | set(gts))
    per_frame: dict[str, MatchResult] = {}
    tp = fp = fn = 0
    matches = []
    for f in frames:
        m = match_and_score(preds.get(f, []), gts.get(f, []), iou_thresh=args.iou_thresh)
        per_frame[f] = m
        tp, fp, fn = tp + m.tp, fp + m.fp, fn + m.fn
        matches.extend(m.matches)
    overall = MatchResult(tp=tp, fp=fp, fn=fn, matches=matches)
    doc = {
        "tp": overall.tp,
        "fp": overall.fp,
        "fn": overall.fn,
        "precision": overall.precision,
        "recall": overall.recall,
        "f1": overall.f1,
        "frames": {
            f: {
                "tp": m.tp,
                "fp": m.fp,
                "fn": m.fn,
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
            }
            for f, m in per_frame.items()
        },
    }
    _write_json(doc, args.out)
    if args.report_dir:
        from .report import write_eval_report

        write_eval_report(args.report_dir, overall, per_frame)
        _say(args, f"report written to {args.report_dir}")
    return 0


# ---------------------------------------------------------------------------
# npbb


def cmd_npbb(args) -> int:
    _header(args)
    pbbs_by_frame = io.read_detections(args.pbb)
    if not pbbs_by_frame:
        print("no frames in the pedestrian detections file", file=sys.stderr)
        return 1
    all_pbbs = [b for boxes in pbbs_by_frame.values() for b in boxes]
    if not all_pbbs:
        print("no pedestrian boxes to fit statistics to", file=sys.stderr)
        return 1
    target = fit_box_stats(all_pbbs)
    if args.count is not None:
        total = args.count
    else:
        total = compute_npbb_count(len(all_pbbs), args.pixel_fraction)
    frames = list(pbbs_by_frame)
    base, rem = divmod(total, len(frames))
    _say(args, f"generating {total} boxes over {len(frames)} frames (target w {target.mean_w:.1f} h {target.mean_h:.1f})")

    out: dict[str, list] = {}
    for i, frame in enumerate(frames):
        count = base + (1 if i < rem else 0)
        config = GenConfig(
            target=target,
            count=count,
            max_pairwise_iou=args.max_pairwise_iou,
            max_pbb_iou=args.max_pbb_iou,
            rng_seed=frame_rng_seed(args.seed, frame),
            max_attempts_per_box=args.max_attempts,
        )
        out[frame] = generate_npbb_set(config, pbbs_by_frame[frame], args.image_width, args.image_height)
    io.save_detections(out, args.out)
    if args.report_dir:
        from .report import write_overlap_report

        boxes = [b for bs in out.values() for b in bs]
        write_overlap_report(
            args.report_dir,
            overlap_report(boxes),
            boxes_w=[b.width for b in boxes],
            boxes_h=[b.height for b in boxes],
        )
        _say(args, f"report written to {args.report_dir}")
    return 0


# ---------------------------------------------------------------------------
# transfer


def _load_clouds(cloud_dir: str, scene: str) -> list[PointCloud]:
    clouds = []
    for name in sorted(os.listdir(cloud_dir)):
        if not name.endswith(".ply"):
            continue
        cloud = io.read_point_cloud(os.path.join(cloud_dir, name))
        if not cloud.frame_id:
            cloud.frame_id = os.path.splitext(name)[0]
        if not cloud.scene_id:
            cloud.scene_id = scene
        clouds.append(cloud)
    return clouds


def cmd_transfer(args) -> int:
    _header(args)
    camera = io.read_calibration(args.calib)
    pbbs = io.read_detections(args.pbb)
    npbbs = io.read_detections(args.npbb) if args.npbb else {}
    clouds = _load_clouds(args.clouds, args.scene)
    if not clouds:
        print(f"no .ply clouds found in {args.clouds}", file=sys.stderr)
        return 1
    os.makedirs(args.out_dir, exist_ok=True)

    def run(cloud: PointCloud):
        return transfer_labels(
            cloud,
            pbbs.get(cloud.frame_id, []),
            npbbs.get(cloud.frame_id, []),
            camera,
            min_points=args.min_points,
            source=args.source,
        )

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            per_cloud = list(pool.map(run, clouds))
    else:
        per_cloud = [run(c) for c in clouds]

    entries = []
    for cloud, clusters in zip(clouds, per_cloud):
        for j, cluster in enumerate(clusters):
            cid = f"{cloud.frame_id}-c{j:03d}"
            rel_path = f"{cid}.ply"
            io.save_point_cloud(
                PointCloud(cluster.points, frame_id=cluster.frame_id, scene_id=cluster.scene_id),
                os.path.join(args.out_dir, rel_path),
            )
            entries.append(
                ManifestEntry(
                    cluster_id=cid,
                    path=rel_path,
                    label=cluster.label,
                    scene_id=cluster.scene_id,
                    frame_id=cluster.frame_id,
                    source=cluster.source,
                    num_points=len(cluster),
                    source_box=cluster.source_box,
                )
            )
    manifest_path = args.manifest or os.path.join(args.out_dir, "manifest.json")
    io.save_manifest(ClusterManifest(entries=entries), manifest_path)
    _say(args, f"{len(entries)} clusters from {len(clouds)} clouds -> {manifest_path}")

    if args.report_dir:
        from .report import write_coverage_report

        boxes_by_frame = {
            f: pbbs.get(f, []) + npbbs.get(f, []) for f in {c.frame_id for c in clouds}
        }
        write_coverage_report(
            args.report_dir, coverage_report(clouds, boxes_by_frame, camera, min_points=args.min_points)
        )
        _say(args, f"report written to {args.report_dir}")
    return 0


# ---------------------------------------------------------------------------
# preprocess


def cmd_preprocess(args) -> int:
    _header(args, extra=f"method={args.method}")
    manifest = io.load_manifest(args.manifest)
    spec = SampleSpec(
        method=args.method,
        target_count=args.points,
        voxel_size=args.voxel_size,
        rng_seed=args.seed,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    new_entries = []
    for e in manifest.entries:
        cloud = io.read_point_cloud(io.resolve_entry_path(args.manifest, e.path))
        pts = normalize(apply_sample_spec(cloud.points, spec))
        rel_path = f"{e.cluster_id}.ply"
        io.save_point_cloud(
            PointCloud(pts, frame_id=e.frame_id, scene_id=e.scene_id),
            os.path.join(args.out_dir, rel_path),
        )
        new_entries.append(replace(e, path=rel_path, num_points=pts.shape[0]))
    out_manifest = args.out_manifest or os.path.join(args.out_dir, "manifest.json")
    io.save_manifest(ClusterManifest(entries=new_entries, schema_version=manifest.schema_version), out_manifest)
    _say(args, f"{len(new_entries)} clusters preprocessed -> {out_manifest}")
    return 0


# ---------------------------------------------------------------------------
# split


def cmd_split(args) -> int:
    _header(args)
    manifest = io.load_manifest(args.manifest)
    spec = SplitSpec(
        test_scenes=args.test_scene or [],
        train_fraction=args.train_frac,
        rng_seed=args.seed,
    )
    result = split_dataset(manifest, spec)
    out_path = args.out or args.manifest
    io.save_manifest(result, out_path, check_files=False)
    report = ratio_report(result)
    for split in ("train", "val", "test"):
        pos, neg = report.counts(split)
        _say(args, f"{split}: {pos} pedestrian / {neg} non-pedestrian (ratio {report.ratio(split):.3f})")
    if args.report_dir:
        from .report import write_split_report

        write_split_report(args.report_dir, report)
        _say(args, f"report written to {args.report_dir}")
    return 0


# ---------------------------------------------------------------------------
# binarize


def cmd_binarize(args) -> int:
    _header(args)
    with open(args.listing, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "class" not in rows[0]:
        print("listing must be a CSV with a 'class' column", file=sys.stderr)
        return 1
    regroup = ClassRegroup(positive_classes=[c for c in args.positive.split(",") if c])
    result = binarize_classes([r["class"] for r in rows], regroup)
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            fieldnames = list(rows[0].keys()) + ["binary"]
            w = csv.DictWriter(fh, fieldnames=fieldnames)
            w.writeheader()
            for row, label in zip(rows, result.labels):
                w.writerow({**row, "binary": label})
    _write_json({"positive": result.positive, "negative": result.negative}, None)
    return 0


# ---------------------------------------------------------------------------
# train / predict


def _label_index(label: str) -> int:
    return CLUSTER_LABELS.index(label)


def _load_split(manifest: ClusterManifest, manifest_path: str, split: str):
    samples = []
    for e in training_entries(manifest, split):
        cloud = io.read_point_cloud(io.resolve_entry_path(manifest_path, e.path))
        samples.append((cloud.points, _label_index(e.label)))
    return samples


def _net_spec(args, input_points: int | None = None):
    if args.net_spec:
        with open(args.net_spec, encoding="utf-8") as fh:
            return spec_from_dict(json.load(fh))
    if args.msg:
        return default_msg_spec(input_points=input_points or 1024)
    return default_ssg_spec(input_points=input_points or 1024)


def cmd_train(args) -> int:
    _header(args, extra=f"batch={args.batch_size} epochs={args.epochs}")
    manifest = io.load_manifest(args.manifest)
    train_set = _load_split(manifest, args.manifest, "train")
    val_set = _load_split(manifest, args.manifest, "val")
    if not train_set or not val_set:
        print("manifest has no train/val splits; run `pedcloud split` first", file=sys.stderr)
        return 1
    input_points = train_set[0][0].shape[0]
    spec = _net_spec(args, input_points=input_points)
    augment_spec = AugmentSpec(rng_seed=args.seed) if args.augment else None
    tspec = TrainSpec(
        batch_size=args.batch_size,
        epochs=args.epochs,
        learning_rate=args.lr,
        optimizer=args.optimizer,
        augment=augment_spec,
        rng_seed=args.seed,
        workers=args.threads,
    )
    params, history = train(spec, train_set, val_set, tspec)
    save_params(spec, params, args.out)
    _say(args, f"checkpoint -> {args.out}")
    best = max(history, key=lambda r: r["val_f1"])
    _say(args, f"best val f1 {best['val_f1']:.4f} at epoch {best['epoch']}")

    report_dir = args.report_dir or os.path.dirname(os.path.abspath(args.out))
    from .report import write_training_report

    write_training_report(report_dir, history)
    _say(args, f"metrics log -> {report_dir}")

    if args.eval_test:
        test_set = _load_split(manifest, args.manifest, "test")
        if test_set:
            metrics = evaluate(spec, params, test_set)
            print(metrics.table())
        else:
            _say(args, "no test split to evaluate")
    return 0


def cmd_predict(args) -> int:
    _header(args)
    spec, params = load_params(args.checkpoint)
    results = []
    for path in args.clusters:
        cloud = io.read_point_cloud(path)
        logits, _ = forward(spec, params, cloud.points, train_mode=False)
        probs = softmax(logits)
        pred = int(np.argmax(logits))
        results.append(
            {
                "path": path,
                "cluster_id": os.path.splitext(os.path.basename(path))[0],
                "label": CLUSTER_LABELS[pred] if spec.num_classes == 2 else str(pred),
                "probability": float(probs[pred]),
                "prob_pedestrian": float(probs[1]) if spec.num_classes == 2 else None,
            }
        )
    _write_json(results, args.out)
    return 0


# ---------------------------------------------------------------------------
# review


def cmd_review(args) -> int:
    if args.review_command != "serve":
        print("usage: pedcloud review serve --manifest M [--port P]", file=sys.stderr)
        return 2
    _header(args, extra=f"port={args.port}")
    from .review import serve

    serve(args.manifest, host=args.host, port=args.port, static_dir=args.static_dir)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pedcloud", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    p = sub.add_parser("eval", parents=[common], help="score detections against ground truth")
    p.add_argument("--pred", required=True, help="predicted detections (JSON-lines)")
    p.add_argument("--gt", required=True, help="ground-truth detections (JSON-lines)")
    p.add_argument("--iou-thresh", type=float, default=0.5)
    p.add_argument("--conf-thresh", type=float, default=None, help="apply confidence filtering first")
    p.add_argument("--nms-iou", type=float, default=0.3)
    p.add_argument("--out", default=None, help="report JSON path (default stdout)")
    p.add_argument("--report-dir", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("npbb", parents=[common], help="generate non-pedestrian boxes")
    p.add_argument("--pbb", required=True, help="pedestrian detections (JSON-lines)")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--count", type=int, default=None, help="total boxes to generate")
    group.add_argument("--pixel-fraction", type=float, default=None, help="pedestrian pixel share")
    p.add_argument("--max-pairwise-iou", type=float, default=None)
    p.add_argument("--max-pbb-iou", type=float, default=0.1)
    p.add_argument("--max-attempts", type=int, default=1000)
    p.add_argument("--image-width", type=int, default=1224)
    p.add_argument("--image-height", type=int, default=1024)
    p.add_argument("--out", required=True, help="output detections (JSON-lines)")
    p.add_argument("--report-dir", default=None)
    p.set_defaults(func=cmd_npbb)

    p = sub.add_parser("transfer", parents=[common], help="back-project 2D boxes into 3D clusters")
    p.add_argument("--clouds", required=True, help="directory of .ply point clouds")
    p.add_argument("--pbb", required=True, help="pedestrian detections (JSON-lines)")
    p.add_argument("--npbb", default=None, help="non-pedestrian detections (JSON-lines)")
    p.add_argument("--calib", required=True, help="calibration JSON")
    p.add_argument("--out-dir", required=True, help="directory for cluster .ply files")
    p.add_argument("--manifest", default=None, help="manifest path (default OUT_DIR/manifest.json)")
    p.add_argument("--min-points", type=int, default=1024)
    p.add_argument("--source", choices=["auto", "manual"], default="auto")
    p.add_argument("--scene", default="", help="scene id for clouds that do not carry one")
    p.add_argument("--report-dir", default=None)
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("preprocess", parents=[common], help="downsample and normalize clusters")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--out-manifest", default=None, help="default OUT_DIR/manifest.json")
    p.add_argument("--method", choices=["random", "voxel_grid", "fps"], default="fps")
    p.add_argument("--points", type=int, default=1024)
    p.add_argument("--voxel-size", type=float, default=0.1)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("split", parents=[common], help="assign train/val/test splits")
    p.add_argument("--manifest", required=True)
    p.add_argument("--test-scene", action="append", default=None, help="held-out scene (repeatable)")
    p.add_argument("--train-frac", type=float, default=0.8)
    p.add_argument("--out", default=None, help="output manifest (default: in place)")
    p.add_argument("--report-dir", default=None)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("binarize", parents=[common], help="regroup a class listing into positive/negative")
    p.add_argument("--listing", required=True, help="CSV with a 'class' column")
    p.add_argument("--positive", required=True, help="comma-separated positive class names")
    p.add_argument("--out", default=None, help="relabeled CSV output")
    p.set_defaults(func=cmd_binarize)

    p = sub.add_parser("train", parents=[common], help="train the classifier from a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--net-spec", default=None, help="architecture JSON (default: built-in single-scale)")
    p.add_argument("--msg", action="store_true", help="use the multi-scale architecture")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--optimizer", choices=["adam", "sgd_momentum"], default="adam")
    p.add_argument("--augment", action="store_true", help="rotation plus jitter augmentation (off by default)")
    p.add_argument("--out", required=True, help="checkpoint JSON path")
    p.add_argument("--eval-test", action="store_true", help="evaluate the test split after training")
    p.add_argument("--report-dir", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", parents=[common], help="classify preprocessed cluster .ply files")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", default=None, help="predictions JSON (default stdout)")
    p.add_argument("clusters", nargs="+", help="cluster .ply paths")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("review", parents=[common], help="manual validation service")
    p.add_argument("review_command", choices=["serve"])
    p.add_argument("--manifest", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8123)
    p.add_argument("--static-dir", default=None, help="browser UI bundle to serve at /")
    p.set_defaults(func=cmd_review)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (PedcloudError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1


if __name__ == "__main__":
    sys.exit(main())
