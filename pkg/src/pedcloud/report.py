"""Delimited report files with matplotlib figures rendered alongside them."""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .boxgen import OverlapReport
from .dataset import RatioReport
from .detection import MatchResult
from .projection import CoverageReport

FIG_DPI = 120


def _ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def write_eval_report(report_dir: str, overall: MatchResult, per_frame: dict[str, MatchResult]) -> None:
    """per_frame.csv plus a per-frame metric chart."""
    _ensure_dir(report_dir)
    with open(os.path.join(report_dir, "per_frame.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame_id", "tp", "fp", "fn", "precision", "recall", "f1"])
        for fid, m in per_frame.items():
            w.writerow([fid, m.tp, m.fp, m.fn, f"{m.precision:.6f}", f"{m.recall:.6f}", f"{m.f1:.6f}"])

    fig, ax = plt.subplots(figsize=(8, 4))
    frames = list(per_frame)
    xs = np.arange(len(frames))
    ax.plot(xs, [per_frame[f].precision for f in frames], marker="o", label="precision")
    ax.plot(xs, [per_frame[f].recall for f in frames], marker="s", label="recall")
    ax.plot(xs, [per_frame[f].f1 for f in frames], marker="^", label="f1")
    ax.axhline(overall.f1, color="gray", lw=0.8, ls="--", label=f"overall f1 = {overall.f1:.3f}")
    ax.set_xticks(xs)
    ax.set_xticklabels(frames, rotation=45, ha="right", fontsize=7)
    ax.set_ylim(-0.02, 1.02)
    ax.set_ylabel("metric")
    ax.set_title("detection metrics per frame")
    ax.legend(loc="lower left", fontsize=8)
    fig.tight_layout()
    fig.savefig(os.path.join(report_dir, "per_frame.png"), dpi=FIG_DPI)
    plt.close(fig)


def write_overlap_report(report_dir: str, report: OverlapReport, boxes_w=None, boxes_h=None) -> None:
    """overlap.csv histogram plus the pairwise IOU distribution figure."""
    _ensure_dir(report_dir)
    edges = report.bin_edges
    with open(os.path.join(report_dir, "overlap.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_lo", "bin_hi", "pair_count"])
        for i, count in enumerate(report.histogram):
            w.writerow([edges[i], edges[i + 1], count])
        w.writerow([])
        w.writerow(["mean_iou", f"{report.mean_iou:.6f}"])
        w.writerow(["max_iou", f"{report.max_iou:.6f}"])
        w.writerow(["num_pairs", report.num_pairs])

    ncols = 2 if boxes_w is not None else 1
    fig, axes = plt.subplots(1, ncols, figsize=(5 * ncols, 4))
    ax0 = axes[0] if ncols > 1 else axes
    centers = [(edges[i] + edges[i + 1]) / 2 for i in range(len(report.histogram))]
    ax0.bar(centers, report.histogram, width=0.09, edgecolor="black")
    ax0.axvline(report.mean_iou, color="crimson", ls="--", label=f"mean = {report.mean_iou:.3f}")
    ax0.set_xlabel("pairwise IOU")
    ax0.set_ylabel("pairs")
    ax0.set_title("generated box overlap")
    ax0.legend(fontsize=8)
    if boxes_w is not None:
        axes[1].scatter(boxes_w, boxes_h, s=4, alpha=0.4)
        axes[1].set_xlabel("width (px)")
        axes[1].set_ylabel("height (px)")
        axes[1].set_title("sampled box dimensions")
    fig.tight_layout()
    fig.savefig(os.path.join(report_dir, "overlap.png"), dpi=FIG_DPI)
    plt.close(fig)


def write_coverage_report(report_dir: str, report: CoverageReport) -> None:
    """coverage.csv per box plus a cluster-size histogram with the retention cutoff."""
    _ensure_dir(report_dir)
    with open(os.path.join(report_dir, "coverage.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame_id", "box_index", "label", "point_count", "kept"])
        for b in report.boxes:
            w.writerow([b.frame_id, b.box_index, b.label, b.point_count, int(b.kept)])
        w.writerow([])
        w.writerow(["total_points", report.total_points])
        w.writerow(["labeled_points", report.labeled_points])
        w.writerow(["unlabeled_points", report.unlabeled_points])
        w.writerow(["behind_camera_points", report.behind_camera_points])
        w.writerow(["kept_clusters", report.kept_clusters])
        w.writerow(["discarded_clusters", report.discarded_clusters])

    counts = [b.point_count for b in report.boxes]
    fig, ax = plt.subplots(figsize=(6, 4))
    if counts:
        ax.hist(counts, bins=min(30, max(5, len(counts))), edgecolor="black")
    ax.axvline(1024, color="crimson", ls="--", label="1024-point cutoff")
    ax.set_xlabel("points per box")
    ax.set_ylabel("boxes")
    ax.set_title("transferred cluster sizes")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(os.path.join(report_dir, "coverage.png"), dpi=FIG_DPI)
    plt.close(fig)


def write_training_report(report_dir: str, history: list[dict]) -> None:
    """metrics.csv per epoch plus loss and validation curves."""
    _ensure_dir(report_dir)
    fields = ["epoch", "train_loss", "val_accuracy", "val_precision", "val_recall", "val_f1"]
    with open(os.path.join(report_dir, "metrics.csv"), "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for row in history:
            w.writerow({k: row[k] for k in fields})

    epochs = [r["epoch"] for r in history]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(epochs, [r["train_loss"] for r in history], marker="o", color="tab:blue")
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("train loss")
    ax1.set_title("training loss")
    ax2.plot(epochs, [r["val_precision"] for r in history], marker="o", label="precision")
    ax2.plot(epochs, [r["val_recall"] for r in history], marker="s", label="recall")
    ax2.plot(epochs, [r["val_f1"] for r in history], marker="^", label="f1")
    ax2.set_xlabel("epoch")
    ax2.set_ylim(-0.02, 1.02)
    ax2.set_title("validation metrics")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(os.path.join(report_dir, "curves.png"), dpi=FIG_DPI)
    plt.close(fig)


def write_split_report(report_dir: str, report: RatioReport) -> None:
    """ratio.csv by split/label/source plus a composition chart."""
    _ensure_dir(report_dir)
    with open(os.path.join(report_dir, "ratio.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["split", "label", "source", "count"])
        for split in sorted(report.per_split):
            for (label, source), n in sorted(report.per_split[split].items()):
                w.writerow([split, label, source, n])
        w.writerow([])
        for split in sorted(report.per_split):
            w.writerow([f"{split}_positive_ratio", f"{report.ratio(split):.6f}"])

    splits = sorted(report.per_split)
    pos = [report.counts(s)[0] for s in splits]
    neg = [report.counts(s)[1] for s in splits]
    xs = np.arange(len(splits))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(xs, neg, label="non-pedestrian", color="seagreen")
    ax.bar(xs, pos, bottom=neg, label="pedestrian", color="indianred")
    ax.set_xticks(xs)
    ax.set_xticklabels(splits)
    ax.set_ylabel("clusters")
    ax.set_title("split composition")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(os.path.join(report_dir, "splits.png"), dpi=FIG_DPI)
    plt.close(fig)
