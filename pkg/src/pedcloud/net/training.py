"""Minibatch training and evaluation for the point-set classifier."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import DivergedLossError, EmptyDatasetError, NonFiniteActivationError
from ..sampling import augment
from .model import forward, loss_and_grad, softmax
from .params import NetParams, add_scaled, init_params, zeros_like_params
from .specs import NetSpec, TrainSpec

log = logging.getLogger(__name__)

# Class index convention: 0 = negative (non-pedestrian), 1 = positive (pedestrian).
POSITIVE_CLASS = 1


class _Adam:
    def __init__(self, tspec: TrainSpec, params: NetParams):
        self.lr = tspec.learning_rate
        self.b1, self.b2, self.eps = tspec.adam_beta1, tspec.adam_beta2, tspec.adam_eps
        self.m = [np.zeros_like(a) for a in params.iter_arrays()]
        self.v = [np.zeros_like(a) for a in params.iter_arrays()]
        self.t = 0

    def step(self, params: NetParams, grads: NetParams) -> None:
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for a, g, m, v in zip(params.iter_arrays(), grads.iter_arrays(), self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            a -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class _SgdMomentum:
    def __init__(self, tspec: TrainSpec, params: NetParams):
        self.lr = tspec.learning_rate
        self.mu = tspec.momentum
        self.vel = [np.zeros_like(a) for a in params.iter_arrays()]

    def step(self, params: NetParams, grads: NetParams) -> None:
        for a, g, v in zip(params.iter_arrays(), grads.iter_arrays(), self.vel):
            v *= self.mu
            v -= self.lr * g
            a += v


@dataclass
class EvalMetrics:
    """Classification metrics; precision, recall, f1 target the positive class."""

    accuracy: float
    avg_class_accuracy: float
    precision: float
    recall: float
    f1: float
    confusion_matrix: np.ndarray  # rows = truth, cols = prediction

    def table(self) -> str:
        """Percentages to one decimal, the customary reporting format."""
        header = f"{'Precision':>10} {'Recall':>10} {'F1':>10}"
        row = f"{100 * self.precision:>10.1f} {100 * self.recall:>10.1f} {100 * self.f1:>10.1f}"
        return header + "\n" + row


def metrics_from_confusion(confusion: np.ndarray) -> EvalMetrics:
    confusion = np.asarray(confusion, dtype=np.int64)
    total = confusion.sum()
    correct = np.trace(confusion)
    accuracy = correct / total if total else 0.0
    recalls = []
    for c in range(confusion.shape[0]):
        support = confusion[c].sum()
        if support:
            recalls.append(confusion[c, c] / support)
    avg_class_accuracy = float(np.mean(recalls)) if recalls else 0.0
    tp = confusion[POSITIVE_CLASS, POSITIVE_CLASS]
    fp = confusion[:, POSITIVE_CLASS].sum() - tp
    fn = confusion[POSITIVE_CLASS].sum() - tp
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvalMetrics(
        accuracy=float(accuracy),
        avg_class_accuracy=avg_class_accuracy,
        precision=float(precision),
        recall=float(recall),
        f1=float(f1),
        confusion_matrix=confusion,
    )


def predict_proba(spec: NetSpec, params: NetParams, points) -> np.ndarray:
    logits, _ = forward(spec, params, points, train_mode=False)
    return softmax(logits)


def evaluate(spec: NetSpec, params: NetParams, test_set) -> EvalMetrics:
    """Argmax-of-logits evaluation over (points, label) pairs."""
    if not test_set:
        raise EmptyDatasetError("evaluation set is empty")
    ncls = spec.num_classes
    confusion = np.zeros((ncls, ncls), dtype=np.int64)
    for pts, label in test_set:
        logits, _ = forward(spec, params, pts, train_mode=False)
        confusion[int(label), int(np.argmax(logits))] += 1
    return metrics_from_confusion(confusion)


def _augmented(sample, aug, seed_parts):
    pts, label = sample
    rng = np.random.default_rng(np.random.SeedSequence(seed_parts))
    return augment(pts, aug, rng), label


def _batch_grads(spec, params, batch, class_weights, seed_parts, workers):
    if workers <= 1 or len(batch) == 1:
        rng = np.random.default_rng(np.random.SeedSequence(seed_parts))
        return loss_and_grad(spec, params, batch, class_weights, rng=rng)
    # Data-parallel mode: chunk means reweighted back to the batch mean.
    chunks = [(ci, batch[ci::workers]) for ci in range(workers)]
    chunks = [(ci, c) for ci, c in chunks if c]

    def run(arg):
        ci, c = arg
        rng = np.random.default_rng(np.random.SeedSequence(seed_parts + [ci]))
        return loss_and_grad(spec, params, c, class_weights, rng=rng)

    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        results = list(pool.map(run, chunks))
    total = zeros_like_params(params)
    loss = 0.0
    for (l, g), (_, chunk) in zip(results, chunks):
        w = len(chunk) / len(batch)
        loss += l * w
        add_scaled(total, g, w)
    return loss, total


def train(
    spec: NetSpec,
    train_set,
    val_set,
    tspec: TrainSpec,
    initial_params: NetParams | None = None,
) -> tuple[NetParams, list[dict]]:
    """Minibatch optimization returning the best-validation-F1 parameters.

    Shuffling, dropout, and augmentation all derive from tspec.rng_seed, so a
    serial rerun with the same seed reproduces the metrics log exactly.
    Augmentation, when configured, is redrawn per sample per epoch.
    """
    if not train_set:
        raise EmptyDatasetError("training set is empty")
    if not val_set:
        raise EmptyDatasetError("validation set is empty")
    params = initial_params.copy() if initial_params is not None else init_params(spec, tspec.rng_seed)
    opt = _Adam(tspec, params) if tspec.optimizer == "adam" else _SgdMomentum(tspec, params)
    shuffle_rng = np.random.default_rng(np.random.SeedSequence([tspec.rng_seed, 0x5F0]))

    history: list[dict] = []
    best_params = params.copy()
    best_f1 = -1.0
    for epoch in range(tspec.epochs):
        order = shuffle_rng.permutation(len(train_set))
        epoch_loss = 0.0
        for b0 in range(0, len(order), tspec.batch_size):
            chunk = order[b0: b0 + tspec.batch_size]
            if tspec.augment is not None:
                batch = [
                    _augmented(train_set[i], tspec.augment, [tspec.augment.rng_seed, epoch, int(i)])
                    for i in chunk
                ]
            else:
                batch = [train_set[i] for i in chunk]
            seed_parts = [tspec.rng_seed, 0xD0, epoch, b0]
            try:
                loss, grads = _batch_grads(spec, params, batch, tspec.class_weights, seed_parts, tspec.workers)
            except NonFiniteActivationError as exc:
                raise DivergedLossError(
                    f"training diverged at epoch {epoch} batch {b0 // tspec.batch_size}: {exc}",
                    epoch=epoch,
                    batch=b0 // tspec.batch_size,
                ) from exc
            if not np.isfinite(loss):
                raise DivergedLossError(
                    f"non-finite loss {loss} at epoch {epoch} batch {b0 // tspec.batch_size}",
                    epoch=epoch,
                    batch=b0 // tspec.batch_size,
                )
            opt.step(params, grads)
            epoch_loss += loss * len(batch)
        epoch_loss /= len(train_set)
        metrics = evaluate(spec, params, val_set)
        history.append(
            {
                "epoch": epoch,
                "train_loss": epoch_loss,
                "val_accuracy": metrics.accuracy,
                "val_precision": metrics.precision,
                "val_recall": metrics.recall,
                "val_f1": metrics.f1,
            }
        )
        log.info(
            "epoch %d: loss %.4f val_f1 %.4f", epoch, epoch_loss, metrics.f1
        )
        if metrics.f1 > best_f1:
            best_f1 = metrics.f1
            best_params = params.copy()
    return best_params, history
