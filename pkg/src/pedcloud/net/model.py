"""Forward pass and hand-written reverse-mode gradients for the point-set classifier.

The network stacks set-abstraction levels: farthest point sampling picks
centroids, ball queries gather fixed-size neighborhoods, coordinates are
re-expressed relative to each centroid, a shared per-point MLP encodes every
neighbor, and max-pooling collapses each neighborhood to one feature vector.
Multi-scale levels run several (radius, K, MLP) branches and concatenate. A
final stage groups all remaining points, applies the global MLP, max-pools to
a single vector, and a dropout-regularized head produces class logits.

Everything runs in float64. Grouping depends only on the input geometry, so
the loss is piecewise differentiable in the parameters and the analytic
gradients below are checkable against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NonFiniteActivationError, ShapeError
from ..model import as_points
from ..sampling import fps
from .params import Linear, NetParams, zeros_like_params
from .specs import NetSpec


def ball_query(points, centroid_index: int, radius: float, k: int) -> np.ndarray:
    """Indices of points within ``radius`` of the centroid, ascending, truncated to k.

    When fewer than k points fall inside the ball, the first found index is
    repeated as padding. The centroid itself is always inside (distance 0).
    """
    pts = as_points(points)
    c = pts[centroid_index]
    d2 = (pts[:, 0] - c[0]) ** 2 + (pts[:, 1] - c[1]) ** 2 + (pts[:, 2] - c[2]) ** 2
    inside = np.nonzero(d2 <= radius * radius)[0]
    if inside.size >= k:
        return inside[:k].astype(np.int64)
    out = np.full(k, inside[0], dtype=np.int64)
    out[: inside.size] = inside
    return out


def _group_neighbors(xyz: np.ndarray, centroid_idx: np.ndarray, radius: float, k: int) -> np.ndarray:
    """Batched ball query: one row of k neighbor indices per centroid."""
    n = xyz.shape[0]
    diff = xyz[centroid_idx][:, None, :] - xyz[None, :, :]
    d2 = (diff ** 2).sum(axis=2)
    idx = np.where(d2 <= radius * radius, np.arange(n)[None, :], n)
    idx.sort(axis=1)
    if idx.shape[1] >= k:
        idx = idx[:, :k]
    else:
        idx = np.concatenate([idx, np.full((idx.shape[0], k - n), n, dtype=idx.dtype)], axis=1)
    first = idx[:, :1]
    return np.where(idx == n, first, idx).astype(np.int64)


@dataclass
class _BranchCache:
    neighbor_idx: np.ndarray          # (k, K)
    acts: list[np.ndarray]            # inputs of each linear, flattened (k*K, dim)
    relu_masks: list[np.ndarray]
    argmax: np.ndarray                # (k, C) winner per pooled feature
    out_width: int


@dataclass
class _LayerCache:
    fps_idx: np.ndarray
    n_points: int
    feat_width: int                   # incoming feature width (0 at the first level)
    branches: list[_BranchCache] = field(default_factory=list)


@dataclass
class ForwardCache:
    layers: list[_LayerCache]
    global_acts: list[np.ndarray]
    global_relu_masks: list[np.ndarray]
    global_argmax: np.ndarray
    head_acts: list[np.ndarray]
    head_relu_masks: list[np.ndarray]
    dropout_masks: list[np.ndarray | None]
    logits: np.ndarray


def _run_mlp(x: np.ndarray, layers: list[Linear]):
    """Shared MLP: linear + bias + ReLU per width. Returns output, inputs, masks."""
    acts = []
    masks = []
    for lin in layers:
        acts.append(x)
        z = x @ lin.w + lin.b
        mask = z > 0.0
        masks.append(mask)
        x = np.where(mask, z, 0.0)
    return x, acts, masks


def _mlp_backward(grad: np.ndarray, layers: list[Linear], acts, masks, grads: list[Linear]):
    """Accumulate parameter grads and return the gradient w.r.t. the MLP input."""
    for i in range(len(layers) - 1, -1, -1):
        grad = grad * masks[i]
        grads[i].w += acts[i].T @ grad
        grads[i].b += grad.sum(axis=0)
        grad = grad @ layers[i].w.T
    return grad


def forward(
    spec: NetSpec,
    params: NetParams,
    points,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, ForwardCache]:
    """Compute class logits for one normalized cluster.

    The cluster must hold exactly ``spec.input_points`` points. Dropout runs
    only in train mode (and only when a generator is supplied), with inverted
    scaling so evaluation needs no rescale.
    """
    pts = as_points(points)
    if pts.shape[0] != spec.input_points:
        raise ShapeError(f"expected {spec.input_points} points, got {pts.shape[0]}")

    xyz = pts
    feats: np.ndarray | None = None
    layer_caches: list[_LayerCache] = []
    for layer, branch_params in zip(spec.sa_layers, params.sa):
        k = layer.num_centroids
        fps_idx = fps(xyz, k)
        centroids = xyz[fps_idx]
        cache = _LayerCache(
            fps_idx=fps_idx,
            n_points=xyz.shape[0],
            feat_width=0 if feats is None else feats.shape[1],
        )
        outs = []
        for branch, layers in zip(layer.branches, branch_params):
            nidx = _group_neighbors(xyz, fps_idx, branch.radius, branch.max_neighbors)
            rel = xyz[nidx] - centroids[:, None, :]
            x = rel if feats is None else np.concatenate([rel, feats[nidx]], axis=2)
            flat = x.reshape(k * branch.max_neighbors, -1)
            out, acts, masks = _run_mlp(flat, layers)
            width = out.shape[1]
            grouped = out.reshape(k, branch.max_neighbors, width)
            argmax = grouped.argmax(axis=1)
            pooled = np.take_along_axis(grouped, argmax[:, None, :], axis=1)[:, 0, :]
            cache.branches.append(_BranchCache(nidx, acts, masks, argmax, width))
            outs.append(pooled)
        feats = outs[0] if len(outs) == 1 else np.concatenate(outs, axis=1)
        xyz = centroids
        layer_caches.append(cache)

    g_in = np.concatenate([xyz, feats], axis=1)
    g_out, g_acts, g_masks = _run_mlp(g_in, params.global_mlp)
    g_argmax = g_out.argmax(axis=0)
    pooled = g_out[g_argmax, np.arange(g_out.shape[1])]

    h = pooled[None, :]
    head_acts: list[np.ndarray] = []
    head_masks: list[np.ndarray] = []
    drop_masks: list[np.ndarray | None] = []
    apply_dropout = train_mode and rng is not None and spec.dropout_keep < 1.0
    for i, lin in enumerate(params.head):
        head_acts.append(h)
        z = h @ lin.w + lin.b
        if i < len(params.head) - 1:
            mask = z > 0.0
            head_masks.append(mask)
            h = np.where(mask, z, 0.0)
            if apply_dropout:
                dmask = (rng.random(h.shape) < spec.dropout_keep).astype(np.float64)
                h = h * dmask / spec.dropout_keep
                drop_masks.append(dmask)
            else:
                drop_masks.append(None)
        else:
            h = z

    logits = h[0]
    if not np.isfinite(logits).all():
        raise NonFiniteActivationError("forward pass produced non-finite logits")
    return logits, ForwardCache(
        layers=layer_caches,
        global_acts=g_acts,
        global_relu_masks=g_masks,
        global_argmax=g_argmax,
        head_acts=head_acts,
        head_relu_masks=head_masks,
        dropout_masks=drop_masks,
        logits=logits,
    )


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


def _backward(
    spec: NetSpec,
    params: NetParams,
    cache: ForwardCache,
    dlogits: np.ndarray,
    grads: NetParams,
) -> None:
    """Accumulate parameter gradients for one sample into ``grads``."""
    # Head: dropout and ReLU sit between the linears, none after the last one.
    grad = dlogits[None, :]
    for i in range(len(params.head) - 1, -1, -1):
        if i < len(params.head) - 1:
            dmask = cache.dropout_masks[i]
            if dmask is not None:
                grad = grad * dmask / spec.dropout_keep
            grad = grad * cache.head_relu_masks[i]
        grads.head[i].w += cache.head_acts[i].T @ grad
        grads.head[i].b += grad[0]
        grad = grad @ params.head[i].w.T

    # Global stage: un-pool to the winning point per feature, then back through the MLP.
    n_last = cache.global_acts[0].shape[0]
    g_grad = np.zeros((n_last, grad.shape[1]))
    g_grad[cache.global_argmax, np.arange(grad.shape[1])] = grad[0]
    g_grad = _mlp_backward(g_grad, params.global_mlp, cache.global_acts, cache.global_relu_masks, grads.global_mlp)
    dfeats = g_grad[:, 3:]  # coordinate columns are constants

    # Set-abstraction levels in reverse; gradients flow through pooled features only.
    for li in range(len(spec.sa_layers) - 1, -1, -1):
        layer = spec.sa_layers[li]
        lcache = cache.layers[li]
        prev_width = lcache.feat_width
        dprev = np.zeros((lcache.n_points, prev_width)) if prev_width else None
        col = 0
        for bi, branch in enumerate(layer.branches):
            bcache = lcache.branches[bi]
            width = bcache.out_width
            dpool = dfeats[:, col: col + width]
            col += width
            k = layer.num_centroids
            dgrouped = np.zeros((k, branch.max_neighbors, width))
            rows = np.arange(k)[:, None]
            cols = np.arange(width)[None, :]
            dgrouped[rows, bcache.argmax, cols] = dpool
            flat = dgrouped.reshape(k * branch.max_neighbors, width)
            dinput = _mlp_backward(flat, params.sa[li][bi], bcache.acts, bcache.relu_masks, grads.sa[li][bi])
            if dprev is not None:
                dfeat_part = dinput[:, 3:].reshape(k, branch.max_neighbors, prev_width)
                np.add.at(dprev, bcache.neighbor_idx, dfeat_part)
        if dprev is None:
            break
        dfeats = dprev


def loss_and_grad(
    spec: NetSpec,
    params: NetParams,
    batch: list[tuple[np.ndarray, int]],
    class_weights=None,
    rng: np.random.Generator | None = None,
) -> tuple[float, NetParams]:
    """Mean weighted cross-entropy over a batch plus gradients for every parameter.

    Passing ``rng`` enables train-mode dropout; without it the forward pass is
    deterministic, which is what the finite-difference check relies on.
    """
    if not batch:
        raise ValueError("batch must be nonempty")
    if class_weights is not None and len(class_weights) != spec.num_classes:
        raise ValueError("class_weights length must equal num_classes")
    grads = zeros_like_params(params)
    total = 0.0
    inv_b = 1.0 / len(batch)
    for pts, label in batch:
        label = int(label)
        if not (0 <= label < spec.num_classes):
            raise ValueError(f"label {label} out of range for {spec.num_classes} classes")
        logits, cache = forward(spec, params, pts, train_mode=rng is not None, rng=rng)
        z = logits - logits.max()
        lse = np.log(np.exp(z).sum())
        prob = np.exp(z - lse)
        w = 1.0 if class_weights is None else float(class_weights[label])
        total += w * (lse - z[label])
        dlogits = prob.copy()
        dlogits[label] -= 1.0
        _backward(spec, params, cache, w * inv_b * dlogits, grads)
    return total * inv_b, grads
