"""Learnable parameters: initialization, traversal, and JSON checkpoints."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..errors import ParseError, SchemaVersionError, ShapeError
from ..model import PARAMS_SCHEMA_VERSION
from .specs import NetSpec, spec_from_dict, spec_to_dict


@dataclass
class Linear:
    """Weights (in, out) and bias (out,) of one affine layer."""

    w: np.ndarray
    b: np.ndarray


@dataclass
class NetParams:
    """All learnable arrays, organized as [layer][branch][mlp] plus global and head stacks."""

    sa: list[list[list[Linear]]]
    global_mlp: list[Linear]
    head: list[Linear]

    def iter_linears(self):
        for layer in self.sa:
            for branch in layer:
                yield from branch
        yield from self.global_mlp
        yield from self.head

    def iter_arrays(self):
        for lin in self.iter_linears():
            yield lin.w
            yield lin.b

    def copy(self) -> "NetParams":
        return NetParams(
            sa=[[[Linear(l.w.copy(), l.b.copy()) for l in br] for br in layer] for layer in self.sa],
            global_mlp=[Linear(l.w.copy(), l.b.copy()) for l in self.global_mlp],
            head=[Linear(l.w.copy(), l.b.copy()) for l in self.head],
        )

    def all_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in self.iter_arrays())


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> Linear:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
    return Linear(w=w, b=np.zeros(fan_out))


def _mlp(rng: np.random.Generator, in_dim: int, widths) -> list[Linear]:
    layers = []
    for width in widths:
        layers.append(_glorot(rng, in_dim, width))
        in_dim = width
    return layers


def init_params(spec: NetSpec, seed: int = 0) -> NetParams:
    """Seeded uniform Glorot initialization, zero biases."""
    rng = np.random.default_rng(seed)
    sa = []
    branch_dims = spec.layer_dims()
    for layer, dims in zip(spec.sa_layers, branch_dims):
        sa.append([_mlp(rng, d, b.mlp_widths) for d, b in zip(dims, layer.branches)])
    global_mlp = _mlp(rng, spec.global_input_width, spec.global_mlp_widths)
    head = _mlp(rng, spec.global_mlp_widths[-1], spec.head_widths)
    return NetParams(sa=sa, global_mlp=global_mlp, head=head)


def zeros_like_params(params: NetParams) -> NetParams:
    return NetParams(
        sa=[[[Linear(np.zeros_like(l.w), np.zeros_like(l.b)) for l in br] for br in layer] for layer in params.sa],
        global_mlp=[Linear(np.zeros_like(l.w), np.zeros_like(l.b)) for l in params.global_mlp],
        head=[Linear(np.zeros_like(l.w), np.zeros_like(l.b)) for l in params.head],
    )


def add_scaled(dst: NetParams, src: NetParams, scale: float = 1.0) -> None:
    for d, s in zip(dst.iter_arrays(), src.iter_arrays()):
        d += scale * s


def check_shapes(spec: NetSpec, params: NetParams) -> None:
    """Raise ShapeError unless the arrays match what the spec implies."""
    expected = init_params(spec, seed=0)
    got = list(params.iter_arrays())
    want = list(expected.iter_arrays())
    if len(got) != len(want):
        raise ShapeError(f"expected {len(want)} parameter arrays, got {len(got)}")
    for i, (g, w) in enumerate(zip(got, want)):
        if g.shape != w.shape:
            raise ShapeError(f"parameter array {i} has shape {g.shape}, expected {w.shape}")


def _linear_to_doc(lin: Linear) -> dict:
    return {"w": lin.w.tolist(), "b": lin.b.tolist()}


def _linear_from_doc(doc: dict) -> Linear:
    try:
        return Linear(
            w=np.asarray(doc["w"], dtype=np.float64),
            b=np.asarray(doc["b"], dtype=np.float64),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"invalid linear layer record: {exc}") from None


def save_params(spec: NetSpec, params: NetParams, path) -> None:
    """Write a JSON checkpoint embedding the architecture. Round-trips bit-exactly."""
    check_shapes(spec, params)
    doc = {
        "schema_version": PARAMS_SCHEMA_VERSION,
        "spec": spec_to_dict(spec),
        "arrays": {
            "sa": [[[_linear_to_doc(l) for l in br] for br in layer] for layer in params.sa],
            "global_mlp": [_linear_to_doc(l) for l in params.global_mlp],
            "head": [_linear_to_doc(l) for l in params.head],
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_params(path) -> tuple[NetSpec, NetParams]:
    """Load a checkpoint, validating schema version and array shapes."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad checkpoint JSON: {exc.msg}") from None
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise ParseError("checkpoint must be an object with schema_version")
    if doc["schema_version"] != PARAMS_SCHEMA_VERSION:
        raise SchemaVersionError(f"unknown checkpoint schema_version {doc['schema_version']!r}")
    try:
        spec = spec_from_dict(doc["spec"])
        arrays = doc["arrays"]
        params = NetParams(
            sa=[[[_linear_from_doc(l) for l in br] for br in layer] for layer in arrays["sa"]],
            global_mlp=[_linear_from_doc(l) for l in arrays["global_mlp"]],
            head=[_linear_from_doc(l) for l in arrays["head"]],
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed checkpoint: {exc}") from None
    if not params.all_finite():
        raise ParseError("checkpoint contains non-finite parameters")
    check_shapes(spec, params)
    return spec, params
