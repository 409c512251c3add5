"""Network and training configuration for the hierarchical point-set classifier."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ParseError
from ..sampling import AugmentSpec


@dataclass(frozen=True)
class GroupingBranch:
    """One neighborhood scale: ball radius, neighbor cap, and per-point MLP widths."""

    radius: float
    max_neighbors: int
    mlp_widths: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "mlp_widths", tuple(self.mlp_widths))
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.max_neighbors < 1:
            raise ValueError("max_neighbors must be >= 1")
        if not self.mlp_widths or any(w < 1 for w in self.mlp_widths):
            raise ValueError("mlp_widths must be nonempty positive integers")


@dataclass(frozen=True)
class SetAbstractionSpec:
    """One hierarchy level: sampled centroid count plus one or more grouping branches.

    A single branch is single-scale grouping; several branches, whose pooled
    features are concatenated, give the multi-scale variant.
    """

    num_centroids: int
    branches: tuple[GroupingBranch, ...]

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))
        if self.num_centroids < 1:
            raise ValueError("num_centroids must be >= 1")
        if not self.branches:
            raise ValueError("at least one grouping branch is required")

    @property
    def feature_width(self) -> int:
        return sum(b.mlp_widths[-1] for b in self.branches)


@dataclass(frozen=True)
class NetSpec:
    """Full classifier architecture."""

    input_points: int = 1024
    sa_layers: tuple[SetAbstractionSpec, ...] = ()
    global_mlp_widths: tuple[int, ...] = ()
    head_widths: tuple[int, ...] = (512, 256, 2)
    dropout_keep: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "sa_layers", tuple(self.sa_layers))
        object.__setattr__(self, "global_mlp_widths", tuple(self.global_mlp_widths))
        object.__setattr__(self, "head_widths", tuple(self.head_widths))
        if self.input_points < 1:
            raise ValueError("input_points must be >= 1")
        if not self.sa_layers:
            raise ValueError("at least one set-abstraction layer is required")
        if not self.global_mlp_widths or any(w < 1 for w in self.global_mlp_widths):
            raise ValueError("global_mlp_widths must be nonempty positive integers")
        if not self.head_widths or any(w < 1 for w in self.head_widths):
            raise ValueError("head_widths must be nonempty positive integers")
        if not (0.0 < self.dropout_keep <= 1.0):
            raise ValueError("dropout_keep must lie in (0, 1]")
        n = self.input_points
        for i, layer in enumerate(self.sa_layers):
            if layer.num_centroids > n:
                raise ValueError(
                    f"layer {i} samples {layer.num_centroids} centroids from only {n} points"
                )
            n = layer.num_centroids

    @property
    def num_classes(self) -> int:
        return self.head_widths[-1]

    def layer_dims(self) -> list[tuple[int, ...]]:
        """Per set-abstraction layer, the input feature width seen by each branch MLP."""
        dims = []
        feat = 0
        for layer in self.sa_layers:
            dims.append(tuple(3 + feat for _ in layer.branches))
            feat = layer.feature_width
        return dims

    @property
    def global_input_width(self) -> int:
        return 3 + self.sa_layers[-1].feature_width


@dataclass
class TrainSpec:
    """Optimization settings for a training run."""

    batch_size: int = 32
    epochs: int = 10
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    momentum: float = 0.9
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    augment: AugmentSpec | None = None
    rng_seed: int = 0
    class_weights: tuple[float, ...] | None = None
    workers: int = 1

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.optimizer not in ("adam", "sgd_momentum"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def default_ssg_spec(input_points: int = 1024, num_classes: int = 2) -> NetSpec:
    """Single-scale classification architecture (the customary configuration)."""
    return NetSpec(
        input_points=input_points,
        sa_layers=(
            SetAbstractionSpec(512, (GroupingBranch(0.2, 32, (64, 64, 128)),)),
            SetAbstractionSpec(128, (GroupingBranch(0.4, 64, (128, 128, 256)),)),
        ),
        global_mlp_widths=(256, 512, 1024),
        head_widths=(512, 256, num_classes),
        dropout_keep=0.5,
    )


def default_msg_spec(input_points: int = 1024, num_classes: int = 2) -> NetSpec:
    """Multi-scale classification architecture (three radii per level)."""
    return NetSpec(
        input_points=input_points,
        sa_layers=(
            SetAbstractionSpec(
                512,
                (
                    GroupingBranch(0.1, 16, (32, 32, 64)),
                    GroupingBranch(0.2, 32, (64, 64, 128)),
                    GroupingBranch(0.4, 128, (64, 96, 128)),
                ),
            ),
            SetAbstractionSpec(
                128,
                (
                    GroupingBranch(0.2, 32, (64, 64, 128)),
                    GroupingBranch(0.4, 64, (128, 128, 256)),
                    GroupingBranch(0.8, 128, (128, 128, 256)),
                ),
            ),
        ),
        global_mlp_widths=(256, 512, 1024),
        head_widths=(512, 256, num_classes),
        dropout_keep=0.5,
    )


def spec_to_dict(spec: NetSpec) -> dict:
    return {
        "input_points": spec.input_points,
        "sa_layers": [
            {
                "num_centroids": layer.num_centroids,
                "branches": [
                    {
                        "radius": b.radius,
                        "max_neighbors": b.max_neighbors,
                        "mlp_widths": list(b.mlp_widths),
                    }
                    for b in layer.branches
                ],
            }
            for layer in spec.sa_layers
        ],
        "global_mlp_widths": list(spec.global_mlp_widths),
        "head_widths": list(spec.head_widths),
        "dropout_keep": spec.dropout_keep,
    }


def spec_from_dict(doc: dict) -> NetSpec:
    try:
        return NetSpec(
            input_points=int(doc["input_points"]),
            sa_layers=tuple(
                SetAbstractionSpec(
                    num_centroids=int(l["num_centroids"]),
                    branches=tuple(
                        GroupingBranch(
                            radius=float(b["radius"]),
                            max_neighbors=int(b["max_neighbors"]),
                            mlp_widths=tuple(int(w) for w in b["mlp_widths"]),
                        )
                        for b in l["branches"]
                    ),
                )
                for l in doc["sa_layers"]
            ),
            global_mlp_widths=tuple(int(w) for w in doc["global_mlp_widths"]),
            head_widths=tuple(int(w) for w in doc["head_widths"]),
            dropout_keep=float(doc.get("dropout_keep", 0.5)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"invalid network spec: {exc}") from None
