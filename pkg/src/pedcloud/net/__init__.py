"""Hierarchical point-set binary classifier: architecture, gradients, training."""

from .model import ball_query, forward, loss_and_grad, softmax
from .params import (
    Linear,
    NetParams,
    check_shapes,
    init_params,
    load_params,
    save_params,
    zeros_like_params,
)
from .specs import (
    GroupingBranch,
    NetSpec,
    SetAbstractionSpec,
    TrainSpec,
    default_msg_spec,
    default_ssg_spec,
    spec_from_dict,
    spec_to_dict,
)
from .training import EvalMetrics, evaluate, metrics_from_confusion, predict_proba, train

__all__ = [
    "ball_query",
    "forward",
    "loss_and_grad",
    "softmax",
    "Linear",
    "NetParams",
    "check_shapes",
    "init_params",
    "load_params",
    "save_params",
    "zeros_like_params",
    "GroupingBranch",
    "NetSpec",
    "SetAbstractionSpec",
    "TrainSpec",
    "default_msg_spec",
    "default_ssg_spec",
    "spec_from_dict",
    "spec_to_dict",
    "EvalMetrics",
    "evaluate",
    "metrics_from_confusion",
    "predict_proba",
    "train",
]
