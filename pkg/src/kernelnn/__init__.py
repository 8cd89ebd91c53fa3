"""Kernel-derived recurrent modules with brute-force kernel oracles."""

from .errors import (
    ConfigError,
    ContractError,
    DataError,
    EvaluationError,
    GuardError,
    KernelNNError,
    ShapeError,
    UnsupportedActivationError,
)
from .graph_kernel import FeatureGraph, GraphKernelConfig, random_walk_kernel, wl_kernel
from .graph_nn import GraphModelConfig, rw_forward, wl_forward
from .seq_kernel import FeatureSequence, SeqKernelConfig, gram_matrix, string_kernel
from .seq_nn import SeqModelConfig, forward_layer, forward_stack
from .tensor import Activation, Tape, Tensor, backward, finite_diff_grad, rel_error

__all__ = [
    "Activation",
    "Tape",
    "Tensor",
    "backward",
    "finite_diff_grad",
    "rel_error",
    "FeatureSequence",
    "SeqKernelConfig",
    "string_kernel",
    "gram_matrix",
    "SeqModelConfig",
    "forward_layer",
    "forward_stack",
    "FeatureGraph",
    "GraphKernelConfig",
    "random_walk_kernel",
    "wl_kernel",
    "GraphModelConfig",
    "rw_forward",
    "wl_forward",
    "KernelNNError",
    "ShapeError",
    "ContractError",
    "ConfigError",
    "GuardError",
    "DataError",
    "EvaluationError",
    "UnsupportedActivationError",
]
