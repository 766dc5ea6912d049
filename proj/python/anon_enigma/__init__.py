"""Saturation prover with learned, symbol-independent clause selection."""

from ._core import (
    ContainerError,
    ModelError,
    ParseError,
    Problem,
    classify_to_weight,
    clause_features,
    cut_features,
    evaluate,
    fnv1a64,
    gnn_scores,
    load_problem,
    parse_problem,
    prove,
    rename_problem,
    sigmoid,
    train_gbdt,
)

__all__ = [
    "ContainerError",
    "ModelError",
    "ParseError",
    "Problem",
    "classify_to_weight",
    "clause_features",
    "cut_features",
    "evaluate",
    "fnv1a64",
    "gnn_scores",
    "load_problem",
    "parse_problem",
    "prove",
    "rename_problem",
    "sigmoid",
    "train_gbdt",
]
