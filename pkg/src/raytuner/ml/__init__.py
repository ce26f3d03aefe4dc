"""Dense-network state classifier.

Example usage:
    >>> from raytuner.ml import init_model, train, forward
    >>>
    >>> model = init_model(m=6, seed=0)
    >>> model, history = train(model, dataset, TrainConfig())
    >>> p = forward(model, fingerprint)
"""

from .evaluation import EVAL_HEADER, EvalReport, ensemble_seeds, evaluate_ensemble, summarize, train_ensemble
from .exceptions import DimensionMismatchError, ModelError, ModelNotFoundError
from .mlp import (
    HIDDEN_WIDTHS,
    N_STATES,
    MLPModel,
    count_params,
    cross_entropy,
    forward,
    init_model,
    layer_dims,
    logits,
    loss_and_gradients,
    predict,
    predict_labels,
)
from .model_manager import get_model_dir, load_model, resolve_model_path, save_model
from .training import MIN_TRAIN_RECORDS, Dataset, TrainHistory, split, train

__all__ = [
    "EVAL_HEADER",
    "HIDDEN_WIDTHS",
    "MIN_TRAIN_RECORDS",
    "N_STATES",
    "Dataset",
    "DimensionMismatchError",
    "EvalReport",
    "MLPModel",
    "ModelError",
    "ModelNotFoundError",
    "TrainHistory",
    "count_params",
    "cross_entropy",
    "ensemble_seeds",
    "evaluate_ensemble",
    "forward",
    "get_model_dir",
    "init_model",
    "layer_dims",
    "load_model",
    "logits",
    "loss_and_gradients",
    "predict",
    "predict_labels",
    "resolve_model_path",
    "save_model",
    "split",
    "summarize",
    "train",
    "train_ensemble",
]
