"""Dense rectifier network with a softmax output over device states."""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import log_softmax, softmax

from ..fingerprint import Fingerprint
from ..schema import DeviceState, WeightFn
from .exceptions import DimensionMismatchError

HIDDEN_WIDTHS: Tuple[int, ...] = (128, 64, 32)
N_STATES = len(DeviceState)

Inputs = Union[Fingerprint, np.ndarray, Sequence[float]]


@dataclass
class MLPModel:
    """Weights are (d_in, d_out) matrices, applied as ``x @ W + b``."""

    weights: List[np.ndarray]
    biases: List[np.ndarray]
    l_px: Optional[int] = None
    weight_id: Optional[WeightFn] = None
    activation: str = field(default="relu")

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.biases) or not self.weights:
            raise DimensionMismatchError("A model needs one bias vector per weight matrix")
        for k, (w, b) in enumerate(zip(self.weights, self.biases, strict=True)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise DimensionMismatchError(f"Layer {k} has weight {w.shape} and bias {b.shape}")
            if k and w.shape[0] != self.weights[k - 1].shape[1]:
                raise DimensionMismatchError(f"Layer {k} input width does not match layer {k - 1} output")

    @property
    def layer_dims(self) -> List[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def m(self) -> int:
        return self.weights[0].shape[0]

    def copy(self) -> "MLPModel":
        return MLPModel(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            l_px=self.l_px,
            weight_id=self.weight_id,
            activation=self.activation,
        )


def layer_dims(m: int, hidden: Sequence[int] = HIDDEN_WIDTHS, n_out: int = N_STATES) -> List[int]:
    return [m, *hidden, n_out]


def init_model(
    m: int,
    seed: int,
    hidden: Sequence[int] = HIDDEN_WIDTHS,
    n_out: int = N_STATES,
) -> MLPModel:
    """He-normal weights (std sqrt(2 / fan_in)) and zero biases."""
    if m < 3:
        raise DimensionMismatchError(f"A fingerprint needs at least 3 rays (got {m})")
    rng = np.random.default_rng(seed)
    dims = layer_dims(m, hidden, n_out)
    weights = [rng.normal(0.0, np.sqrt(2.0 / d_in), size=(d_in, d_out)) for d_in, d_out in zip(dims, dims[1:])]
    biases = [np.zeros(d_out) for d_out in dims[1:]]
    return MLPModel(weights=weights, biases=biases)


def count_params(model: MLPModel) -> int:
    return int(sum(w.size + b.size for w, b in zip(model.weights, model.biases, strict=True)))


def as_batch(model: MLPModel, X: Inputs) -> np.ndarray:
    x = X.values if isinstance(X, Fingerprint) else X
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.ndim != 2 or x.shape[1] != model.m:
        raise DimensionMismatchError(f"Model expects {model.m} inputs per row (got shape {x.shape})")
    return x


def _forward_pass(model: MLPModel, X: np.ndarray) -> Tuple[List[np.ndarray], np.ndarray]:
    """Layer inputs (for backprop) and the output logits."""
    activations = [X]
    a = X
    for W, b in zip(model.weights[:-1], model.biases[:-1], strict=True):
        a = np.maximum(a @ W + b, 0.0)
        activations.append(a)
    logits = a @ model.weights[-1] + model.biases[-1]
    return activations, logits


def logits(model: MLPModel, X: Inputs) -> np.ndarray:
    return _forward_pass(model, as_batch(model, X))[1]


def predict(model: MLPModel, X: Inputs) -> np.ndarray:
    """Probability vectors, shape (N, 5)."""
    return softmax(logits(model, X), axis=1)


def forward(model: MLPModel, f: Inputs) -> np.ndarray:
    """Probability vector (p_ND, p_SD_L, p_SD_C, p_SD_R, p_DD) for one fingerprint."""
    x = f.values if isinstance(f, Fingerprint) else np.asarray(f, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatchError("forward takes a single fingerprint; use predict for batches")
    return predict(model, x)[0]


def predict_labels(model: MLPModel, X: Inputs) -> np.ndarray:
    return np.argmax(logits(model, X), axis=1)


def loss_and_gradients(
    model: MLPModel, X: np.ndarray, y: np.ndarray
) -> Tuple[float, List[np.ndarray], List[np.ndarray]]:
    """Mean categorical cross-entropy against integer labels, with analytic gradients."""
    X = as_batch(model, X)
    y = np.asarray(y, dtype=np.intp)
    n = len(X)
    activations, z = _forward_pass(model, X)
    log_p = log_softmax(z, axis=1)
    loss = float(-np.mean(log_p[np.arange(n), y]))

    delta = np.exp(log_p)
    delta[np.arange(n), y] -= 1.0
    delta /= n

    grad_w: List[np.ndarray] = [np.empty(0)] * len(model.weights)
    grad_b: List[np.ndarray] = [np.empty(0)] * len(model.biases)
    for k in range(len(model.weights) - 1, -1, -1):
        grad_w[k] = activations[k].T @ delta
        grad_b[k] = delta.sum(axis=0)
        if k:
            delta = (delta @ model.weights[k].T) * (activations[k] > 0)
    return loss, grad_w, grad_b


def cross_entropy(model: MLPModel, X: np.ndarray, y: np.ndarray) -> float:
    X = as_batch(model, X)
    log_p = log_softmax(logits(model, X), axis=1)
    return float(-np.mean(log_p[np.arange(len(X)), np.asarray(y, dtype=np.intp)]))
