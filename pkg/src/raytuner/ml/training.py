"""Labeled fingerprint datasets and mini-batch training with Adam."""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import ConfigurationError, ContractError
from ..schema import DeviceState, FingerprintRecord, TrainConfig, WeightFn
from .exceptions import DimensionMismatchError
from .mlp import MLPModel, cross_entropy, loss_and_gradients, predict_labels

MIN_TRAIN_RECORDS = 100

_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8


@dataclass(frozen=True)
class Dataset:
    """Fingerprints X (N, M) with integer state labels y (N,)."""

    X: np.ndarray
    y: np.ndarray
    l_px: Optional[int] = None
    weight_id: Optional[WeightFn] = None
    px_mv: Optional[float] = None

    def __post_init__(self) -> None:
        if self.X.ndim != 2 or self.y.shape != (len(self.X),):
            raise ContractError(f"Dataset arrays disagree: X {self.X.shape}, y {self.y.shape}")
        if len(self.y) and (self.y.min() < 0 or self.y.max() >= len(DeviceState)):
            raise ContractError("Labels must be DeviceState values 0-4")

    def __len__(self) -> int:
        return len(self.y)

    @property
    def m(self) -> int:
        return self.X.shape[1]

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], self.l_px, self.weight_id, self.px_mv)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=len(DeviceState))

    @classmethod
    def from_records(cls, records: Sequence[FingerprintRecord]) -> "Dataset":
        """Build from labeled records; all records must share (m, l_px, px_mv, weight_id)."""
        if not records:
            raise ContractError("Dataset is empty")
        keys = {(r.m, r.l_px, r.px_mv, r.weight_id) for r in records}
        if len(keys) > 1:
            raise ConfigurationError(f"Dataset mixes ray/weight configurations: {sorted(map(str, keys))}")
        if any(r.label is None for r in records):
            raise ContractError("Training records must carry labels")
        if any(len(r.values) != r.m for r in records):
            raise ContractError("Record value length differs from its ray count")
        first = records[0]
        return cls(
            X=np.array([r.values for r in records], dtype=float),
            y=np.array([int(r.label) for r in records if r.label is not None], dtype=np.int64),
            l_px=first.l_px,
            weight_id=first.weight_id,
            px_mv=first.px_mv,
        )


def split(dataset: Dataset, fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """Disjoint (train, validation) split; the validation part holds ``fraction`` of the records."""
    if not 0.0 < fraction < 1.0:
        raise ContractError(f"Split fraction must lie in (0, 1) (got {fraction})")
    perm = np.random.default_rng(seed).permutation(len(dataset))
    n_val = max(1, int(round(fraction * len(dataset))))
    return dataset.subset(np.sort(perm[n_val:])), dataset.subset(np.sort(perm[:n_val]))


@dataclass
class TrainHistory:
    initial_loss: float
    train_loss: List[float] = field(default_factory=list)
    val_loss: List[float] = field(default_factory=list)
    val_accuracy: List[float] = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.train_loss[-1] if self.train_loss else self.initial_loss


class _Adam:
    def __init__(self, params: List[np.ndarray], lr: float) -> None:
        self.params = params
        self.lr = lr
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: List[np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - _ADAM_BETA1**self.t
        c2 = 1.0 - _ADAM_BETA2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v, strict=True):
            m *= _ADAM_BETA1
            m += (1.0 - _ADAM_BETA1) * g
            v *= _ADAM_BETA2
            v += (1.0 - _ADAM_BETA2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + _ADAM_EPS)


def train(model: MLPModel, dataset: Dataset, cfg: TrainConfig) -> Tuple[MLPModel, TrainHistory]:
    """Minimize cross-entropy on a private copy of ``model``.

    A validation split of ``cfg.validation_split`` is held out; the history
    records the pre-training loss and per-epoch mean training loss on the
    training part.
    """
    if len(dataset) < MIN_TRAIN_RECORDS:
        raise ContractError(f"Training needs at least {MIN_TRAIN_RECORDS} records (got {len(dataset)})")
    if dataset.m != model.m:
        raise DimensionMismatchError(f"Dataset has {dataset.m} rays, model expects {model.m}")

    split_seq, shuffle_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    train_set, val_set = split(dataset, cfg.validation_split, int(split_seq.generate_state(1)[0]))
    rng = np.random.default_rng(shuffle_seq)

    trained = model.copy()
    trained.l_px = dataset.l_px
    trained.weight_id = dataset.weight_id
    opt = _Adam(trained.weights + trained.biases, cfg.learning_rate)

    history = TrainHistory(initial_loss=cross_entropy(trained, train_set.X, train_set.y))
    for _ in range(cfg.epochs):
        order = rng.permutation(len(train_set))
        batch_losses = []
        batch_sizes = []
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss, gw, gb = loss_and_gradients(trained, train_set.X[idx], train_set.y[idx])
            opt.step(gw + gb)
            batch_losses.append(loss)
            batch_sizes.append(len(idx))
        history.train_loss.append(float(np.average(batch_losses, weights=batch_sizes)))
        history.val_loss.append(cross_entropy(trained, val_set.X, val_set.y))
        history.val_accuracy.append(float(np.mean(predict_labels(trained, val_set.X) == val_set.y)))
        opt.lr *= cfg.lr_decay

    return trained, history
