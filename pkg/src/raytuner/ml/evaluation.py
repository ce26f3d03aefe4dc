"""Ensemble training and accuracy reports."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..exceptions import ContractError
from ..schema import DeviceState, EvalReportDocument, TrainConfig
from .exceptions import DimensionMismatchError
from .mlp import HIDDEN_WIDTHS, MLPModel, init_model, predict_labels
from .training import Dataset, train

N_STATES = len(DeviceState)

EVAL_HEADER = [
    "m",
    "l_px",
    "weight",
    "n_models",
    "n_test",
    "mean_accuracy",
    "std_accuracy",
    *[f"accuracy_{s.name}" for s in DeviceState],
]


@dataclass(frozen=True)
class EvalReport:
    accuracies: List[float]
    mean: float
    std: float
    # rows are true states, columns are predictions, summed over models
    confusion: np.ndarray

    @property
    def per_class_accuracy(self) -> List[Optional[float]]:
        totals = self.confusion.sum(axis=1)
        return [float(self.confusion[k, k] / totals[k]) if totals[k] else None for k in range(N_STATES)]

    def to_document(self) -> EvalReportDocument:
        return EvalReportDocument(
            accuracies=list(self.accuracies),
            mean=self.mean,
            std=self.std,
            confusion=self.confusion.astype(int).tolist(),
            per_class_accuracy=self.per_class_accuracy,
        )

    @classmethod
    def from_document(cls, doc: EvalReportDocument) -> "EvalReport":
        return cls(
            accuracies=list(doc.accuracies),
            mean=doc.mean,
            std=doc.std,
            confusion=np.asarray(doc.confusion, dtype=np.int64),
        )

    def as_csv_row(self, testset: Dataset) -> list:
        """One row under ``EVAL_HEADER``; the test set supplies the ray configuration."""
        weight = testset.weight_id.value if testset.weight_id is not None else None
        return [
            testset.m,
            testset.l_px,
            weight,
            len(self.accuracies),
            len(testset),
            self.mean,
            self.std,
            *self.per_class_accuracy,
        ]


def summarize(accuracies: Sequence[float]) -> tuple[float, float]:
    """Mean and sample standard deviation (0 for a single model)."""
    acc = np.asarray(accuracies, dtype=float)
    std = float(np.std(acc, ddof=1)) if len(acc) > 1 else 0.0
    return float(np.mean(acc)), std


def evaluate_ensemble(models: Sequence[MLPModel], testset: Dataset) -> EvalReport:
    if len(testset) == 0:
        raise ContractError("Test set is empty")
    if not models:
        raise ContractError("Need at least one model")
    accuracies = []
    confusion = np.zeros((N_STATES, N_STATES), dtype=np.int64)
    for k, model in enumerate(models):
        if model.m != testset.m:
            raise DimensionMismatchError(f"Model {k} expects {model.m} inputs, test set has {testset.m}")
        pred = predict_labels(model, testset.X)
        accuracies.append(float(np.mean(pred == testset.y)))
        np.add.at(confusion, (testset.y, pred), 1)
    mean, std = summarize(accuracies)
    return EvalReport(accuracies=accuracies, mean=mean, std=std, confusion=confusion)


def ensemble_seeds(seed: int, n_models: int) -> List[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n_models)]


def train_ensemble(
    dataset: Dataset,
    n_models: int,
    cfg: TrainConfig,
    max_workers: Optional[int] = None,
    hidden: Sequence[int] = HIDDEN_WIDTHS,
) -> List[MLPModel]:
    """Independently seeded models; results are ordered and independent of ``max_workers``."""
    if n_models < 1:
        raise ContractError("n_models must be >= 1")

    def fit(seed: int) -> MLPModel:
        model = init_model(dataset.m, seed, hidden)
        trained, _ = train(model, dataset, cfg.model_copy(update={"seed": seed}))
        return trained

    seeds = ensemble_seeds(cfg.seed, n_models)
    if max_workers == 1:
        return [fit(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(fit, seeds))
