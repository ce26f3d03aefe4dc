"""Classifier-in-the-loop tuning runs."""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..classify import RayClassifier
from ..exceptions import ContractError, OutOfRangeError
from ..ml.exceptions import DimensionMismatchError
from ..schema import DeviceState, FitnessConfig, RayConfig, SimplexConfig, TrajectoryPoint, TuneResultDocument, WeightFn
from ..utils import finite_or_none, none_to_inf
from .fitness import fitness
from .region import SuccessRegion
from .simplex import initial_simplex, nelder_mead
from .space import TuningSpace


@dataclass(frozen=True)
class Evaluation:
    point: np.ndarray
    fitness: float
    # None for evaluations rejected by the quality gate or the domain
    probabilities: Optional[np.ndarray] = None


@dataclass
class TuneResult:
    start: np.ndarray
    trajectory: List[Evaluation]
    final_point: np.ndarray
    final_fitness: float
    iterations: int
    reason: str
    success: Optional[bool] = None
    final_state: Optional[DeviceState] = None
    warnings: List[str] = field(default_factory=list)

    def to_document(self) -> TuneResultDocument:
        return TuneResultDocument(
            start=self.start.tolist(),
            trajectory=[
                TrajectoryPoint(
                    point=e.point.tolist(),
                    fitness=finite_or_none(e.fitness),
                    probabilities=None if e.probabilities is None else e.probabilities.tolist(),
                )
                for e in self.trajectory
            ],
            final_point=self.final_point.tolist(),
            final_fitness=finite_or_none(self.final_fitness),
            iterations=self.iterations,
            reason=self.reason,
            success=self.success,
            final_state=self.final_state,
            warnings=list(self.warnings),
        )

    @classmethod
    def from_document(cls, doc: TuneResultDocument) -> "TuneResult":
        return cls(
            start=np.asarray(doc.start, dtype=float),
            trajectory=[
                Evaluation(
                    point=np.asarray(t.point, dtype=float),
                    fitness=none_to_inf(t.fitness),
                    probabilities=None if t.probabilities is None else np.asarray(t.probabilities, dtype=float),
                )
                for t in doc.trajectory
            ],
            final_point=np.asarray(doc.final_point, dtype=float),
            final_fitness=none_to_inf(doc.final_fitness),
            iterations=doc.iterations,
            reason=doc.reason,
            success=doc.success,
            final_state=doc.final_state,
            warnings=list(doc.warnings),
        )


class _Objective:
    """Fitness at a tuning point, memoized so repeated vertices are measured once."""

    def __init__(
        self,
        classifier: RayClassifier,
        space: TuningSpace,
        fitness_cfg: FitnessConfig,
        ray_cfg: RayConfig,
    ) -> None:
        self.classifier = classifier
        self.space = space
        self.fitness_cfg = fitness_cfg
        self.ray_cfg = ray_cfg
        self.trajectory: List[Evaluation] = []
        self._cache: Dict[Tuple[float, ...], Evaluation] = {}

    def evaluate(self, x: np.ndarray) -> Evaluation:
        x = np.asarray(x, dtype=float)
        key = tuple(x.tolist())
        if key in self._cache:
            return self._cache[key]
        probs = None
        value = math.inf
        if self.space.contains(x):
            try:
                result = self.classifier(self.space.acquire(x, self.ray_cfg))
            except OutOfRangeError:
                result = None
            if result is not None and result.probabilities is not None:
                probs = result.probabilities
                value = fitness(probs, x, self.fitness_cfg)
        ev = Evaluation(point=x.copy(), fitness=value, probabilities=probs)
        self._cache[key] = ev
        self.trajectory.append(ev)
        return ev

    def __call__(self, x: np.ndarray) -> float:
        return self.evaluate(x).fitness


def tune(
    classifier: RayClassifier,
    space: TuningSpace,
    x0: Sequence[float],
    fitness_cfg: FitnessConfig,
    simplex_cfg: SimplexConfig,
    ray_cfg: Optional[RayConfig] = None,
    weight: Optional[WeightFn] = None,
    region: Optional[SuccessRegion] = None,
) -> TuneResult:
    """Nelder-Mead run from ``x0``, classifying an M-projection at every evaluated point.

    The start point is classified first; its state orients the initial
    simplex (ND when the start fails the quality gate). Quality-gate failures
    and out-of-domain points score +inf.
    """
    ray_cfg = ray_cfg or classifier.ray_cfg
    weight = weight or classifier.weight
    if ray_cfg != classifier.ray_cfg or weight != classifier.weight:
        raise DimensionMismatchError("Tuning ray configuration or weight differs from the classifier's")
    x0 = np.asarray(x0, dtype=float)
    if len(x0) != space.dims:
        raise ContractError(f"Start point has {len(x0)} coordinates, the space has {space.dims}")

    warnings: List[str] = []
    if not space.contains(x0):
        warnings.append(f"Start point {x0.tolist()} clipped into the tuning domain")
        x0 = space.clip(x0)

    objective = _Objective(classifier, space, fitness_cfg, ray_cfg)
    first = objective.evaluate(x0)
    s0 = DeviceState(int(np.argmax(first.probabilities))) if first.probabilities is not None else DeviceState.ND

    simplex = initial_simplex(x0, s0, simplex_cfg, space.lower, space.upper)
    warnings.extend(simplex.warnings)
    nm = nelder_mead(objective, simplex, simplex_cfg, space.lower, space.upper)

    final = objective.evaluate(nm.x_best)
    final_state = DeviceState(int(np.argmax(final.probabilities))) if final.probabilities is not None else None
    return TuneResult(
        start=x0,
        trajectory=objective.trajectory,
        final_point=nm.x_best,
        final_fitness=nm.f_best,
        iterations=nm.iterations,
        reason=nm.reason.value,
        success=region.contains(nm.x_best) if region is not None else None,
        final_state=final_state,
        warnings=warnings,
    )


@dataclass(frozen=True)
class StateMap:
    """RBC state per grid origin; -1 marks quality-gated points."""

    v1: np.ndarray
    v2: np.ndarray
    states: np.ndarray

    def coverage(self) -> float:
        return float(np.mean(self.states >= 0))


def classify_map(
    classifier: RayClassifier,
    space: TuningSpace,
    v1: Sequence[float],
    v2: Sequence[float],
    vb: Optional[float] = None,
) -> StateMap:
    """Classify an M-projection at every (V_P1, V_P2) grid origin. Rows follow v2."""
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    if space.dims == 3 and vb is None:
        raise ContractError("A 3D space needs a barrier voltage for the state map")
    states = np.full((len(v2), len(v1)), -1, dtype=np.int8)
    for r, y in enumerate(v2):
        for c, x in enumerate(v1):
            point = np.array([x, y] if space.dims == 2 else [x, y, vb], dtype=float)
            if not space.contains(point):
                continue
            result = classifier(space.acquire(point, classifier.ray_cfg))
            if result.state is not None:
                states[r, c] = int(result.state)
    return StateMap(v1=v1, v2=v2, states=states)
