"""Sampler interface for live ray acquisition."""

import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Sequence, Tuple

import numpy as np

from ..exceptions import ConfigurationError

Point3 = Tuple[float, float, float]


@dataclass(frozen=True)
class VoltageBox:
    """Closed box in (V_P1, V_P2, V_B) gate space, in mV."""

    lower: Point3
    upper: Point3

    def __post_init__(self) -> None:
        if any(lo > hi for lo, hi in zip(self.lower, self.upper, strict=True)):
            raise ConfigurationError(f"Empty voltage box {self.lower} .. {self.upper}")

    @property
    def lower_array(self) -> np.ndarray:
        return np.asarray(self.lower, dtype=float)

    @property
    def upper_array(self) -> np.ndarray:
        return np.asarray(self.upper, dtype=float)

    def contains(self, points: np.ndarray, atol: float = 1e-9) -> np.ndarray:
        """Per-point membership for an array of shape (..., 3)."""
        points = np.asarray(points, dtype=float)
        inside = (points >= self.lower_array - atol) & (points <= self.upper_array + atol)
        return np.all(inside, axis=-1)

    def clip(self, points: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(points, dtype=float), self.lower_array, self.upper_array)


class Sampler(ABC):
    """A device that reports one sensor value per gate vector.

    Subclasses implement ``measure``; ``measure_many`` may be overridden with a
    batched version. Callers go through ``sample``/``sample_many``, which hold a
    per-instance lock because a device can only sit at one voltage at a time.
    """

    def __init__(self, domain: VoltageBox) -> None:
        self.domain = domain
        self._lock = threading.RLock()

    @abstractmethod
    def measure(self, v: np.ndarray) -> float:
        """Sensor value at gate vector ``v`` of shape (3,)."""
        ...

    def measure_many(self, points: np.ndarray) -> np.ndarray:
        return np.array([self.measure(p) for p in points], dtype=float)

    def sample(self, v: Sequence[float] | np.ndarray) -> float:
        with self._lock:
            return float(self.measure(np.asarray(v, dtype=float)))

    def sample_many(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        with self._lock:
            return np.asarray(self.measure_many(points), dtype=float)

    def locked(self) -> threading.RLock:
        """Hold the sampler for a sequence of calls."""
        return self._lock


class CallableSampler(Sampler):
    """Adapts a plain ``f(v) -> float`` callback to the Sampler interface."""

    def __init__(self, fn: Callable[[np.ndarray], float], domain: VoltageBox) -> None:
        super().__init__(domain)
        self._fn = fn

    def measure(self, v: np.ndarray) -> float:
        return float(self._fn(v))
