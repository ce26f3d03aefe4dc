"""Live sampler backed by the analytic device model."""

from typing import Tuple

import numpy as np

from ..rays.base import Sampler, VoltageBox
from .device import DEFAULT_RESOLUTION_MV, DeviceParams, sensor_signal
from .render import Window


class DeviceSampler(Sampler):
    """Evaluates the noise-free sensor signal and adds fresh Gaussian noise on every call."""

    def __init__(
        self,
        params: DeviceParams,
        domain: VoltageBox,
        noise_seed: int = 0,
        resolution: float = DEFAULT_RESOLUTION_MV,
    ) -> None:
        super().__init__(domain)
        self.params = params
        self.resolution = resolution
        self._rng = np.random.default_rng(noise_seed)

    @classmethod
    def for_window(
        cls,
        params: DeviceParams,
        window: Window,
        vb_range: Tuple[float, float],
        noise_seed: int = 0,
        resolution: float = DEFAULT_RESOLUTION_MV,
    ) -> "DeviceSampler":
        domain = VoltageBox(
            (window.v1_min, window.v2_min, vb_range[0]),
            (window.v1_max, window.v2_max, vb_range[1]),
        )
        return cls(params, domain, noise_seed, resolution)

    def _noise(self, size: int) -> np.ndarray:
        if self.params.noise_sigma == 0:
            return np.zeros(size)
        return self._rng.normal(0.0, self.params.noise_sigma, size=size)

    def measure(self, v: np.ndarray) -> float:
        return float(sensor_signal(self.params, v, self.resolution)) + float(self._noise(1)[0])

    def measure_many(self, points: np.ndarray) -> np.ndarray:
        clean = np.asarray(sensor_signal(self.params, np.asarray(points, dtype=float), self.resolution))
        return clean + self._noise(len(points))
