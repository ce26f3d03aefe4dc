"""Voltage spaces a tuning run can move through.

A space knows its domain (in tuning coordinates: (V_P1, V_P2) or
(V_P1, V_P2, V_B)) and how to acquire an M-projection at a point. Plunger
bounds are inset by the ray length so every in-domain point yields complete
rays.
"""

from abc import ABC, abstractmethod
from typing import Optional, Sequence

import numpy as np

from ..exceptions import ConfigurationError
from ..rays.acquire import acquire_live, acquire_offline
from ..rays.base import Sampler
from ..rays.geometry import MProjection
from ..schema import DeviceState, RayConfig
from ..sim.render import DiagramStack, StabilityDiagram


def _inset(lo: float, hi: float, margin: float, name: str) -> tuple[float, float]:
    if hi - lo < 2 * margin:
        raise ConfigurationError(f"The {name} range [{lo}, {hi}] is too small for {margin} mV rays")
    return lo + margin, hi - margin


class TuningSpace(ABC):
    lower: np.ndarray
    upper: np.ndarray

    @property
    def dims(self) -> int:
        return len(self.lower)

    def contains(self, x: Sequence[float], atol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol))

    def clip(self, x: Sequence[float]) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    @abstractmethod
    def acquire(self, x: np.ndarray, ray_cfg: RayConfig) -> MProjection:
        """M-projection with origin at tuning point ``x``."""
        ...

    def true_state(self, x: np.ndarray) -> Optional[DeviceState]:
        """Ground-truth label at ``x`` when the space has one."""
        return None


class DiagramSpace(TuningSpace):
    """Off-line 2D tuning over one rendered diagram."""

    def __init__(self, diagram: StabilityDiagram, ray_cfg: RayConfig) -> None:
        self.diagram = diagram
        v1_lo, v1_hi, v2_lo, v2_hi = diagram.bounds
        v1 = _inset(v1_lo, v1_hi, ray_cfg.length_mv, "V_P1")
        v2 = _inset(v2_lo, v2_hi, ray_cfg.length_mv, "V_P2")
        self.lower = np.array([v1[0], v2[0]])
        self.upper = np.array([v1[1], v2[1]])

    def acquire(self, x: np.ndarray, ray_cfg: RayConfig) -> MProjection:
        return acquire_offline(self.diagram, (x[0], x[1]), ray_cfg)

    def true_state(self, x: np.ndarray) -> Optional[DeviceState]:
        return self.diagram.state_at(float(x[0]), float(x[1]))


class StackSpace(TuningSpace):
    """Off-line 3D tuning; a fractional V_B uses the nearest slice."""

    def __init__(self, stack: DiagramStack, ray_cfg: RayConfig) -> None:
        self.stack = stack
        plane = DiagramSpace(stack[0], ray_cfg)
        vb_lo, vb_hi = stack.vb_range
        self.lower = np.append(plane.lower, vb_lo)
        self.upper = np.append(plane.upper, vb_hi)

    def slice_at(self, vb: float) -> StabilityDiagram:
        return self.stack.nearest(vb)

    def acquire(self, x: np.ndarray, ray_cfg: RayConfig) -> MProjection:
        return acquire_offline(self.slice_at(float(x[2])), (x[0], x[1]), ray_cfg)

    def true_state(self, x: np.ndarray) -> Optional[DeviceState]:
        return self.slice_at(float(x[2])).state_at(float(x[0]), float(x[1]))


class SamplerSpace(TuningSpace):
    """Live tuning through a Sampler. With ``vb`` set the run is 2D at that barrier voltage."""

    def __init__(self, sampler: Sampler, ray_cfg: RayConfig, vb: Optional[float] = None) -> None:
        self.sampler = sampler
        self.vb = vb
        lo = sampler.domain.lower
        hi = sampler.domain.upper
        v1 = _inset(lo[0], hi[0], ray_cfg.length_mv, "V_P1")
        v2 = _inset(lo[1], hi[1], ray_cfg.length_mv, "V_P2")
        if vb is None:
            self.lower = np.array([v1[0], v2[0], lo[2]])
            self.upper = np.array([v1[1], v2[1], hi[2]])
        else:
            if not lo[2] <= vb <= hi[2]:
                raise ConfigurationError(f"V_B = {vb} lies outside the sampler domain")
            self.lower = np.array([v1[0], v2[0]])
            self.upper = np.array([v1[1], v2[1]])

    def acquire(self, x: np.ndarray, ray_cfg: RayConfig) -> MProjection:
        vb = self.vb if self.vb is not None else float(x[2])
        return acquire_live(self.sampler, (x[0], x[1], vb), ray_cfg)
