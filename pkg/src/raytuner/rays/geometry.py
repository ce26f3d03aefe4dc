"""Ray geometry and the M-projection container."""

import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from ..exceptions import ContractError
from ..schema import RayConfig


def directions(m: int) -> np.ndarray:
    """M unit vectors in the (V_P1, V_P2) plane, ray 0 along +V_P1, counter-clockwise."""
    if m < 3:
        raise ContractError(f"At least 3 rays are required (got {m})")
    angles = 2.0 * math.pi * np.arange(m) / m
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    # exact zeros on the axes keep quarter-turn rays on grid lines
    dirs[np.abs(dirs) < 1e-15] = 0.0
    return dirs


def as_origin(origin: Sequence[float], vb: float | None = None) -> Tuple[float, float, float]:
    """Normalize a 2- or 3-component origin to (V_P1, V_P2, V_B)."""
    o = [float(x) for x in origin]
    if len(o) == 2:
        return (o[0], o[1], float(vb) if vb is not None else 0.0)
    if len(o) == 3:
        return (o[0], o[1], o[2])
    raise ContractError(f"Origin must have 2 or 3 components (got {len(o)})")


def ray_points(origin: Sequence[float], config: RayConfig) -> np.ndarray:
    """Gate vectors visited by an M-projection, shape (M, L_px, 3).

    Pixel i sits (i + 1) * px_mv from the origin; the origin itself is not sampled.
    V_B stays at the origin's value.
    """
    o = np.asarray(as_origin(origin), dtype=float)
    dirs = directions(config.m)
    dist = config.px_mv * np.arange(1, config.l_px + 1)
    pts = np.empty((config.m, config.l_px, 3))
    pts[..., :2] = o[:2] + dist[None, :, None] * dirs[:, None, :]
    pts[..., 2] = o[2]
    return pts


@dataclass(frozen=True)
class MProjection:
    origin: Tuple[float, float, float]
    config: RayConfig
    samples: np.ndarray
    directions: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        expected = (self.config.m, self.config.l_px)
        if self.samples.shape != expected:
            raise ContractError(f"Projection samples have shape {self.samples.shape}, expected {expected}")
        if not np.all(np.isfinite(self.samples)):
            raise ContractError("Projection samples must be finite")
        object.__setattr__(self, "directions", directions(self.config.m))
        self.samples.setflags(write=False)

    @property
    def vb(self) -> float:
        return self.origin[2]

    def endpoints(self) -> np.ndarray:
        """Last sampled point of every ray, shape (M, 3)."""
        return ray_points(self.origin, self.config)[:, -1, :]
