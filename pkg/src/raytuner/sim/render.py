"""Rendering of stability diagrams and barrier stacks."""

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from ..exceptions import ConfigurationError
from ..schema import DeviceState
from .device import DeviceParams, label_states, pinch_off_point, sensor_signal

# grid extents must be whole multiples of the resolution within this relative tolerance
_GRID_RTOL = 1e-9


@dataclass(frozen=True)
class Window:
    """Plunger window [v_min, v_max) in mV along V_P1 and V_P2."""

    v1_min: float
    v1_max: float
    v2_min: float
    v2_max: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(x) for x in (self.v1_min, self.v1_max, self.v2_min, self.v2_max)):
            raise ConfigurationError("Window bounds must be finite")
        if self.v1_max <= self.v1_min or self.v2_max <= self.v2_min:
            raise ConfigurationError(f"Degenerate window {self}")

    @property
    def width(self) -> float:
        return self.v1_max - self.v1_min

    @property
    def height(self) -> float:
        return self.v2_max - self.v2_min

    def axes(self, resolution: float) -> Tuple[np.ndarray, np.ndarray]:
        """Uniform pixel axes. Raises ConfigurationError unless the resolution divides both extents."""
        if not resolution > 0:
            raise ConfigurationError(f"Resolution must be positive (got {resolution})")
        return _axis(self.v1_min, self.width, resolution, "V_P1"), _axis(self.v2_min, self.height, resolution, "V_P2")


def _axis(v_min: float, extent: float, resolution: float, name: str) -> np.ndarray:
    steps = extent / resolution
    n = int(round(steps))
    if n < 2 or abs(steps - n) > _GRID_RTOL * max(1.0, steps):
        raise ConfigurationError(f"Resolution {resolution} mV does not divide the {name} extent {extent} mV")
    return v_min + resolution * np.arange(n)


@dataclass(frozen=True)
class StabilityDiagram:
    """A rendered 2D scan. Arrays are indexed [row, col] = [V_P2, V_P1]."""

    v1_axis: np.ndarray
    v2_axis: np.ndarray
    resolution: float
    vb: float
    signal: np.ndarray
    labels: np.ndarray
    device_seed: int | None = None
    noise_seed: int | None = None

    def __post_init__(self) -> None:
        expected = (len(self.v2_axis), len(self.v1_axis))
        if self.signal.shape != expected or self.labels.shape != expected:
            raise ConfigurationError(
                f"Grid shapes {self.signal.shape}/{self.labels.shape} do not match axes {expected}"
            )
        if not self.resolution > 0:
            raise ConfigurationError("Resolution must be positive")
        for arr in (self.v1_axis, self.v2_axis, self.signal, self.labels):
            arr.setflags(write=False)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.signal.shape

    @property
    def window(self) -> Window:
        return Window(
            float(self.v1_axis[0]),
            float(self.v1_axis[0] + self.resolution * len(self.v1_axis)),
            float(self.v2_axis[0]),
            float(self.v2_axis[0] + self.resolution * len(self.v2_axis)),
        )

    @property
    def bounds(self) -> Tuple[float, float, float, float]:
        """Closed sampling bounds (v1_lo, v1_hi, v2_lo, v2_hi), i.e. first and last grid nodes."""
        return (
            float(self.v1_axis[0]),
            float(self.v1_axis[-1]),
            float(self.v2_axis[0]),
            float(self.v2_axis[-1]),
        )

    def pixel_of(self, v1: float, v2: float) -> Tuple[int, int]:
        """Nearest (row, col) pixel, clamped to the grid."""
        col = int(np.clip(np.rint((v1 - self.v1_axis[0]) / self.resolution), 0, len(self.v1_axis) - 1))
        row = int(np.clip(np.rint((v2 - self.v2_axis[0]) / self.resolution), 0, len(self.v2_axis) - 1))
        return row, col

    def state_at(self, v1: float, v2: float) -> DeviceState:
        row, col = self.pixel_of(v1, v2)
        return DeviceState(int(self.labels[row, col]))

    def state_fractions(self) -> np.ndarray:
        """Fraction of pixels per DeviceState, in state order."""
        counts = np.bincount(self.labels.ravel(), minlength=len(DeviceState))
        return counts / self.labels.size


@dataclass(frozen=True)
class DiagramStack:
    slices: Tuple[StabilityDiagram, ...]

    def __post_init__(self) -> None:
        if not self.slices:
            raise ConfigurationError("A diagram stack needs at least one slice")
        first = self.slices[0]
        for s in self.slices[1:]:
            if (
                s.resolution != first.resolution
                or not np.array_equal(s.v1_axis, first.v1_axis)
                or not np.array_equal(s.v2_axis, first.v2_axis)
            ):
                raise ConfigurationError("All slices of a stack must share axes and resolution")
        steps = np.diff(self.vbs)
        if len(steps) and not (np.all(steps > 0) or np.all(steps < 0)):
            raise ConfigurationError(f"Barrier voltages must be strictly monotone (got {list(self.vbs)})")

    def __len__(self) -> int:
        return len(self.slices)

    def __getitem__(self, i: int) -> StabilityDiagram:
        return self.slices[i]

    @property
    def vbs(self) -> np.ndarray:
        return np.array([s.vb for s in self.slices], dtype=float)

    @property
    def vb_range(self) -> Tuple[float, float]:
        return float(self.vbs.min()), float(self.vbs.max())

    def nearest(self, vb: float) -> StabilityDiagram:
        """Slice with the nearest barrier voltage; ties resolve to the lower V_B."""
        vbs = self.vbs
        dist = np.abs(vbs - vb)
        candidates = np.flatnonzero(dist <= dist.min() + 1e-12)
        return self.slices[int(candidates[np.argmin(vbs[candidates])])]


def default_window(params: DeviceParams, vb: float, size_mv: float = 300.0, resolution: float = 0.5) -> Window:
    """Square window with the pinch-off point at 30 % of each axis, snapped to the pixel grid."""
    p1, p2 = pinch_off_point(params, vb)
    v1_min = math.floor((p1 - 0.3 * size_mv) / resolution) * resolution
    v2_min = math.floor((p2 - 0.3 * size_mv) / resolution) * resolution
    return Window(v1_min, v1_min + size_mv, v2_min, v2_min + size_mv)


def render_diagram(
    params: DeviceParams,
    window: Window,
    resolution: float,
    vb: float,
    noise_seed: int = 0,
) -> StabilityDiagram:
    v1_axis, v2_axis = window.axes(resolution)
    grid_v1, grid_v2 = np.meshgrid(v1_axis, v2_axis)
    points = np.stack([grid_v1, grid_v2, np.full_like(grid_v1, vb)], axis=-1)

    signal = np.asarray(sensor_signal(params, points, resolution), dtype=float)
    if params.noise_sigma > 0:
        rng = np.random.default_rng(noise_seed)
        signal = signal + rng.normal(0.0, params.noise_sigma, size=signal.shape)
    labels = label_states(params, points).astype(np.int8)

    return StabilityDiagram(
        v1_axis=v1_axis,
        v2_axis=v2_axis,
        resolution=resolution,
        vb=float(vb),
        signal=signal,
        labels=labels,
        device_seed=params.seed,
        noise_seed=noise_seed,
    )


def render_stack(
    params: DeviceParams,
    window: Window,
    resolution: float,
    vb_list: Sequence[float],
    noise_seed: int = 0,
) -> DiagramStack:
    """One slice per barrier voltage; slice k uses noise seed ``noise_seed + k``."""
    if len(vb_list) == 0:
        raise ConfigurationError("vb_list must not be empty")
    slices: List[StabilityDiagram] = [
        render_diagram(params, window, resolution, vb, noise_seed + k) for k, vb in enumerate(vb_list)
    ]
    return DiagramStack(tuple(slices))
