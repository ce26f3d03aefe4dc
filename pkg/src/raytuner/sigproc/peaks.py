"""Peak detection and critical-feature extraction."""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import signal as sps

from ..exceptions import ContractError
from ..rays.geometry import MProjection
from ..schema import PeakConfig
from .noise import NoiseEstimate, noise_estimate

# sentinel for rays without a detected transition
NO_FEATURE = None

# smallest prominence accepted when the noise estimate is exactly zero
_MIN_PROMINENCE = 1e-12

MIN_RAY_PX = 8


@dataclass(frozen=True)
class CriticalFeatureVector:
    """Per-ray pixel distance (1-based) to the nearest transition, or NO_FEATURE."""

    values: Tuple[Optional[int], ...]
    l_px: int

    def __post_init__(self) -> None:
        for x in self.values:
            if x is not None and not 1 <= x <= self.l_px:
                raise ContractError(f"Critical feature {x} outside [1, {self.l_px}]")

    def __len__(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        """Float array with NaN for missing features."""
        return np.array([np.nan if x is None else float(x) for x in self.values])


def _select_by_separation(indices: np.ndarray, heights: np.ndarray, min_separation: int) -> List[int]:
    # visit by height, ties toward the smaller index
    order = sorted(range(len(indices)), key=lambda k: (-heights[k], indices[k]))
    kept: List[int] = []
    for k in order:
        i = int(indices[k])
        if all(abs(i - j) >= min_separation for j in kept):
            kept.append(i)
    return sorted(kept)


def find_peaks(ray: Sequence[float], sigma: float, median: float, cfg: PeakConfig) -> List[int]:
    """Strict local maxima passing height and prominence thresholds, as 1-based pixel indices."""
    values = np.asarray(ray, dtype=float)
    if values.ndim != 1 or len(values) < MIN_RAY_PX:
        raise ContractError(f"Rays must be 1D with at least {MIN_RAY_PX} samples")

    idx, props = sps.find_peaks(
        values,
        height=median + cfg.height_k * sigma,
        prominence=max(cfg.prom_k * sigma, _MIN_PROMINENCE),
        plateau_size=(1, 1),
    )
    if len(idx) == 0:
        return []
    kept = _select_by_separation(idx, props["peak_heights"], cfg.min_separation_px)
    return [i + 1 for i in kept]


def critical_features(
    proj: MProjection,
    cfg: PeakConfig,
    noise: NoiseEstimate | None = None,
) -> CriticalFeatureVector:
    """Nearest detected peak per ray.

    Median and sigma come from the whole projection unless a calibrated
    NoiseEstimate is supplied.
    """
    stats = noise or noise_estimate(proj.samples)
    values: List[Optional[int]] = []
    for ray in proj.samples:
        peaks = find_peaks(ray, stats.sigma, stats.median, cfg)
        values.append(peaks[0] if peaks else NO_FEATURE)
    return CriticalFeatureVector(values=tuple(values), l_px=proj.config.l_px)
