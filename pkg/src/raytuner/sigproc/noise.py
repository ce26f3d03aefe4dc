"""Robust noise statistics."""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import median_abs_deviation

from ..exceptions import ContractError
from ..rays.base import Sampler
from ..rays.geometry import MProjection

# MAD to standard deviation for Gaussian noise
MAD_TO_SIGMA = 1.4826


@dataclass(frozen=True)
class NoiseEstimate:
    median: float
    sigma: float


def robust_std(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise ContractError("Cannot estimate noise from an empty sample")
    return float(median_abs_deviation(x, scale=1.0 / MAD_TO_SIGMA))


def noise_estimate(x: np.ndarray) -> NoiseEstimate:
    x = np.asarray(x, dtype=float).ravel()
    return NoiseEstimate(median=float(np.median(x)) if x.size else 0.0, sigma=robust_std(x))


def noise_level(proj: MProjection) -> float:
    """sigma = 1.4826 * MAD over all M * L_px samples of the projection."""
    return robust_std(proj.samples)


def calibrate_noise(sampler: Sampler, point: Sequence[float], n_samples: int = 256) -> NoiseEstimate:
    """Repeated measurement at one off-transition gate vector."""
    if n_samples < 2:
        raise ContractError(f"Need at least 2 samples for a noise estimate (got {n_samples})")
    pts = np.tile(np.asarray(point, dtype=float), (n_samples, 1))
    return noise_estimate(sampler.sample_many(pts))
