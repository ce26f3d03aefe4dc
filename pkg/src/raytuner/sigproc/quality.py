"""Charge-sensing quality gate."""

import math
from typing import Iterable

import numpy as np

from ..exceptions import ContractError
from ..rays.geometry import MProjection
from ..schema import QualityConfig
from .noise import robust_std


def quality_statistic(proj: MProjection) -> float:
    """(max - median) / sigma over the projection.

    Returns inf for a zero noise estimate with a raised maximum and 0 for a
    constant projection.
    """
    samples = proj.samples
    excess = float(np.max(samples) - np.median(samples))
    sigma = robust_std(samples)
    if sigma == 0:
        return math.inf if excess > 0 else 0.0
    return excess / sigma


def quality_check(proj: MProjection, cfg: QualityConfig) -> bool:
    return quality_statistic(proj) >= cfg.snr_min


def calibrate_quality_threshold(projections: Iterable[MProjection], quantile: float = 0.05) -> float:
    """snr_min from reference projections that show clear transitions: their low quantile."""
    if not 0.0 <= quantile <= 1.0:
        raise ContractError(f"Quantile must lie in [0, 1] (got {quantile})")
    stats = np.array([quality_statistic(p) for p in projections])
    if stats.size == 0:
        raise ContractError("Need at least one reference projection")
    finite = stats[np.isfinite(stats)]
    if finite.size == 0:
        return math.inf
    return float(np.quantile(finite, quantile))
