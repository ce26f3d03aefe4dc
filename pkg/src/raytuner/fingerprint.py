"""Weight functions that turn critical features into point fingerprints."""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from .exceptions import ContractError
from .schema import WeightFn
from .sigproc.peaks import CriticalFeatureVector

Features = Union[CriticalFeatureVector, Sequence[Optional[int]]]


@dataclass(frozen=True)
class WeightSpec:
    fn: WeightFn
    formula: str
    # "decreasing" or "increasing" in the raw pixel distance
    monotonicity: str
    decay: str
    normalized: bool


_CATALOGUE: List[WeightSpec] = [
    WeightSpec(WeightFn.INV, "1/x", "decreasing", "hyperbolic", False),
    WeightSpec(WeightFn.EXP_NEG, "exp(-x)", "decreasing", "exponential", False),
    WeightSpec(WeightFn.ONE_MINUS_HAT, "1 - x_hat", "decreasing", "linear", True),
    WeightSpec(WeightFn.HAT, "x_hat", "increasing", "linear", True),
    WeightSpec(WeightFn.RAW, "x / L_px", "increasing", "linear", False),
    WeightSpec(WeightFn.INV_HAT, "1 / (1 + x_hat)", "decreasing", "hyperbolic", True),
]

_EXTENDED: List[WeightSpec] = [
    WeightSpec(WeightFn.EXP_NEG_HAT, "exp(-x_hat)", "decreasing", "exponential", True),
]


def catalogue(extended: bool = False) -> List[WeightSpec]:
    """Weight functions for sweep experiments; ``extended`` adds the normalized exponential."""
    return list(_CATALOGUE) + (list(_EXTENDED) if extended else [])


def _min_max(x: np.ndarray) -> np.ndarray:
    lo, hi = np.min(x), np.max(x)
    if hi == lo:
        return np.zeros_like(x)
    return (x - lo) / (hi - lo)


_RAW_WEIGHTS: Dict[WeightFn, Callable[[np.ndarray, int], np.ndarray]] = {
    WeightFn.INV: lambda x, _: 1.0 / x,
    WeightFn.EXP_NEG: lambda x, _: np.exp(-x),
    WeightFn.RAW: lambda x, length: x / length,
}

_NORMALIZED_WEIGHTS: Dict[WeightFn, Callable[[np.ndarray], np.ndarray]] = {
    WeightFn.HAT: lambda xh: xh,
    WeightFn.ONE_MINUS_HAT: lambda xh: 1.0 - xh,
    WeightFn.INV_HAT: lambda xh: 1.0 / (1.0 + xh),
    WeightFn.EXP_NEG_HAT: lambda xh: np.exp(-xh),
}


@dataclass(frozen=True)
class Fingerprint:
    values: np.ndarray
    weight_id: WeightFn
    l_px: int

    def __post_init__(self) -> None:
        self.values.setflags(write=False)

    @property
    def m(self) -> int:
        return len(self.values)


def apply_weight(cfv: Features, w: WeightFn, l_px: int) -> Fingerprint:
    """Apply the weight function elementwise; rays without a feature map to exactly 0.

    Min-max normalized variants use the numeric entries of this vector only.
    A single numeric entry normalizes to 0.
    """
    raw = cfv.values if isinstance(cfv, CriticalFeatureVector) else tuple(cfv)
    w = WeightFn(w)
    present = np.array([x is not None for x in raw], dtype=bool)
    x = np.array([float(v) for v in raw if v is not None])
    if x.size and (np.any(x < 1) or np.any(x > l_px)):
        raise ContractError(f"Critical features must lie in [1, {l_px}] (got {x.tolist()})")

    out = np.zeros(len(raw))
    if x.size:
        if w in _RAW_WEIGHTS:
            weighted = _RAW_WEIGHTS[w](x, l_px)
        else:
            weighted = _NORMALIZED_WEIGHTS[w](_min_max(x))
        out[present] = weighted
    return Fingerprint(values=out, weight_id=w, l_px=l_px)
