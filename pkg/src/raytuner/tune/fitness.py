import math
from typing import Sequence

import numpy as np

from ..schema import FitnessConfig


def penalty(x: Sequence[float], cfg: FitnessConfig) -> float:
    """c * [tanh((V_P1 - V_P1^0)/V0) + tanh((V_P2 - V_P2^0)/V0)], plus the V_B term when enabled."""
    terms = math.tanh((x[0] - cfg.pinch_offs[0]) / cfg.v0_mv) + math.tanh((x[1] - cfg.pinch_offs[1]) / cfg.v0_mv)
    if cfg.include_vb_penalty and len(x) > 2:
        terms += math.tanh((x[2] - cfg.vb_pinch_off) / cfg.v0_mv)
    return cfg.eps_coeff * terms


def fitness(p: Sequence[float], x: Sequence[float], cfg: FitnessConfig) -> float:
    """Distance to the target probability vector plus the pinch-off penalty."""
    dist = float(np.linalg.norm(np.asarray(cfg.p_target, dtype=float) - np.asarray(p, dtype=float)))
    return dist + penalty(x, cfg)
