from .fitness import fitness, penalty
from .region import (
    Outcome,
    RegionPolygon,
    SuccessRegion,
    SuccessReport,
    point_in_polygon,
    region_polygon,
    success_rate,
)
from .simplex import InitialSimplex, NelderMeadResult, Termination, initial_simplex, nelder_mead, step_signs
from .space import DiagramSpace, SamplerSpace, StackSpace, TuningSpace
from .tuner import Evaluation, StateMap, TuneResult, classify_map, tune

__all__ = [
    "DiagramSpace",
    "Evaluation",
    "InitialSimplex",
    "NelderMeadResult",
    "Outcome",
    "RegionPolygon",
    "SamplerSpace",
    "StackSpace",
    "StateMap",
    "SuccessRegion",
    "SuccessReport",
    "Termination",
    "TuneResult",
    "TuningSpace",
    "classify_map",
    "fitness",
    "initial_simplex",
    "nelder_mead",
    "penalty",
    "point_in_polygon",
    "region_polygon",
    "step_signs",
    "success_rate",
    "tune",
]
