from .config import (
    FitnessConfig,
    ParameterRanges,
    PeakConfig,
    QualityConfig,
    RayConfig,
    RunConfig,
    SimplexConfig,
    SweepSpec,
    TrainConfig,
    one_hot,
    parse_config,
)
from .models import (
    DeviceState,
    DiagramDocument,
    DiagramMeta,
    EvalReportDocument,
    FingerprintRecord,
    ModelDocument,
    ProjectionDocument,
    RegionSlice,
    SuccessRegionDocument,
    TrajectoryPoint,
    TuneResultDocument,
    WeightFn,
)

__all__ = [
    "DeviceState",
    "DiagramDocument",
    "DiagramMeta",
    "EvalReportDocument",
    "FingerprintRecord",
    "FitnessConfig",
    "ModelDocument",
    "ParameterRanges",
    "PeakConfig",
    "ProjectionDocument",
    "QualityConfig",
    "RayConfig",
    "RegionSlice",
    "RunConfig",
    "SimplexConfig",
    "SuccessRegionDocument",
    "SweepSpec",
    "TrainConfig",
    "TrajectoryPoint",
    "TuneResultDocument",
    "WeightFn",
    "one_hot",
    "parse_config",
]
