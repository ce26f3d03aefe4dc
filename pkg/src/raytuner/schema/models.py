from enum import Enum, IntEnum
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field


class DeviceState(IntEnum):
    """Device states in probability-vector order."""

    ND = 0
    SD_L = 1
    SD_C = 2
    SD_R = 3
    DD = 4


class WeightFn(str, Enum):
    INV = "inv"
    EXP_NEG = "exp_neg"
    ONE_MINUS_HAT = "one_minus_hat"
    HAT = "hat"
    RAW = "raw"
    INV_HAT = "inv_hat"
    EXP_NEG_HAT = "exp_neg_hat"


class DiagramMeta(BaseModel):
    v1_min: float
    v1_max: float
    v2_min: float
    v2_max: float
    resolution_mv: float = Field(..., gt=0.0)
    vb_mv: float
    device_seed: Optional[int] = None
    noise_seed: Optional[int] = None


class DiagramDocument(BaseModel):
    meta: DiagramMeta
    signal: List[List[float]] = Field(..., description="Row-major grid, rows follow v2, columns follow v1")
    labels: List[List[int]]


class ProjectionDocument(BaseModel):
    origin_mv: Tuple[float, float] = Field(..., description="[V_P1, V_P2]")
    vb_mv: float
    m: int = Field(..., ge=3)
    l_px: int = Field(..., ge=8)
    px_mv: float = Field(..., gt=0.0)
    samples: List[List[float]]


class FingerprintRecord(BaseModel):
    m: int = Field(..., ge=3)
    l_px: int = Field(..., ge=8)
    px_mv: float = Field(..., gt=0.0)
    weight_id: WeightFn
    values: List[float]
    label: Optional[DeviceState] = None
    device_seed: Optional[int] = None
    origin_mv: Optional[Tuple[float, float, float]] = Field(default=None, description="[V_P1, V_P2, V_B]")


class ModelDocument(BaseModel):
    version: int = 1
    m: int = Field(..., ge=3)
    layer_dims: List[int]
    weights: List[List[List[float]]] = Field(..., description="Row-major (d_in, d_out) matrices")
    biases: List[List[float]]
    activation: Literal["relu"] = "relu"
    l_px: Optional[int] = None
    weight_id: Optional[WeightFn] = None


class EvalReportDocument(BaseModel):
    accuracies: List[float]
    mean: float
    std: float
    confusion: List[List[int]] = Field(..., description="Rows are true states, columns are predictions")
    per_class_accuracy: List[Optional[float]]


class TrajectoryPoint(BaseModel):
    point: List[float]
    fitness: Optional[float] = Field(default=None, description="None encodes an infinite (rejected) evaluation")
    probabilities: Optional[List[float]] = None


class TuneResultDocument(BaseModel):
    start: List[float]
    trajectory: List[TrajectoryPoint]
    final_point: List[float]
    final_fitness: Optional[float] = None
    iterations: int
    reason: str
    success: Optional[bool] = None
    final_state: Optional[DeviceState] = None
    warnings: List[str] = Field(default_factory=list)


class RegionSlice(BaseModel):
    vb_mv: Optional[float] = None
    vertices: List[Tuple[float, float]] = Field(default_factory=list, description="[V_P1, V_P2] polygon")


class SuccessRegionDocument(BaseModel):
    target: DeviceState = DeviceState.DD
    slices: List[RegionSlice]
