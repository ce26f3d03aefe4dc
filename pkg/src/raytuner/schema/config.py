"""Configuration models for every stage of the pipeline.

All models carry the documented defaults, so ``RayConfig()`` is the 6-ray,
60-pixel, 0.5 mV-per-pixel projection and ``RunConfig()`` is a complete,
runnable configuration.
"""

import math
from typing import Any, List, Tuple, Type, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..exceptions import ConfigurationError
from .models import DeviceState, WeightFn

Range = Tuple[float, float]

T = TypeVar("T", bound=BaseModel)


def parse_config(model: Type[T], data: Any) -> T:
    """Validate ``data`` against ``model``, raising ConfigurationError on failure."""
    try:
        return model.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid {model.__name__}: {e}") from e


def one_hot(state: DeviceState) -> Tuple[float, float, float, float, float]:
    vec = [0.0] * len(DeviceState)
    vec[int(state)] = 1.0
    return (vec[0], vec[1], vec[2], vec[3], vec[4])


class ParameterRanges(BaseModel):
    """Sampling ranges for randomized devices.

    Ranges are checked by ``check()`` rather than on construction so that
    ``make_device`` can report a bad table as a ConfigurationError.
    """

    model_config = ConfigDict(extra="forbid")

    e1_mv: Range = (40.0, 60.0)
    e2_mv: Range = (40.0, 60.0)
    # Em as a fraction of sqrt(E1 * E2)
    em_frac: Range = (0.2, 0.45)
    lever_diag_per_mv: Range = (0.040, 0.050)
    # off-diagonal plunger lever arms as a fraction of the diagonal ones
    lever_cross_frac: Range = (0.25, 0.45)
    lever_barrier_per_mv: Range = (0.001, 0.003)
    pinch_off_mv: Range = (80.0, 120.0)
    beta1: Range = (0.9, 1.0)
    # beta2 / beta1
    beta_ratio: Range = (0.4, 0.5)
    tb_mv: Range = (1.2, 1.8)
    merge_mid_mv: Range = (60.0, 100.0)
    merge_width_mv: Range = (5.0, 20.0)
    # noise sigma as a fraction of the typical dot-1 ridge height
    noise_frac: Range = (0.01, 0.03)

    def check(self) -> None:
        for name in type(self).model_fields:
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ConfigurationError(f"Range {name} must be finite (got {lo!r}, {hi!r})")
            if lo > hi:
                raise ConfigurationError(f"Range {name} is empty (min {lo} > max {hi})")

        positive = ["e1_mv", "e2_mv", "lever_diag_per_mv", "tb_mv", "beta1", "beta_ratio"]
        for name in positive:
            if getattr(self, name)[0] <= 0:
                raise ConfigurationError(f"Range {name} must be strictly positive")
        for name in ["em_frac", "lever_cross_frac", "lever_barrier_per_mv", "merge_width_mv", "noise_frac"]:
            if getattr(self, name)[0] < 0:
                raise ConfigurationError(f"Range {name} must be non-negative")
        if self.em_frac[1] >= 1.0:
            raise ConfigurationError("em_frac must stay below 1 (Em < sqrt(E1*E2))")
        if self.beta1[1] > 1.0:
            raise ConfigurationError("beta1 must not exceed 1")
        if self.beta_ratio[1] >= 1.0:
            raise ConfigurationError("beta_ratio must stay below 1 (beta2 < beta1)")


class RayConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    m: int = Field(default=6, ge=3, description="Number of rays")
    l_px: int = Field(default=60, ge=8, description="Samples per ray")
    px_mv: float = Field(default=0.5, gt=0.0, description="mV per pixel")

    @property
    def length_mv(self) -> float:
        return self.l_px * self.px_mv

    @property
    def pixels(self) -> int:
        return self.m * self.l_px


class PeakConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    height_k: float = Field(default=3.0, gt=0.0)
    prom_k: float = Field(default=2.0, gt=0.0)
    min_separation_px: int = Field(default=3, ge=1)


class QualityConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    snr_min: float = Field(default=4.0, gt=0.0)


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    epochs: int = Field(default=100, ge=1)
    batch_size: int = Field(default=64, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0.0)
    # multiplicative step-size decay applied after every epoch
    lr_decay: float = Field(default=1.0, gt=0.0, le=1.0)
    seed: int = 0
    validation_split: float = Field(default=0.1, gt=0.0, lt=1.0)


class FitnessConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    p_target: Tuple[float, float, float, float, float] = one_hot(DeviceState.DD)
    pinch_offs: Tuple[float, float] = Field(default=(0.0, 0.0), description="(V_P1^0, V_P2^0) in mV")
    vb_pinch_off: float = Field(default=0.0, description="V_B reference for the optional barrier term (mV)")
    v0_mv: float = Field(default=20.0, gt=0.0)
    eps_coeff: float = Field(default=0.1, ge=0.0)
    include_vb_penalty: bool = False

    @field_validator("p_target")
    @classmethod
    def _check_simplex(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if any(p < 0 for p in v) or abs(sum(v) - 1.0) > 1e-9:
            raise ValueError("p_target must be a probability vector")
        return v


class SimplexConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    plunger_step_mv: float = Field(default=40.0, gt=0.0)
    barrier_step_mv: float = Field(default=25.0, gt=0.0)
    x_tol_mv: float = Field(default=1.0, gt=0.0)
    f_tol: float = Field(default=1e-3, gt=0.0)
    max_iter: int = Field(default=100, ge=1)
    reflection: float = Field(default=1.0, gt=0.0)
    expansion: float = Field(default=2.0, gt=1.0)
    contraction: float = Field(default=0.5, gt=0.0, lt=1.0)
    shrink: float = Field(default=0.5, gt=0.0, lt=1.0)


class SweepSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    ray_counts: List[int] = Field(default_factory=lambda: [5, 6, 7, 9, 12])
    ray_lengths_px: List[int] = Field(default_factory=lambda: list(range(20, 81, 4)))
    weights: List[WeightFn] = Field(default_factory=lambda: [WeightFn.INV])
    n_models: int = Field(default=20, ge=1)
    seed: int = 0
    px_mv: float = Field(default=0.5, gt=0.0)
    n_devices: int = Field(default=20, ge=1)
    per_device: int = Field(default=1350, ge=5)
    test_devices: int = Field(default=5, ge=1)
    test_per_device: int = Field(default=100, ge=5)
    baseline_px: int = Field(default=900, ge=1)

    @model_validator(mode="after")
    def _check_grids(self) -> "SweepSpec":
        if not self.ray_counts or not self.ray_lengths_px or not self.weights:
            raise ValueError("Sweep grids must be non-empty")
        if any(m < 3 for m in self.ray_counts):
            raise ValueError("Ray counts must be >= 3")
        if any(not 8 <= length <= 200 for length in self.ray_lengths_px):
            raise ValueError("Ray lengths must lie within [8, 200] px")
        return self


class RunConfig(BaseModel):
    """Everything the CLI can be configured with, loaded from ``--config``."""

    model_config = ConfigDict(extra="forbid")

    ray: RayConfig = Field(default_factory=RayConfig)
    peaks: PeakConfig = Field(default_factory=PeakConfig)
    quality: QualityConfig = Field(default_factory=QualityConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    fitness: FitnessConfig = Field(default_factory=FitnessConfig)
    simplex: SimplexConfig = Field(default_factory=SimplexConfig)
    sweep: SweepSpec = Field(default_factory=SweepSpec)
    device_ranges: ParameterRanges = Field(default_factory=ParameterRanges)
