"""Ray-based classification: projection -> critical features -> fingerprint -> state probabilities."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fingerprint import Fingerprint, apply_weight
from .ml.exceptions import DimensionMismatchError
from .ml.mlp import MLPModel, forward
from .rays.geometry import MProjection
from .schema import DeviceState, PeakConfig, QualityConfig, RayConfig, WeightFn
from .sigproc.noise import NoiseEstimate
from .sigproc.peaks import CriticalFeatureVector, critical_features
from .sigproc.quality import quality_check


def fingerprint_projection(
    proj: MProjection,
    weight: WeightFn,
    peak_cfg: PeakConfig | None = None,
    noise: NoiseEstimate | None = None,
) -> Fingerprint:
    cfv = critical_features(proj, peak_cfg or PeakConfig(), noise)
    return apply_weight(cfv, weight, proj.config.l_px)


@dataclass(frozen=True)
class ClassificationResult:
    projection: MProjection
    features: CriticalFeatureVector
    fingerprint: Fingerprint
    passed_quality: bool
    # None when the projection failed the quality gate
    probabilities: Optional[np.ndarray] = None

    @property
    def state(self) -> Optional[DeviceState]:
        if self.probabilities is None:
            return None
        return DeviceState(int(np.argmax(self.probabilities)))


class RayClassifier:
    """A trained model bound to the ray geometry and weight function it was trained with."""

    def __init__(
        self,
        model: MLPModel,
        ray_cfg: RayConfig,
        weight: WeightFn,
        peak_cfg: PeakConfig | None = None,
        quality_cfg: QualityConfig | None = None,
        noise: NoiseEstimate | None = None,
        check_quality: bool = True,
    ) -> None:
        if model.m != ray_cfg.m:
            raise DimensionMismatchError(f"Model expects {model.m} rays, ray config has {ray_cfg.m}")
        if model.l_px is not None and model.l_px != ray_cfg.l_px:
            raise DimensionMismatchError(f"Model was trained on {model.l_px}-px rays, ray config has {ray_cfg.l_px}")
        if model.weight_id is not None and model.weight_id != weight:
            raise DimensionMismatchError(f"Model was trained with weight {model.weight_id.value}, not {weight.value}")
        self.model = model
        self.ray_cfg = ray_cfg
        self.weight = weight
        self.peak_cfg = peak_cfg or PeakConfig()
        self.quality_cfg = quality_cfg or QualityConfig()
        self.noise = noise
        self.check_quality = check_quality

    def __call__(self, proj: MProjection) -> ClassificationResult:
        return self.classify(proj)

    def classify(self, proj: MProjection) -> ClassificationResult:
        if proj.config != self.ray_cfg:
            raise DimensionMismatchError("Projection ray configuration differs from the classifier's")
        cfv = critical_features(proj, self.peak_cfg, self.noise)
        fp = apply_weight(cfv, self.weight, proj.config.l_px)
        passed = quality_check(proj, self.quality_cfg) if self.check_quality else True
        probs = forward(self.model, fp) if passed else None
        return ClassificationResult(
            projection=proj,
            features=cfv,
            fingerprint=fp,
            passed_quality=passed,
            probabilities=probs,
        )
