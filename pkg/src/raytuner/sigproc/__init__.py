from .noise import MAD_TO_SIGMA, NoiseEstimate, calibrate_noise, noise_estimate, noise_level, robust_std
from .peaks import NO_FEATURE, CriticalFeatureVector, critical_features, find_peaks
from .quality import calibrate_quality_threshold, quality_check, quality_statistic

__all__ = [
    "MAD_TO_SIGMA",
    "NO_FEATURE",
    "CriticalFeatureVector",
    "NoiseEstimate",
    "calibrate_noise",
    "calibrate_quality_threshold",
    "critical_features",
    "find_peaks",
    "noise_estimate",
    "noise_level",
    "quality_check",
    "quality_statistic",
    "robust_std",
]
