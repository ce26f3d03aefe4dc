from .acquire import acquire_live, acquire_offline, bilinear
from .base import CallableSampler, Sampler, VoltageBox
from .geometry import MProjection, as_origin, directions, ray_points

__all__ = [
    "CallableSampler",
    "MProjection",
    "Sampler",
    "VoltageBox",
    "acquire_live",
    "acquire_offline",
    "as_origin",
    "bilinear",
    "directions",
    "ray_points",
]
