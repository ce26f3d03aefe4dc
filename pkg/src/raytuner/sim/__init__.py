"""Constant-interaction double-dot simulator.

Example usage:
    >>> from raytuner.sim import make_device, render_diagram, default_window
    >>>
    >>> params = make_device(seed=7)
    >>> window = default_window(params, vb=0.0, size_mv=200.0)
    >>> diagram = render_diagram(params, window, resolution=0.5, vb=0.0, noise_seed=1)
"""

from .device import (
    DeviceParams,
    induced_charges,
    is_merged,
    label_state,
    label_states,
    make_device,
    occupancy,
    occupancy_grid,
    pinch_off_point,
    reference_device,
    ridge_height,
    sensed_charge,
    sensor_signal,
    state_from_occupancy,
)
from .render import DiagramStack, StabilityDiagram, Window, default_window, render_diagram, render_stack
from .sampler import DeviceSampler

# reference campaign geometry
REFERENCE_VB_2D = 50.0
REFERENCE_VB_STACK = (-100.0, -50.0, 0.0, 50.0, 100.0, 150.0)

__all__ = [
    "REFERENCE_VB_2D",
    "REFERENCE_VB_STACK",
    "DeviceParams",
    "DeviceSampler",
    "DiagramStack",
    "StabilityDiagram",
    "Window",
    "default_window",
    "induced_charges",
    "is_merged",
    "label_state",
    "label_states",
    "make_device",
    "occupancy",
    "occupancy_grid",
    "pinch_off_point",
    "reference_device",
    "render_diagram",
    "render_stack",
    "ridge_height",
    "sensed_charge",
    "sensor_signal",
    "state_from_occupancy",
]
