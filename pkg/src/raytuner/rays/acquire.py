"""Live and off-line M-projection acquisition."""

from typing import Sequence

import numpy as np

from ..exceptions import OutOfRangeError
from ..schema import RayConfig
from ..sim.render import StabilityDiagram
from .base import Sampler
from .geometry import MProjection, as_origin, ray_points

# fractional grid coordinates this close to an integer are treated as exact nodes
_SNAP = 1e-9


def _first_bad_ray(inside: np.ndarray) -> int | None:
    bad = np.flatnonzero(~np.all(inside, axis=1))
    return int(bad[0]) if len(bad) else None


def acquire_live(sampler: Sampler, origin: Sequence[float], config: RayConfig) -> MProjection:
    """Measure all rays through ``sampler``; the sampler is held for the whole projection."""
    o = as_origin(origin)
    pts = ray_points(o, config)
    bad = _first_bad_ray(sampler.domain.contains(pts))
    if bad is not None:
        raise OutOfRangeError(f"Ray {bad} from origin {o} leaves the sampler domain")
    with sampler.locked():
        values = sampler.sample_many(pts.reshape(-1, 3))
    return MProjection(origin=o, config=config, samples=values.reshape(config.m, config.l_px))


def bilinear(grid: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of ``grid`` at fractional (row, col) coordinates.

    Coordinates must lie within [0, n - 1]. Floors are clamped to n - 2 so the
    upper edge is reached with weight 1 on the last node.
    """
    values = np.asarray(grid, dtype=float)
    queries = []
    for q, size in ((rows, values.shape[0]), (cols, values.shape[1])):
        q = np.asarray(q, dtype=float)
        nearest = np.rint(q)
        q = np.where(np.abs(q - nearest) < _SNAP, nearest, q)
        floor = np.clip(np.floor(q), 0, size - 2)
        queries.append((floor.astype(np.intp), q - floor))
    (r0, ar), (c0, ac) = queries

    top_left = values[r0, c0]
    top_right = values[r0, c0 + 1]
    bottom_left = values[r0 + 1, c0]
    bottom_right = values[r0 + 1, c0 + 1]
    top = top_left + ac * (top_right - top_left)
    bottom = bottom_left + ac * (bottom_right - bottom_left)
    interp = top + ar * (bottom - top)
    # exact node queries return the stored value untouched
    exact = (ar == 0) & (ac == 0)
    return np.where(exact, top_left, interp)


def acquire_offline(diagram: StabilityDiagram, origin: Sequence[float], config: RayConfig) -> MProjection:
    """Interpolate rays from a rendered diagram. The projection's V_B is the diagram's."""
    o2 = as_origin(origin, diagram.vb)
    o = (o2[0], o2[1], diagram.vb)
    pts = ray_points(o, config)

    cols = (pts[..., 0] - diagram.v1_axis[0]) / diagram.resolution
    rows = (pts[..., 1] - diagram.v2_axis[0]) / diagram.resolution
    n_rows, n_cols = diagram.shape
    inside = (cols >= -_SNAP) & (cols <= n_cols - 1 + _SNAP) & (rows >= -_SNAP) & (rows <= n_rows - 1 + _SNAP)
    bad = _first_bad_ray(inside)
    if bad is not None:
        raise OutOfRangeError(f"Ray {bad} from origin {o} leaves the diagram window")

    samples = bilinear(diagram.signal, np.clip(rows, 0, n_rows - 1), np.clip(cols, 0, n_cols - 1))
    return MProjection(origin=o, config=config, samples=samples)
