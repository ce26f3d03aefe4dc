"""Target regions in plunger space and tuning success statistics."""

from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Protocol, Sequence, Union

import cv2 as cv
import numpy as np

from ..exceptions import ContractError
from ..schema import DeviceState, RegionSlice, SuccessRegionDocument
from ..sim.render import DiagramStack, StabilityDiagram


def point_in_polygon(point: Sequence[float], vertices: np.ndarray | Sequence[Sequence[float]]) -> bool:
    """Points on an edge or vertex count as inside."""
    poly = np.asarray(vertices, dtype=np.float32).reshape(-1, 1, 2)
    if len(poly) < 3:
        return False
    x, y = (float(c) for c in np.asarray(point, dtype=float)[:2])
    return cv.pointPolygonTest(poly, (x, y), False) >= 0


@dataclass(frozen=True)
class RegionPolygon:
    vertices: np.ndarray
    vb: Optional[float] = None

    @property
    def empty(self) -> bool:
        return len(self.vertices) < 3

    def contains(self, point: Sequence[float]) -> bool:
        return not self.empty and point_in_polygon(point, self.vertices)

    def centroid(self) -> np.ndarray:
        if self.empty:
            raise ContractError("Empty region has no centroid")
        moments = cv.moments(self.vertices.astype(np.float32))
        if moments["m00"] == 0:
            return self.vertices.mean(axis=0)
        return np.array([moments["m10"] / moments["m00"], moments["m01"] / moments["m00"]])


def _largest_polygon(mask: np.ndarray, diagram: StabilityDiagram, tolerance_px: float) -> np.ndarray:
    contours, _ = cv.findContours(mask, cv.RETR_EXTERNAL, cv.CHAIN_APPROX_SIMPLE)[-2:]
    if not contours:
        return np.empty((0, 2))
    contour = max(contours, key=cv.contourArea)
    approx = cv.approxPolyDP(contour, tolerance_px, True).reshape(-1, 2).astype(float)
    if len(approx) < 3:
        return np.empty((0, 2))
    # contour points are (col, row) pixel centers
    v1 = diagram.v1_axis[0] + approx[:, 0] * diagram.resolution
    v2 = diagram.v2_axis[0] + approx[:, 1] * diagram.resolution
    return np.stack([v1, v2], axis=1)


def region_polygon(
    diagram: StabilityDiagram,
    target: DeviceState = DeviceState.DD,
    tolerance_px: float = 1.0,
    dilate_px: int = 0,
) -> RegionPolygon:
    """Largest connected ``target`` component of the label grid as a simplified polygon."""
    mask = np.where(diagram.labels == int(target), 255, 0).astype(np.uint8)
    if dilate_px > 0:
        kernel = cv.getStructuringElement(cv.MORPH_ELLIPSE, (2 * dilate_px + 1, 2 * dilate_px + 1))
        mask = cv.dilate(mask, kernel)
    return RegionPolygon(_largest_polygon(mask, diagram, tolerance_px), diagram.vb)


@dataclass(frozen=True)
class SuccessRegion:
    """One polygon for 2D tuning, or one per barrier slice for 3D tuning."""

    slices: List[RegionPolygon]
    target: DeviceState = DeviceState.DD
    three_d: bool = field(default=False)

    def __post_init__(self) -> None:
        if not self.slices:
            raise ContractError("A success region needs at least one slice")

    @classmethod
    def from_labels(
        cls,
        source: Union[StabilityDiagram, DiagramStack],
        target: DeviceState = DeviceState.DD,
        tolerance_px: float = 1.0,
        dilate_px: int = 0,
    ) -> "SuccessRegion":
        if isinstance(source, DiagramStack):
            polys = [region_polygon(s, target, tolerance_px, dilate_px) for s in source.slices]
            return cls(polys, target, three_d=True)
        return cls([region_polygon(source, target, tolerance_px, dilate_px)], target)

    @classmethod
    def from_vertices(
        cls, vertices: Sequence[Sequence[float]], target: DeviceState = DeviceState.DD
    ) -> "SuccessRegion":
        return cls([RegionPolygon(np.asarray(vertices, dtype=float).reshape(-1, 2))], target)

    def polygon_for(self, vb: Optional[float]) -> RegionPolygon:
        """Polygon of the slice nearest to ``vb``; ties resolve to the lower V_B."""
        if not self.three_d or vb is None:
            return self.slices[0]
        vbs = np.array([s.vb for s in self.slices], dtype=float)
        dist = np.abs(vbs - vb)
        candidates = np.flatnonzero(dist <= dist.min() + 1e-12)
        return self.slices[int(candidates[np.argmin(vbs[candidates])])]

    def contains(self, point: Sequence[float]) -> bool:
        vb = float(point[2]) if len(point) > 2 else None
        return self.polygon_for(vb).contains(point[:2])

    def to_document(self) -> SuccessRegionDocument:
        return SuccessRegionDocument(
            target=self.target,
            slices=[
                RegionSlice(
                    vb_mv=s.vb if self.three_d else None,
                    vertices=[(float(x), float(y)) for x, y in s.vertices],
                )
                for s in self.slices
            ],
        )

    @classmethod
    def from_document(cls, doc: SuccessRegionDocument) -> "SuccessRegion":
        polys = [RegionPolygon(np.asarray(s.vertices, dtype=float).reshape(-1, 2), s.vb_mv) for s in doc.slices]
        three_d = len(polys) > 1 or polys[0].vb is not None
        return cls(polys, doc.target, three_d=three_d)


class HasFinalPoint(Protocol):
    start: Sequence[float]
    final_point: Sequence[float]


class Outcome(NamedTuple):
    start: List[float]
    final: List[float]
    success: bool
    near_miss: bool


class SuccessReport(NamedTuple):
    rate: float
    outcomes: List[Outcome]
    near_miss_rate: Optional[float] = None


def success_rate(
    results: Sequence[HasFinalPoint],
    region: SuccessRegion,
    near_region: Optional[SuccessRegion] = None,
) -> SuccessReport:
    """Fraction of final points inside ``region``.

    With ``near_region`` the report also gives the fraction of runs that
    missed ``region`` but ended inside ``near_region``.
    """
    if not results:
        raise ContractError("No tuning results to score")
    outcomes = []
    for r in results:
        final = [float(x) for x in r.final_point]
        hit = region.contains(final)
        near = (not hit) and near_region is not None and near_region.contains(final)
        outcomes.append(Outcome([float(x) for x in r.start], final, hit, near))
    rate = sum(o.success for o in outcomes) / len(outcomes)
    near_rate = sum(o.near_miss for o in outcomes) / len(outcomes) if near_region is not None else None
    return SuccessReport(rate, outcomes, near_rate)
