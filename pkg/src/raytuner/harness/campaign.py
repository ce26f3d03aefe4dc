"""Tuning campaigns: many Nelder-Mead runs from a grid of starts, scored against a success region."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from ..classify import RayClassifier
from ..exceptions import ConfigurationError
from ..schema import DeviceState, FitnessConfig, RayConfig, SimplexConfig
from ..sim import REFERENCE_VB_2D, REFERENCE_VB_STACK
from ..sim.device import DeviceParams, pinch_off_point, reference_device
from ..sim.render import DiagramStack, StabilityDiagram, default_window, render_diagram, render_stack
from ..sim.sampler import DeviceSampler
from ..tune.region import SuccessRegion, SuccessReport, success_rate
from ..tune.space import DiagramSpace, SamplerSpace, StackSpace, TuningSpace
from ..tune.tuner import StateMap, TuneResult, classify_map, tune
from . import seeds
from .io import write_csv
from .trace import RunTrace

# near-miss region: the success region grown by this many pixels
NEAR_MISS_DILATE_PX = 10


@dataclass(frozen=True)
class Campaign:
    """Everything a batch of tuning runs shares."""

    source: Union[StabilityDiagram, DiagramStack]
    space: TuningSpace
    region: SuccessRegion
    near_region: Optional[SuccessRegion]
    fitness_cfg: FitnessConfig

    @property
    def dims(self) -> int:
        return self.space.dims

    def center(self) -> np.ndarray:
        """Centre of the plunger domain."""
        return (self.space.lower[:2] + self.space.upper[:2]) / 2.0


def make_campaign(
    source: Union[StabilityDiagram, DiagramStack],
    ray_cfg: RayConfig,
    fitness_cfg: Optional[FitnessConfig] = None,
    params: Optional[DeviceParams] = None,
    target: DeviceState = DeviceState.DD,
    near_dilate_px: int = NEAR_MISS_DILATE_PX,
) -> Campaign:
    """Campaign over a diagram (2D) or stack (3D).

    With ``params`` the fitness pinch-offs are taken from the device. The V_B
    penalty stays as configured in ``fitness_cfg`` (off by default).
    """
    fitness_cfg = fitness_cfg or FitnessConfig()
    if isinstance(source, DiagramStack):
        space: TuningSpace = StackSpace(source, ray_cfg)
    else:
        space = DiagramSpace(source, ray_cfg)

    if params is not None:
        vb_ref = source.vb if isinstance(source, StabilityDiagram) else REFERENCE_VB_2D
        fitness_cfg = fitness_cfg.model_copy(update={"pinch_offs": pinch_off_point(params, vb_ref)})

    region = SuccessRegion.from_labels(source, target)
    near = SuccessRegion.from_labels(source, target, dilate_px=near_dilate_px) if near_dilate_px > 0 else None
    return Campaign(source=source, space=space, region=region, near_region=near, fitness_cfg=fitness_cfg)


def reference_campaign(
    dims: int = 2,
    ray_cfg: Optional[RayConfig] = None,
    fitness_cfg: Optional[FitnessConfig] = None,
    noise_seed: int = 0,
    size_mv: float = 300.0,
    resolution: float = 0.5,
) -> Campaign:
    """The reference device's 2D slice at V_B = 50 mV, or its six-slice stack for ``dims=3``."""
    if dims not in (2, 3):
        raise ConfigurationError(f"Tuning campaigns are 2D or 3D (got {dims})")
    ray_cfg = ray_cfg or RayConfig()
    params = reference_device()
    window = default_window(params, REFERENCE_VB_2D, size_mv, resolution)
    if dims == 2:
        source: Union[StabilityDiagram, DiagramStack] = render_diagram(
            params, window, resolution, REFERENCE_VB_2D, noise_seed
        )
    else:
        source = render_stack(params, window, resolution, REFERENCE_VB_STACK, noise_seed)
    return make_campaign(source, ray_cfg, fitness_cfg, params)


def reference_sampler_space(
    dims: int = 2,
    ray_cfg: Optional[RayConfig] = None,
    noise_seed: int = 0,
    size_mv: float = 300.0,
    resolution: float = 0.5,
) -> SamplerSpace:
    """Live access to the reference device over the reference campaign's window.

    2D spaces sit at V_B = 50 mV; 3D spaces span the stack's barrier range.
    """
    if dims not in (2, 3):
        raise ConfigurationError(f"Tuning spaces are 2D or 3D (got {dims})")
    params = reference_device()
    window = default_window(params, REFERENCE_VB_2D, size_mv, resolution)
    vb_range = (min(REFERENCE_VB_STACK), max(REFERENCE_VB_STACK))
    sampler = DeviceSampler.for_window(params, window, vb_range, noise_seed, resolution)
    return SamplerSpace(sampler, ray_cfg or RayConfig(), REFERENCE_VB_2D if dims == 2 else None)


def start_points(
    n: int,
    center: Sequence[float],
    window_mv: float,
    seed: int = 0,
    vb: Optional[float] = None,
) -> np.ndarray:
    """``n`` starts in a ``window_mv`` square around ``center``.

    A perfect-square ``n`` gives an evenly spaced grid; anything else is drawn
    uniformly from the ``starts`` stream of ``seed``. With ``vb`` every start
    gets that barrier voltage as a third coordinate.
    """
    if n < 1:
        raise ConfigurationError(f"Need at least one start (got {n})")
    if window_mv <= 0:
        raise ConfigurationError(f"Start window must be positive (got {window_mv})")
    c = np.asarray(center, dtype=float)[:2]
    half = window_mv / 2.0
    k = math.isqrt(n)
    if k * k == n:
        ticks = np.linspace(-half, half, k) if k > 1 else np.zeros(1)
        gx, gy = np.meshgrid(c[0] + ticks, c[1] + ticks)
        pts = np.column_stack([gx.ravel(), gy.ravel()])
    else:
        pts = c + seeds.generator(seed, seeds.STARTS).uniform(-half, half, size=(n, 2))
    if vb is not None:
        pts = np.column_stack([pts, np.full(n, float(vb))])
    return pts


def campaign_starts(campaign: Campaign, n: int, window_mv: float, seed: int = 0) -> np.ndarray:
    """Starts centred on the plunger domain; 3D campaigns start in the highest-barrier slice."""
    vb = float(campaign.space.upper[2]) if campaign.dims == 3 else None
    return start_points(n, campaign.center(), window_mv, seed, vb)


@dataclass(frozen=True)
class CampaignResult:
    results: List[TuneResult]
    report: SuccessReport


def tune_sweep(
    classifier: RayClassifier,
    campaign: Campaign,
    starts: np.ndarray,
    simplex_cfg: Optional[SimplexConfig] = None,
    max_workers: Optional[int] = None,
    trace: Optional[RunTrace] = None,
) -> CampaignResult:
    """One tuning run per start, concurrently; results keep the order of ``starts``."""
    trace = trace or RunTrace()
    simplex_cfg = simplex_cfg or SimplexConfig()

    def run(x0: np.ndarray) -> TuneResult:
        return tune(classifier, campaign.space, x0, campaign.fitness_cfg, simplex_cfg, region=campaign.region)

    if max_workers == 1:
        results = [run(x0) for x0 in starts]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(run, starts))
    trace.add_step("Tuning runs", len(results))

    report = success_rate(results, campaign.region, campaign.near_region)
    trace.add_step("Score", len(report.outcomes))
    return CampaignResult(results, report)


def campaign_rows(result: CampaignResult, dims: int) -> tuple[List[str], List[list]]:
    axes = ["v1", "v2", "vb"][:dims]
    header = (
        [f"start_{a}" for a in axes]
        + [f"final_{a}" for a in axes]
        + ["final_fitness", "iterations", "reason", "final_state", "success", "near_miss", "evaluations"]
    )
    rows = []
    for r, o in zip(result.results, result.report.outcomes, strict=True):
        rows.append(
            [*o.start, *o.final]
            + [
                r.final_fitness if math.isfinite(r.final_fitness) else None,
                r.iterations,
                r.reason,
                r.final_state.name if r.final_state is not None else None,
                o.success,
                o.near_miss,
                len(r.trajectory),
            ]
        )
    return header, rows


def write_campaign_csv(result: CampaignResult, dims: int, path: Path) -> Path:
    header, rows = campaign_rows(result, dims)
    return write_csv(path, header, rows)


def state_map_grid(space: TuningSpace, step_mv: float) -> tuple[np.ndarray, np.ndarray]:
    """Plunger grid over the tuning domain, ``step_mv`` apart."""
    if step_mv <= 0:
        raise ConfigurationError(f"Grid step must be positive (got {step_mv})")
    v1 = np.arange(space.lower[0], space.upper[0] + 1e-9, step_mv)
    v2 = np.arange(space.lower[1], space.upper[1] + 1e-9, step_mv)
    return v1, v2


def space_state_map(
    classifier: RayClassifier, space: TuningSpace, step_mv: float, vb: Optional[float] = None
) -> StateMap:
    """State map over ``space``'s plunger domain; 3D spaces default to their highest barrier voltage."""
    v1, v2 = state_map_grid(space, step_mv)
    if space.dims == 3 and vb is None:
        vb = float(space.upper[2])
    return classify_map(classifier, space, v1, v2, vb)


def campaign_state_map(
    classifier: RayClassifier, campaign: Campaign, step_mv: float, vb: Optional[float] = None
) -> StateMap:
    return space_state_map(classifier, campaign.space, step_mv, vb)


def state_map_rows(smap: StateMap) -> tuple[List[str], List[list]]:
    """Long-format rows; quality-gated points have an empty state."""
    rows = []
    for r, y in enumerate(smap.v2):
        for c, x in enumerate(smap.v1):
            s = int(smap.states[r, c])
            rows.append([float(x), float(y), DeviceState(s).name if s >= 0 else None])
    return ["v1", "v2", "state"], rows
