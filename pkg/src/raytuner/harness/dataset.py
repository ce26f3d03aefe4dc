"""Class-balanced fingerprint datasets from randomized simulated devices."""

import math
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from ..classify import fingerprint_projection
from ..exceptions import ContractError, DataError
from ..rays.base import VoltageBox
from ..rays.geometry import MProjection, ray_points
from ..schema import DeviceState, FingerprintRecord, ParameterRanges, PeakConfig, RayConfig, WeightFn
from ..sim.device import DeviceParams, label_states, make_device, pinch_off_point
from ..sim.sampler import DeviceSampler
from . import seeds
from .io import save_records
from .trace import RunTrace

N_STATES = len(DeviceState)

# candidate origins drawn per state and attempt
_BATCH = 512
MAX_ATTEMPTS = 25

# plunger sampling box relative to the pinch-off point, mV
_PLUNGER_BELOW = 40.0
_PLUNGER_ABOVE = 160.0
# barrier sampling span on each side of the merging crossover, mV
_VB_SPAN = 150.0
_VB_SPAN_MERGED = 60.0

_UNBOUNDED = VoltageBox((-math.inf,) * 3, (math.inf,) * 3)


def class_quotas(per_device: int) -> List[int]:
    """per_device / 5 per state; the remainder goes to the first states."""
    base, extra = divmod(per_device, N_STATES)
    return [base + (1 if k < extra else 0) for k in range(N_STATES)]


def _vb_range(params: DeviceParams, state: DeviceState, attempt: int) -> tuple[float, float]:
    # merged states live above the crossover; every retry moves further from it
    margin = 2.0 * params.merge_width + 10.0 * attempt
    if state == DeviceState.SD_C:
        lo = params.merge_mid + margin
        return lo, lo + _VB_SPAN_MERGED
    hi = params.merge_mid - margin
    return hi - _VB_SPAN, hi


def sample_origins(params: DeviceParams, per_device: int, rng: np.random.Generator) -> np.ndarray:
    """Origins (V_P1, V_P2, V_B) with exact per-state quotas, ordered by state.

    Raises DataError when a state cannot be reached within MAX_ATTEMPTS batches.
    """
    quotas = class_quotas(per_device)
    p0 = np.asarray(pinch_off_point(params, 0.0))
    dp = np.asarray(pinch_off_point(params, 1.0)) - p0

    found: Dict[DeviceState, List[np.ndarray]] = {s: [] for s in DeviceState}
    for state in DeviceState:
        need = quotas[state]
        attempt = 0
        while need > 0:
            if attempt >= MAX_ATTEMPTS:
                raise DataError(
                    f"Device {params.seed}: found only {quotas[state] - need}/{quotas[state]} {state.name} origins"
                )
            lo, hi = _vb_range(params, state, attempt)
            vb = rng.uniform(lo, hi, size=_BATCH)
            center = p0[None, :] + vb[:, None] * dp[None, :]
            plungers = center + rng.uniform(-_PLUNGER_BELOW, _PLUNGER_ABOVE, size=(_BATCH, 2))
            cand = np.column_stack([plungers, vb])
            hits = cand[label_states(params, cand) == int(state)][:need]
            found[state].extend(hits)
            need -= len(hits)
            attempt += 1
    return np.array([o for s in DeviceState for o in found[s]])


def device_records(
    params: DeviceParams,
    origins: np.ndarray,
    ray_cfg: RayConfig,
    weight: WeightFn,
    noise_seed: int,
    peak_cfg: Optional[PeakConfig] = None,
) -> List[FingerprintRecord]:
    """Live-acquire rays at every origin in one batched pass and label each fingerprint."""
    sampler = DeviceSampler(params, _UNBOUNDED, noise_seed)
    points = np.stack([ray_points(o, ray_cfg) for o in origins])
    samples = sampler.sample_many(points.reshape(-1, 3)).reshape(len(origins), ray_cfg.m, ray_cfg.l_px)
    labels = label_states(params, origins)

    records = []
    for origin, rays, label in zip(origins, samples, labels, strict=True):
        o = (float(origin[0]), float(origin[1]), float(origin[2]))
        fp = fingerprint_projection(MProjection(origin=o, config=ray_cfg, samples=rays), weight, peak_cfg)
        records.append(
            FingerprintRecord(
                m=ray_cfg.m,
                l_px=ray_cfg.l_px,
                px_mv=ray_cfg.px_mv,
                weight_id=weight,
                values=fp.values.tolist(),
                label=DeviceState(int(label)),
                device_seed=params.seed,
                origin_mv=o,
            )
        )
    return records


def gen_dataset(
    n_devices: int,
    per_device: int,
    ray_cfg: RayConfig,
    weight: WeightFn,
    seed: int,
    ranges: Optional[ParameterRanges] = None,
    peak_cfg: Optional[PeakConfig] = None,
    path: Optional[Path] = None,
    trace: Optional[RunTrace] = None,
) -> List[FingerprintRecord]:
    """n_devices * per_device labeled fingerprints, class-balanced per device.

    Device parameters, origins and noise each come from their own named
    stream of ``seed``, so the same origins are reused when only the ray
    geometry or weight changes.
    """
    if n_devices < 1:
        raise ContractError(f"n_devices must be >= 1 (got {n_devices})")
    if per_device < N_STATES:
        raise ContractError(f"per_device must be >= {N_STATES} (got {per_device})")
    trace = trace or RunTrace()

    records: List[FingerprintRecord] = []
    for d in range(n_devices):
        params = make_device(seeds.derive_seed(seed, seeds.DEVICE, d), ranges)
        origins = sample_origins(params, per_device, seeds.generator(seed, seeds.ORIGINS, d))
        records.extend(
            device_records(params, origins, ray_cfg, weight, seeds.derive_seed(seed, seeds.NOISE, d), peak_cfg)
        )
        trace.add_step(f"Device {d}", len(origins))

    if path is not None:
        save_records(records, path)
    return records
