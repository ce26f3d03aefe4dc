"""Constant-interaction double-dot model.

The electrostatic energy of a configuration (N1, N2) is

    U = 1/2 E1 (N1 - n1)^2 + 1/2 E2 (N2 - n2)^2 + Em (N1 - n1)(N2 - n2)

with gate-induced charges (n1, n2) = lever @ (V_P1, V_P2, V_B) - offsets.
Above the barrier merging point the two dots act as one dot holding
N = N1 + N2 electrons with energy 1/2 E1 (N - n1 - n2)^2.

In the (V_P1, V_P2) plane the addition lines have negative slopes and the
inter-dot segments of the honeycomb have positive slopes (+1 for a
symmetric device).

All functions accept a single gate vector of shape (3,) or a batch of shape
(..., 3) and are pure.
"""

import math
from typing import Tuple, Union, overload

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from scipy.special import expit

from ..exceptions import ConfigurationError, ContractError
from ..schema import DeviceState, ParameterRanges

Lever = Tuple[Tuple[float, float, float], Tuple[float, float, float]]

DEFAULT_RESOLUTION_MV = 0.5

# Boltzmann weights roll off to zero between these multiples of Tb
_ROLLOFF_START = 3.5
_ROLLOFF_END = 5.0

# Label lookup for unmerged occupancies: index = 2 * (N1 >= 1) + (N2 >= 1)
_UNMERGED_LABELS = np.array([DeviceState.ND, DeviceState.SD_R, DeviceState.SD_L, DeviceState.DD], dtype=np.int64)


class DeviceParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    e1: float = Field(..., gt=0.0, description="Left-dot charging energy (mV)")
    e2: float = Field(..., gt=0.0, description="Right-dot charging energy (mV)")
    em: float = Field(..., ge=0.0, description="Inter-dot coupling energy (mV)")
    lever: Lever = Field(..., description="Rows map (V_P1, V_P2, V_B) in mV to induced charges n1, n2")
    offsets: Tuple[float, float]
    beta1: float = Field(..., gt=0.0, le=1.0)
    beta2: float = Field(..., gt=0.0)
    tb: float = Field(..., gt=0.0, description="Thermal broadening (mV)")
    merge_mid: float
    merge_width: float = Field(..., ge=0.0)
    noise_sigma: float = Field(..., ge=0.0)
    seed: int | None = None

    @model_validator(mode="after")
    def _check_invariants(self) -> "DeviceParams":
        if self.em >= math.sqrt(self.e1 * self.e2):
            raise ValueError("Em must be below sqrt(E1*E2) for a positive-definite energy")
        if self.beta2 >= self.beta1:
            raise ValueError("beta2 must be smaller than beta1")
        return self

    @property
    def lever_matrix(self) -> np.ndarray:
        return np.asarray(self.lever, dtype=float)

    @property
    def offset_vector(self) -> np.ndarray:
        return np.asarray(self.offsets, dtype=float)

    @property
    def energy_matrix(self) -> np.ndarray:
        return np.array([[self.e1, self.em], [self.em, self.e2]])


def _uniform(rng: np.random.Generator, bounds: Tuple[float, float]) -> float:
    lo, hi = bounds
    return float(rng.uniform(lo, hi)) if hi > lo else float(lo)


def make_device(seed: int, ranges: ParameterRanges | None = None) -> DeviceParams:
    """Draw a randomized device. Deterministic for a fixed seed and range table."""
    ranges = ranges or ParameterRanges()
    ranges.check()
    rng = np.random.default_rng(seed)

    e1 = _uniform(rng, ranges.e1_mv)
    e2 = _uniform(rng, ranges.e2_mv)
    em = _uniform(rng, ranges.em_frac) * math.sqrt(e1 * e2)
    a11 = _uniform(rng, ranges.lever_diag_per_mv)
    a22 = _uniform(rng, ranges.lever_diag_per_mv)
    a12 = _uniform(rng, ranges.lever_cross_frac) * a11
    a21 = _uniform(rng, ranges.lever_cross_frac) * a22
    a13 = _uniform(rng, ranges.lever_barrier_per_mv)
    a23 = _uniform(rng, ranges.lever_barrier_per_mv)
    lever: Lever = ((a11, a12, a13), (a21, a22, a23))

    # induced charge of 1/2 at the drawn pinch-off voltages (V_B = 0)
    p1 = _uniform(rng, ranges.pinch_off_mv)
    p2 = _uniform(rng, ranges.pinch_off_mv)
    offsets = (a11 * p1 + a12 * p2 - 0.5, a21 * p1 + a22 * p2 - 0.5)

    beta1 = _uniform(rng, ranges.beta1)
    beta2 = _uniform(rng, ranges.beta_ratio) * beta1
    tb = _uniform(rng, ranges.tb_mv)
    merge_mid = _uniform(rng, ranges.merge_mid_mv)
    merge_width = _uniform(rng, ranges.merge_width_mv)
    noise_frac = _uniform(rng, ranges.noise_frac)

    try:
        params = DeviceParams(
            e1=e1,
            e2=e2,
            em=em,
            lever=lever,
            offsets=offsets,
            beta1=beta1,
            beta2=beta2,
            tb=tb,
            merge_mid=merge_mid,
            merge_width=merge_width,
            noise_sigma=0.0,
            seed=seed,
        )
        return params.model_copy(update={"noise_sigma": noise_frac * ridge_height(params)})
    except ValidationError as e:
        raise ConfigurationError(f"Parameter ranges produced an invalid device: {e}") from e


def reference_device() -> DeviceParams:
    """Fixed device used by the tuning campaigns.

    Pinch-off near (100, 100) mV at V_B = 0, merging above V_B = 125 mV, so only
    the top slice of the -100..150 mV stack is merged and the slice below it
    still holds a double-dot region.
    """
    lever: Lever = ((0.046, 0.016, 0.002), (0.015, 0.044, 0.002))
    offsets = (0.046 * 100 + 0.016 * 100 - 0.5, 0.015 * 100 + 0.044 * 100 - 0.5)
    params = DeviceParams(
        e1=50.0,
        e2=46.0,
        em=16.8,
        lever=lever,
        offsets=offsets,
        beta1=1.0,
        beta2=0.45,
        tb=1.5,
        merge_mid=125.0,
        merge_width=10.0,
        noise_sigma=0.0,
        seed=None,
    )
    return params.model_copy(update={"noise_sigma": 0.02 * ridge_height(params)})


def ridge_height(params: DeviceParams) -> float:
    """Peak differential signal of an isolated dot-1 transition crossed along V_P1."""
    lever = params.lever_matrix
    slope = params.e1 * lever[0, 0] + params.em * lever[1, 0]
    return params.beta1 * slope / (4.0 * params.tb)


def induced_charges(params: DeviceParams, v: np.ndarray) -> np.ndarray:
    """Gate-induced charges (n1, n2) with shape (..., 2)."""
    return np.asarray(v, dtype=float) @ params.lever_matrix.T - params.offset_vector


def merge_strength(params: DeviceParams, vb: np.ndarray | float) -> np.ndarray:
    """Sigmoid merging coordinate in [0, 1]; the dots are merged above 1/2."""
    vb = np.asarray(vb, dtype=float)
    if params.merge_width == 0:
        return (vb > params.merge_mid).astype(float)
    return expit((vb - params.merge_mid) / params.merge_width)


def is_merged(params: DeviceParams, vb: np.ndarray | float) -> np.ndarray:
    return merge_strength(params, vb) > 0.5


def _energy(params: DeviceParams, n1: np.ndarray, n2: np.ndarray, N1: np.ndarray, N2: np.ndarray) -> np.ndarray:
    d1 = N1 - n1
    d2 = N2 - n2
    return 0.5 * params.e1 * d1**2 + 0.5 * params.e2 * d2**2 + params.em * d1 * d2


def _best_n2(params: DeviceParams, n1: np.ndarray, n2: np.ndarray, N1: np.ndarray) -> np.ndarray:
    # U is convex in N2 for fixed N1, so the integer optimum is the rounded continuous one
    return np.maximum(0.0, np.rint(n2 - params.em / params.e2 * (N1 - n1)))


def _search_radius(params: DeviceParams) -> int:
    eig = np.linalg.eigvalsh(params.energy_matrix)
    return int(math.ceil(math.sqrt(eig[-1] / eig[0]))) + 2


def _ground_unmerged(params: DeviceParams, n: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    n1 = n[..., 0]
    n2 = n[..., 1]

    # continuous minimizer over the non-negative quadrant: interior, both faces, corner
    zero = np.zeros_like(n1)
    candidates = [
        (n1, n2),
        (np.maximum(0.0, n1 + params.em / params.e1 * n2), zero),
        (zero, np.maximum(0.0, n2 + params.em / params.e2 * n1)),
        (zero, zero),
    ]
    energies = [_energy(params, n1, n2, c1, c2) for c1, c2 in candidates]
    energies[0] = np.where((n1 >= 0) & (n2 >= 0), energies[0], np.inf)
    pick = np.argmin(np.stack(energies), axis=0)
    center = np.choose(pick, [np.maximum(c1, 0.0) for c1, _ in candidates])

    radius = _search_radius(params)
    offsets = np.arange(-radius, radius + 1, dtype=float)
    N1 = np.maximum(0.0, np.rint(center)[..., None] + offsets)
    N2 = _best_n2(params, n1[..., None], n2[..., None], N1)
    u = _energy(params, n1[..., None], n2[..., None], N1, N2)
    idx = np.argmin(u, axis=-1)[..., None]
    return (
        np.take_along_axis(N1, idx, axis=-1)[..., 0].astype(np.int64),
        np.take_along_axis(N2, idx, axis=-1)[..., 0].astype(np.int64),
    )


def occupancy_grid(params: DeviceParams, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched ground-state occupancy: arrays (N1, N2, merged) with the batch shape of ``v``."""
    v = np.asarray(v, dtype=float)
    n = induced_charges(params, v)
    merged = is_merged(params, v[..., 2])

    N1, N2 = _ground_unmerged(params, n)
    N_single = np.maximum(0, np.rint(n[..., 0] + n[..., 1])).astype(np.int64)
    N1 = np.where(merged, N_single, N1)
    N2 = np.where(merged, 0, N2)
    return N1, N2, merged


def occupancy(params: DeviceParams, v: np.ndarray) -> Tuple[int, int, bool]:
    """Ground-state occupancy (N1, N2, merged) at one gate vector (V_P1, V_P2, V_B)."""
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ContractError(f"Gate vector must have 3 components (got shape {v.shape})")
    N1, N2, merged = occupancy_grid(params, v)
    return int(N1), int(N2), bool(merged)


def state_from_occupancy(N1: np.ndarray, N2: np.ndarray, merged: np.ndarray) -> np.ndarray:
    """Table-driven mapping from occupancy to DeviceState values."""
    N1 = np.asarray(N1)
    N2 = np.asarray(N2)
    merged = np.asarray(merged, dtype=bool)
    unmerged = _UNMERGED_LABELS[2 * (N1 >= 1) + (N2 >= 1)]
    merged_labels = np.where(N1 >= 1, int(DeviceState.SD_C), int(DeviceState.ND))
    return np.where(merged, merged_labels, unmerged)


def label_states(params: DeviceParams, v: np.ndarray) -> np.ndarray:
    return state_from_occupancy(*occupancy_grid(params, v))


def label_state(params: DeviceParams, v: np.ndarray) -> DeviceState:
    return DeviceState(int(state_from_occupancy(*occupancy(params, v))))


def _relative_weight(x: np.ndarray) -> np.ndarray:
    """Boltzmann factor e^-x for an excess of x Tb, rolled off to exactly 0 at 5 Tb.

    Over the roll-off the two-level occupation e^-x / (1 + e^-x) falls linearly,
    at a slope below the thermal one where it starts, so ridge flanks decay
    monotonically and no spurious maximum appears at the cut.
    """
    p_start = 1.0 / (1.0 + math.exp(_ROLLOFF_START))
    occupation = p_start * np.clip((_ROLLOFF_END - x) / (_ROLLOFF_END - _ROLLOFF_START), 0.0, 1.0)
    boltzmann = np.exp(-np.minimum(x, _ROLLOFF_END))
    return np.where(x <= _ROLLOFF_START, boltzmann, occupation / (1.0 - occupation))


def _thermal_weights(energies: np.ndarray, valid: np.ndarray, tb: float) -> np.ndarray:
    energies = np.where(valid, energies, np.inf)
    excess = energies - np.min(energies, axis=-1, keepdims=True)
    weights = np.where(valid, _relative_weight(np.where(valid, excess, np.inf) / tb), 0.0)
    return weights / np.sum(weights, axis=-1, keepdims=True)


def sensed_charge(params: DeviceParams, v: np.ndarray) -> np.ndarray:
    """Q = beta1 <N1> + beta2 <N2> with thermal averages at temperature Tb."""
    v = np.asarray(v, dtype=float)
    n = induced_charges(params, v)
    n1 = n[..., 0][..., None]
    n2 = n[..., 1][..., None]
    g1, g2, merged = occupancy_grid(params, v)

    steps = np.array([-1, 0, 1])
    d1, d2 = np.meshgrid(steps, steps, indexing="ij")
    N1 = g1[..., None] + d1.ravel()
    N2 = g2[..., None] + d2.ravel()
    valid = (N1 >= 0) & (N2 >= 0)
    w = _thermal_weights(_energy(params, n1, n2, N1, N2), valid, params.tb)
    q_double = params.beta1 * np.sum(w * N1, axis=-1) + params.beta2 * np.sum(w * N2, axis=-1)

    N = g1[..., None] + steps
    u_single = 0.5 * params.e1 * (N - n1 - n2) ** 2
    w_single = _thermal_weights(u_single, N >= 0, params.tb)
    q_single = params.beta1 * np.sum(w_single * N, axis=-1)

    return np.where(merged, q_single, q_double)


@overload
def sensor_signal(params: DeviceParams, v: np.ndarray, resolution: float = ...) -> np.ndarray: ...


@overload
def sensor_signal(params: DeviceParams, v: Tuple[float, float, float], resolution: float = ...) -> float: ...


def sensor_signal(
    params: DeviceParams,
    v: Union[np.ndarray, Tuple[float, float, float]],
    resolution: float = DEFAULT_RESOLUTION_MV,
) -> Union[np.ndarray, float]:
    """Noise-free differential sensor signal: central difference of Q along V_P1.

    The difference step is half the pixel resolution on each side. Returns a
    float for a single gate vector and an array for a batch.
    """
    v = np.asarray(v, dtype=float)
    delta = resolution / 2.0
    shift = np.array([delta, 0.0, 0.0])
    signal = (sensed_charge(params, v + shift) - sensed_charge(params, v - shift)) / (2.0 * delta)
    if v.ndim == 1:
        return float(signal)
    return signal


def pinch_off_point(params: DeviceParams, vb: float) -> Tuple[float, float]:
    """Plunger voltages where the first electron enters either dot from (0, 0)."""
    half = np.array([params.e1 / 2.0, params.e2 / 2.0])
    n_star = np.linalg.solve(params.energy_matrix, half)
    lever = params.lever_matrix
    rhs = n_star + params.offset_vector - lever[:, 2] * vb
    v1, v2 = np.linalg.solve(lever[:, :2], rhs)
    return float(v1), float(v2)
