"""Nelder-Mead minimization with a state-dependent initial simplex."""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.spatial.distance import pdist

from ..exceptions import ContractError
from ..schema import DeviceState, SimplexConfig

# collapsed steps shorter than this are mirrored into the domain
_MIN_STEP = 1e-9


class Termination(str, Enum):
    X_TOL = "x_tol"
    F_TOL = "f_tol"
    MAX_ITER = "max_iter"


@dataclass(frozen=True)
class InitialSimplex:
    vertices: np.ndarray
    warnings: List[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True)
class NelderMeadResult:
    x_best: np.ndarray
    f_best: float
    iterations: int
    reason: Termination
    # best value after every iteration, starting with the initial simplex
    best_history: List[float] = field(default_factory=list)


def step_signs(s0: DeviceState) -> tuple[float, float]:
    """Step toward the dot that is missing: left dot only steps V_P1 down, right dot only steps V_P2 down."""
    if s0 == DeviceState.SD_L:
        return (-1.0, 1.0)
    if s0 == DeviceState.SD_R:
        return (1.0, -1.0)
    return (1.0, 1.0)


def initial_simplex(
    x0: Sequence[float],
    s0: DeviceState,
    cfg: SimplexConfig,
    lower: Optional[Sequence[float]] = None,
    upper: Optional[Sequence[float]] = None,
) -> InitialSimplex:
    """x0 plus one step per axis; plunger signs follow ``step_signs``, the barrier steps up.

    Vertices leaving [lower, upper] are clipped with a warning; a step that
    clipping collapses is mirrored to the other side of x0.
    """
    x0 = np.asarray(x0, dtype=float)
    n = len(x0)
    if n not in (2, 3):
        raise ContractError(f"Tuning runs in 2 or 3 dimensions (got {n})")
    lo = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    hi = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
    if np.any(x0 < lo) or np.any(x0 > hi):
        raise ContractError(f"Start point {x0.tolist()} lies outside the tuning domain")

    signs = step_signs(s0)
    steps = [signs[0] * cfg.plunger_step_mv, signs[1] * cfg.plunger_step_mv]
    if n == 3:
        steps.append(cfg.barrier_step_mv)

    names = ("V_P1", "V_P2", "V_B")
    vertices = [x0.copy()]
    warnings: List[str] = []
    for i, step in enumerate(steps):
        v = x0.copy()
        v[i] += step
        clipped = float(np.clip(v[i], lo[i], hi[i]))
        if clipped != v[i]:
            action = "clipped to the domain"
            if abs(clipped - x0[i]) < _MIN_STEP:
                clipped = float(np.clip(x0[i] - step, lo[i], hi[i]))
                action = "mirrored at the domain boundary"
            warnings.append(f"{names[i]} step {action} ({x0[i] + step:.2f} -> {clipped:.2f})")
            v[i] = clipped
        vertices.append(v)
    return InitialSimplex(vertices=np.array(vertices), warnings=warnings)


def _spread(fsim: np.ndarray) -> float:
    if np.all(np.isinf(fsim)):
        return 0.0
    return float(fsim[-1] - fsim[0])


def nelder_mead(
    f: Callable[[np.ndarray], float],
    simplex: np.ndarray | InitialSimplex,
    cfg: SimplexConfig,
    lower: Optional[Sequence[float]] = None,
    upper: Optional[Sequence[float]] = None,
) -> NelderMeadResult:
    """Minimize ``f`` from an (n + 1, n) simplex.

    Stops when the simplex diameter drops below x_tol, when the spread of
    vertex values drops below f_tol, or after max_iter iterations, whichever
    comes first. Proposed points are clipped into [lower, upper] when given.
    """
    sim = np.array(simplex.vertices if isinstance(simplex, InitialSimplex) else simplex, dtype=float)
    if sim.ndim != 2 or sim.shape[0] != sim.shape[1] + 1:
        raise ContractError(f"Simplex must have shape (n + 1, n) (got {sim.shape})")
    n = sim.shape[1]
    lo = None if lower is None else np.asarray(lower, dtype=float)
    hi = None if upper is None else np.asarray(upper, dtype=float)

    def evaluate(x: np.ndarray) -> tuple[np.ndarray, float]:
        if lo is not None or hi is not None:
            x = np.clip(x, lo if lo is not None else -np.inf, hi if hi is not None else np.inf)
        value = float(f(x))
        return x, (value if not math.isnan(value) else math.inf)

    rho, chi, psi, sigma = cfg.reflection, cfg.expansion, cfg.contraction, cfg.shrink
    fsim = np.empty(n + 1)
    for k in range(n + 1):
        sim[k], fsim[k] = evaluate(sim[k])

    order = np.argsort(fsim, kind="stable")
    sim, fsim = sim[order], fsim[order]
    history = [float(fsim[0])]

    iterations = 0
    reason = Termination.MAX_ITER
    while True:
        if float(np.max(pdist(sim))) < cfg.x_tol_mv:
            reason = Termination.X_TOL
            break
        if _spread(fsim) < cfg.f_tol:
            reason = Termination.F_TOL
            break
        if iterations >= cfg.max_iter:
            break
        iterations += 1

        xbar = sim[:-1].mean(axis=0)
        xr, fxr = evaluate((1 + rho) * xbar - rho * sim[-1])
        shrink = False
        if fxr < fsim[0]:
            xe, fxe = evaluate((1 + rho * chi) * xbar - rho * chi * sim[-1])
            sim[-1], fsim[-1] = (xe, fxe) if fxe < fxr else (xr, fxr)
        elif fxr < fsim[-2]:
            sim[-1], fsim[-1] = xr, fxr
        elif fxr < fsim[-1]:
            xc, fxc = evaluate((1 + psi * rho) * xbar - psi * rho * sim[-1])
            if fxc <= fxr:
                sim[-1], fsim[-1] = xc, fxc
            else:
                shrink = True
        else:
            xcc, fxcc = evaluate((1 - psi) * xbar + psi * sim[-1])
            if fxcc < fsim[-1]:
                sim[-1], fsim[-1] = xcc, fxcc
            else:
                shrink = True

        if shrink:
            for j in range(1, n + 1):
                sim[j], fsim[j] = evaluate(sim[0] + sigma * (sim[j] - sim[0]))

        order = np.argsort(fsim, kind="stable")
        sim, fsim = sim[order], fsim[order]
        history.append(float(fsim[0]))

    return NelderMeadResult(
        x_best=sim[0].copy(),
        f_best=float(fsim[0]),
        iterations=iterations,
        reason=reason,
        best_history=history,
    )
