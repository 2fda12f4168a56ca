"""
Modulation-variance optimizer.

Coarse logarithmic grid over [v_min, v_max], then golden-section
refinement on the grid cells around the best grid point. The objective is
rate_raw, so a point with every rate negative still reports the
most-nearly-positive V_A.
"""
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from .constants import (
    DEFAULT_GRID_SIZE, DEFAULT_REFINE_ITERATIONS, DEFAULT_REFINE_TOL, DEFAULT_V_MAX,
    DEFAULT_V_MIN, MIN_GRID_SIZE, MIN_REFINE_ITERATIONS,
)
from .errors import ConfigError
from .keyrate import KeyRateResult, SystemParams, key_rate
from .noise import NoiseModelKind

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2  # 1 / phi^2


@dataclass(frozen=True)
class VaBracket:
    """Search range and effort for the V_A optimizer."""
    v_min: float = DEFAULT_V_MIN
    v_max: float = DEFAULT_V_MAX
    grid_size: int = DEFAULT_GRID_SIZE
    refine_iterations: int = DEFAULT_REFINE_ITERATIONS
    refine_tol: float = DEFAULT_REFINE_TOL

    def __post_init__(self):
        if not (0.0 < self.v_min < self.v_max) or math.isinf(self.v_max):
            raise ConfigError(f"invalid V_A bracket [{self.v_min}, {self.v_max}]")
        if self.grid_size < MIN_GRID_SIZE:
            raise ConfigError(f"grid size must be >= {MIN_GRID_SIZE}, got {self.grid_size}")
        if self.refine_iterations < MIN_REFINE_ITERATIONS:
            raise ConfigError(
                f"refinement iterations must be >= {MIN_REFINE_ITERATIONS}, "
                f"got {self.refine_iterations}")
        if not self.refine_tol > 0:
            raise ConfigError(f"refinement tolerance must be > 0, got {self.refine_tol}")

    def grid(self) -> np.ndarray:
        return np.geomspace(self.v_min, self.v_max, self.grid_size)

    def describe(self) -> str:
        return (f"log-grid[{self.v_min!r},{self.v_max!r}] n={self.grid_size} "
                f"+ golden-section iters<={self.refine_iterations} tol={self.refine_tol!r}")


@dataclass(frozen=True)
class Optimum:
    v_a: float
    result: KeyRateResult
    evaluations: int


class _Tracker:
    """Keeps the best (rate_raw, v_a) seen; ties go to the smaller V_A."""

    def __init__(self, evaluate: Callable[[float], KeyRateResult]):
        self.evaluate = evaluate
        self.best_v = math.nan
        self.best: Optional[KeyRateResult] = None
        self.count = 0

    def __call__(self, v_a: float) -> float:
        result = self.evaluate(v_a)
        self.count += 1
        if (self.best is None or result.rate_raw > self.best.rate_raw
                or (result.rate_raw == self.best.rate_raw and v_a < self.best_v)):
            self.best = result
            self.best_v = v_a
        return result.rate_raw


def golden_section_max(f: Callable[[float], float], a: float, b: float,
                       tol: float, max_iter: int) -> Tuple[float, float]:
    """
    Golden-section search for a maximum of f on [a, b].

    Returns the final bracket; stops when it is narrower than ``tol`` or
    after ``max_iter`` shrink steps.
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        return a, b

    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = f(c)
    yd = f(d)

    for _ in range(max_iter):
        if h <= tol:
            break
        if yc >= yd:
            b = d
            d = c
            yd = yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = f(c)
        else:
            a = c
            c = d
            yc = yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)

    if yc >= yd:
        return a, d
    return c, b


def optimize_va(params: SystemParams, kind: NoiseModelKind,
                bracket: VaBracket = VaBracket()) -> Optimum:
    """
    Maximize rate_raw over V_A. ``params.v_a`` is ignored; xi_A is
    re-evaluated at every candidate.
    """
    track = _Tracker(lambda v_a: key_rate(params.with_va(float(v_a)), kind))

    grid = bracket.grid()
    rates: List[float] = [track(float(v)) for v in grid]
    i = int(np.argmax(rates))
    lo = float(grid[max(i - 1, 0)])
    hi = float(grid[min(i + 1, len(grid) - 1)])

    golden_section_max(track, lo, hi, bracket.refine_tol, bracket.refine_iterations)
    return Optimum(v_a=track.best_v, result=track.best, evaluations=track.count)


def brute_force_va(params: SystemParams, kind: NoiseModelKind,
                   v_min: float = DEFAULT_V_MIN, v_max: float = DEFAULT_V_MAX,
                   points: int = 10_000) -> Optimum:
    """Dense logarithmic scan; a reference for the optimizer."""
    track = _Tracker(lambda v_a: key_rate(params.with_va(float(v_a)), kind))
    for v in np.geomspace(v_min, v_max, points):
        track(float(v))
    return Optimum(v_a=track.best_v, result=track.best, evaluations=track.count)
