"""Particle swarm optimisation: a continuous maximiser and a top-K binary variant.

The velocity update is the classic one,

    v' = w v + c1 r1 (p_best - x) + c2 r2 (g_best - x)
    x' = x + v'
    w  = w0 - iter / iter_max

with one scalar ``r1`` and one scalar ``r2`` drawn per particle per
iteration. The inertia is used literally and turns slightly negative at the
last iterations for the default ``w0 = 0.96``. The helpers do plain
arithmetic on whatever array dtype they receive, so ``fractions.Fraction``
inputs give exact results.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class SwarmConfig:
    m: int = 10
    iter_max: int = 30
    w0: float = 0.96
    c1: float = 0.7
    c2: float = 0.7
    seed: int = 0
    bounds: tuple[float, float] | None = None
    # None selects the variant default: no clamp for continuous runs, 1.0 for top-K runs
    v_clamp: float | None = None
    floor_inertia: bool = False
    # x' = x + v (old velocity) instead of x + v'
    literal_position_update: bool = False

    def __post_init__(self) -> None:
        if self.m < 1 or self.iter_max < 1:
            raise ValueError("m and iter_max must be at least 1")
        for name in ("w0", "c1", "c2"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.bounds is not None and not self.bounds[0] < self.bounds[1]:
            raise ValueError(f"invalid bounds {self.bounds}")
        if self.v_clamp is not None and not self.v_clamp > 0:
            raise ValueError("v_clamp must be positive")


@dataclass
class Particle:
    x: np.ndarray
    v: np.ndarray
    p_best: np.ndarray
    p_best_value: float = -math.inf

    def __post_init__(self) -> None:
        if not (np.shape(self.x) == np.shape(self.v) == np.shape(self.p_best)):
            raise ValueError("particle vectors must share one dimension")


@dataclass
class SwarmResult:
    best_position: np.ndarray
    best_value: float
    trace: list[float]
    evaluations: int
    best_set: tuple[int, ...] = ()
    history: list[list[float]] = field(default_factory=list, repr=False)


def inertia(iteration: int, cfg: SwarmConfig):
    """``w0 - iteration / iter_max`` for ``1 <= iteration <= iter_max``."""
    if not 1 <= iteration <= cfg.iter_max:
        raise ValueError(f"iteration {iteration} outside 1..{cfg.iter_max}")
    w = cfg.w0 - Fraction(iteration, cfg.iter_max)
    if cfg.floor_inertia and w < 0:
        w = 0 * w
    return w


def _clamp(a: np.ndarray, lo, hi) -> np.ndarray:
    return np.minimum(np.maximum(a, lo), hi)


def step_velocity(p: Particle, g_best, w, r1, r2, cfg: SwarmConfig, v_clamp: float | None = None) -> np.ndarray:
    x, v, pb, gb = np.asarray(p.x), np.asarray(p.v), np.asarray(p.p_best), np.asarray(g_best)
    if gb.shape != x.shape:
        raise ValueError(f"g_best has shape {gb.shape}, particle has {x.shape}")
    out = w * v + cfg.c1 * r1 * (pb - x) + cfg.c2 * r2 * (gb - x)
    clamp = cfg.v_clamp if v_clamp is None else v_clamp
    if clamp is not None and math.isfinite(clamp):
        out = _clamp(out, -clamp, clamp)
    return out


def step_position(p: Particle, v_new, cfg: SwarmConfig) -> np.ndarray:
    x, v_new = np.asarray(p.x), np.asarray(v_new)
    if v_new.shape != x.shape:
        raise ValueError(f"velocity has shape {v_new.shape}, particle has {x.shape}")
    out = x + (np.asarray(p.v) if cfg.literal_position_update else v_new)
    if cfg.bounds is not None:
        out = _clamp(out, cfg.bounds[0], cfg.bounds[1])
    return out


def run_continuous(objective: Callable[[np.ndarray], float], dim: int, cfg: SwarmConfig) -> SwarmResult:
    """Maximise ``objective`` over ``dim`` real coordinates."""
    if dim < 1:
        raise ValueError("dim must be at least 1")
    rng = np.random.default_rng(cfg.seed)
    lo, hi = cfg.bounds if cfg.bounds is not None else (-1.0, 1.0)
    swarm = []
    for _ in range(cfg.m):
        x = rng.uniform(lo, hi, dim)
        swarm.append(Particle(x, np.zeros(dim), x.copy()))
    g_best, g_val = swarm[0].x.copy(), -math.inf
    trace: list[float] = []
    history: list[list[float]] = []
    evaluations = 0
    for it in range(1, cfg.iter_max + 1):
        values = []
        for i, p in enumerate(swarm):
            val = float(objective(p.x.copy()))
            evaluations += 1
            if not math.isfinite(val):
                raise ValueError(f"objective returned {val} for particle {i} at iteration {it}")
            values.append(val)
        for p, val in zip(swarm, values):
            if val > p.p_best_value:
                p.p_best, p.p_best_value = p.x.copy(), val
            if val > g_val:
                g_best, g_val = p.x.copy(), val
        trace.append(g_val)
        history.append(values)
        w = float(inertia(it, cfg))
        for p in swarm:
            r1, r2 = rng.random(2)
            v_new = step_velocity(p, g_best, w, r1, r2, cfg)
            p.x, p.v = step_position(p, v_new, cfg), v_new
    return SwarmResult(g_best, g_val, trace, evaluations, history=history)


def project_topk(x: np.ndarray, k: int) -> tuple[int, ...]:
    """Indices of the ``k`` largest coordinates (ties to the lower index), sorted."""
    x = np.asarray(x, dtype=float)
    order = np.lexsort((np.arange(x.size), -x))
    return tuple(sorted(int(i) for i in order[:k]))


def _k_hot(m: int, idx: Sequence[int]) -> np.ndarray:
    x = np.zeros(m)
    x[list(idx)] = 1.0
    return x


def run_topk_binary(objective: Callable[[tuple[int, ...]], float], M: int, K: int, cfg: SwarmConfig) -> SwarmResult:
    """Maximise ``objective`` over K-subsets of ``range(M)``.

    Positions are real M-vectors that are projected back to K-hot vectors
    after every move. A particle whose set equals the current global best
    set is re-drawn at random with zero velocity and sits out that
    iteration's move.
    """
    if not 1 <= K <= M:
        raise ValueError(f"K={K} outside 1..{M}")
    rng = np.random.default_rng(cfg.seed)
    v_clamp = 1.0 if cfg.v_clamp is None else cfg.v_clamp

    def fresh() -> np.ndarray:
        return _k_hot(M, rng.choice(M, K, replace=False))

    swarm = []
    for _ in range(cfg.m):
        x = fresh()
        swarm.append(Particle(x, np.zeros(M), x.copy()))
    g_best, g_set, g_val = swarm[0].x.copy(), project_topk(swarm[0].x, K), -math.inf
    trace: list[float] = []
    history: list[list[float]] = []
    evaluations = 0
    for it in range(1, cfg.iter_max + 1):
        sets = [project_topk(p.x, K) for p in swarm]
        values = []
        for i, s in enumerate(sets):
            val = float(objective(s))
            evaluations += 1
            if not math.isfinite(val):
                raise ValueError(f"objective returned {val} for particle {i} at iteration {it}")
            values.append(val)
        for p, s, val in zip(swarm, sets, values):
            if val > p.p_best_value:
                p.p_best, p.p_best_value = _k_hot(M, s), val
            if val > g_val:
                g_best, g_set, g_val = _k_hot(M, s), s, val
        reset = [s == g_set for s in sets]
        for p, skip in zip(swarm, reset):
            if skip:
                p.x, p.v = fresh(), np.zeros(M)
        trace.append(g_val)
        history.append(values)
        w = float(inertia(it, cfg))
        for p, skip in zip(swarm, reset):
            if skip:
                continue
            r1, r2 = rng.random(2)
            v_new = step_velocity(p, g_best, w, r1, r2, cfg, v_clamp=v_clamp)
            x_new = step_position(p, v_new, cfg)
            p.x, p.v = _k_hot(M, project_topk(x_new, K)), v_new
    return SwarmResult(g_best, g_val, trace, evaluations, best_set=g_set, history=history)


def trace_to_csv(trace: Sequence[float]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["iteration", "g_best"])
    for i, val in enumerate(trace, 1):
        writer.writerow([i, repr(float(val))])
    return buf.getvalue()
