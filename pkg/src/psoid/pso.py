"""Bounded particle swarm minimizer.

Each particle owns a PCG64 stream spawned from the master seed, so results do
not depend on how objective evaluations are scheduled across workers.
"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class PsoConfig:
    swarm_size: int = 20
    iterations: int = 100
    c1: float = 1.3
    c2: float = 1.3
    w: float = 0.6
    seed: int = 0
    vmax_fraction: float = 0.5
    # inertia weight reached at the last iteration; None keeps w constant
    w_end: Optional[float] = None

    def __post_init__(self):
        if self.swarm_size < 1 or self.iterations < 1:
            raise ValueError("swarm_size and iterations must be >= 1")
        if self.c1 < 0 or self.c2 < 0 or self.w < 0:
            raise ValueError("c1, c2 and w must be non-negative")
        if not 0 < self.vmax_fraction <= 1:
            raise ValueError("vmax_fraction must lie in (0, 1]")
        if self.w_end is not None and self.w_end < 0:
            raise ValueError("w_end must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def inertia(self, it: int) -> float:
        if self.w_end is None or self.iterations == 1:
            return self.w
        return self.w + (self.w_end - self.w) * it / (self.iterations - 1)


@dataclass(frozen=True)
class SearchBox:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).ravel()
        hi = np.asarray(self.upper, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise ValueError("lower and upper bounds differ in length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box bounds must be finite")
        if np.any(lo >= hi):
            bad = np.flatnonzero(lo >= hi).tolist()
            raise ValueError(f"lower bound must be below upper bound (dimensions {bad})")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


@dataclass
class PsoResult:
    best_position: np.ndarray
    best_value: float
    history: np.ndarray = field(repr=False)
    evaluations: int = 0

    def write_history_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "best_value"])
            for i, v in enumerate(self.history, start=1):
                w.writerow([i, repr(float(v))])


def _sanitize(values) -> np.ndarray:
    values = np.asarray(values, dtype=float).ravel()
    return np.where(np.isnan(values), np.inf, values)


def minimize(
    objective: Callable,
    box: SearchBox,
    config: PsoConfig = PsoConfig(),
    *,
    workers: int = 1,
    vectorized: bool = False,
    initial=None,
    callback: Optional[Callable] = None,
) -> PsoResult:
    """Minimize ``objective`` over ``box``.

    ``objective`` maps a position vector to a scalar; with ``vectorized=True``
    it instead maps a ``(swarm, dim)`` array to one value per row. NaN values
    count as +inf. ``initial`` optionally fixes the starting positions.
    ``callback(iteration, positions, velocities, values)`` runs after every
    swarm evaluation (iteration 0 is the initial swarm).
    """
    dim = box.dim
    arity = getattr(objective, "dim", None)
    if arity is not None and arity != dim:
        raise ValueError(f"objective expects {arity} variables but the box has {dim}")
    k = config.swarm_size
    lo, hi = box.lower, box.upper
    vmax = config.vmax_fraction * box.width

    children = np.random.SeedSequence(config.seed).spawn(k)
    rngs = [np.random.Generator(np.random.PCG64(c)) for c in children]

    if initial is None:
        X = np.stack([lo + rng.random(dim) * (hi - lo) for rng in rngs])
    else:
        X = np.array(initial, dtype=float, copy=True).reshape(k, dim)
        X = np.clip(X, lo, hi)
    V = np.zeros_like(X)

    pool = ThreadPoolExecutor(max_workers=workers) if (workers > 1 and not vectorized) else None

    def evaluate(P):
        if vectorized:
            out = _sanitize(objective(P))
            if out.size != P.shape[0]:
                raise ValueError("vectorized objective returned the wrong number of values")
            return out
        if pool is not None:
            return _sanitize(list(pool.map(objective, list(P))))
        return _sanitize([objective(p) for p in P])

    try:
        fx = evaluate(X)
        n_eval = k
        pbest = X.copy()
        pbest_f = fx.copy()
        g = int(np.argmin(pbest_f))
        gbest = pbest[g].copy()
        gbest_f = float(pbest_f[g])
        if callback is not None:
            callback(0, X.copy(), V.copy(), fx.copy())

        history = np.empty(config.iterations)
        for it in range(config.iterations):
            w = config.inertia(it)
            r1 = np.empty_like(X)
            r2 = np.empty_like(X)
            for i, rng in enumerate(rngs):
                r1[i] = rng.random(dim)
                r2[i] = rng.random(dim)
            V = w * V + config.c1 * r1 * (pbest - X) + config.c2 * r2 * (gbest - X)
            np.clip(V, -vmax, vmax, out=V)
            X = X + V
            out_of_box = (X < lo) | (X > hi)
            X = np.clip(X, lo, hi)
            V[out_of_box] = 0.0

            fx = evaluate(X)
            n_eval += k
            improved = fx < pbest_f
            pbest[improved] = X[improved]
            pbest_f[improved] = fx[improved]
            g = int(np.argmin(pbest_f))
            if pbest_f[g] < gbest_f:
                gbest = pbest[g].copy()
                gbest_f = float(pbest_f[g])
            history[it] = gbest_f
            if callback is not None:
                callback(it + 1, X.copy(), V.copy(), fx.copy())
    finally:
        if pool is not None:
            pool.shutdown()

    return PsoResult(best_position=gbest, best_value=gbest_f, history=history, evaluations=n_eval)
