"""Analytic test objectives, evaluation accounting and a brute-force grid oracle."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .space import DesignSpace

SASENA_SPACE = DesignSpace([0.0, 0.0], [5.0, 5.0])
QUADRATIC_BOUND = 10.0
GRID_BUDGET = 10_000_000


class OutOfBoundsError(ValueError):
    pass


def _check_bounds(x: np.ndarray, lo: float, hi: float, name: str) -> None:
    if np.any(x < lo) or np.any(x > hi):
        raise OutOfBoundsError(f"{name}: point outside [{lo}, {hi}]^d")


def sasena(x):
    """Sasena function on ``[0, 5]^2`` (sine arguments in radians).

    Accepts one point or a stack of points along the last axis.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise ValueError("sasena is two-dimensional")
    _check_bounds(x, 0.0, 5.0, "sasena")
    x1, x2 = x[..., 0], x[..., 1]
    f = (
        2.0
        + 0.01 * (x2 - x1**2) ** 2
        + (1.0 - x1) ** 2
        + 2.0 * (2.0 - x2) ** 2
        + 7.0 * np.sin(0.5 * x1) * np.sin(0.7 * x1 * x2)
    )
    return float(f) if np.ndim(f) == 0 else f


def quadratic(x):
    """``sum_i (x_i - 0.5)^2`` on ``[-10, 10]^d``."""
    x = np.asarray(x, dtype=float)
    _check_bounds(x, -QUADRATIC_BOUND, QUADRATIC_BOUND, "quadratic")
    f = np.sum((x - 0.5) ** 2, axis=-1)
    return float(f) if np.ndim(f) == 0 else f


@dataclass(eq=False)
class Objective:
    """A box-bounded objective with a thread-safe evaluation counter.

    ``func`` maps one point (or a stack of rows, if vectorised) to a real.
    ``pure`` declares that concurrent evaluation is allowed.
    """

    name: str
    space: DesignSpace
    func: Callable
    pure: bool = True
    eval_count: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def d(self) -> int:
        return self.space.d

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise ValueError(f"{self.name} expects a point of length {self.d}")
        with self._lock:
            self.eval_count += 1
        return float(self.func(x))

    def reset(self) -> None:
        with self._lock:
            self.eval_count = 0


def make_objective(name: str, d: int | None = None) -> Objective:
    if name == "sasena":
        if d not in (None, 2):
            raise ValueError("sasena is two-dimensional")
        return Objective("sasena", SASENA_SPACE, sasena)
    if name == "quadratic":
        d = 12 if d is None else d
        if d < 1:
            raise ValueError("dimension must be >= 1")
        space = DesignSpace.cube(d, -QUADRATIC_BOUND, QUADRATIC_BOUND)
        return Objective("quadratic", space, quadratic)
    raise ValueError(f"unknown objective {name!r}; expected 'sasena' or 'quadratic'")


def grid_nodes(space: DesignSpace, resolution) -> list[np.ndarray]:
    res = np.broadcast_to(np.asarray(resolution, dtype=int), (space.d,))
    if np.any(res < 2):
        raise ValueError("resolution must be >= 2 per axis")
    return [np.linspace(lo, hi, int(k)) for lo, hi, k in zip(space.lower, space.upper, res)]


def grid_oracle_min(
    objective: Objective, resolution, chunk: int = 65536
) -> tuple[np.ndarray, float]:
    """Exhaustive minimum over a regular grid that includes the bounds.

    Grids of more than 1e7 nodes are refused above three dimensions. Ties
    resolve to the first node in C order. The objective's counter is not
    touched; this is a reference oracle, not an optimiser.
    """
    axes = grid_nodes(objective.space, resolution)
    sizes = [a.size for a in axes]
    total = int(np.prod(sizes, dtype=object))
    if objective.d > 3 and total > GRID_BUDGET:
        raise ValueError(f"grid of {total} nodes exceeds the {GRID_BUDGET} budget")
    best_f, best_k = np.inf, 0
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        idx = np.unravel_index(flat, sizes)
        pts = np.column_stack([axes[j][idx[j]] for j in range(len(axes))])
        try:
            f = np.asarray(objective.func(pts), dtype=float)
        except (TypeError, ValueError):
            f = np.array([objective.func(p) for p in pts], dtype=float)
        f = np.where(np.isfinite(f), f, np.inf)
        k = int(np.argmin(f))
        if f[k] < best_f:
            best_f, best_k = float(f[k]), int(flat[k])
    idx = np.unravel_index(best_k, sizes)
    x = np.array([axes[j][idx[j]] for j in range(len(axes))])
    return x, best_f
