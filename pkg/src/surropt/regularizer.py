"""Per-point kernel width tuning driven by the system-matrix condition number.

Each width may move within ``[0.5, 1.5]`` times its starting value. Widths
are visited in ascending point index, each by a golden-section line search,
for a fixed number of sweeps (see :func:`numerics.coordinate_compass_maximize`).
Probes whose matrix reaches the condition-number cap or fails to factorise
are rejected, so the returned widths always give a usable model.

Usable is not the same as well-behaved. For the Gaussian Kriging kernel the
maximum-condition widths sit close to a rank-deficient ``Gamma``, and the
interpolant then swings far outside the data range between samples (on 16
Sasena samples, off-sample deviations grow from ~5 to ~1e8). The tuning is
therefore opt-in; see :class:`surropt.refine.ModelSettings`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kriging, mds, numerics
from .dataset import Dataset

WIDTH_SPAN = 0.5


class TuningError(ValueError):
    """The starting matrix is already singular."""


@dataclass(frozen=True)
class TuneConfig:
    sweeps: int = 3
    line_tol: float = 1e-3
    kappa_cap: float = numerics.KAPPA_CAP

    def __post_init__(self):
        if self.sweeps < 0:
            raise ValueError("sweeps must be >= 0")
        if not self.kappa_cap > 1:
            raise ValueError("kappa_cap must exceed 1")
        if not self.line_tol > 0:
            raise ValueError("line_tol must be positive")


@dataclass(frozen=True)
class TuneResult:
    widths: np.ndarray
    kappa_initial: float
    kappa_final: float
    nfev: int


def _tune(
    build: Callable[[np.ndarray], np.ndarray],
    w0: np.ndarray,
    config: TuneConfig,
    minimize: bool,
) -> TuneResult:
    cap = config.kappa_cap

    def kappa(w: np.ndarray) -> float:
        M = build(w)
        k = numerics.condition_number(M, cap=cap)
        if numerics.is_capped(k, cap):
            return math.inf
        try:
            numerics.lu_factor(M)
        except numerics.SingularMatrixError:
            return math.inf
        return k

    M0 = build(w0)
    try:
        numerics.lu_factor(M0)
    except numerics.SingularMatrixError as exc:
        raise TuningError(f"initial matrix is singular: {exc}") from exc
    k0 = numerics.condition_number(M0, cap=cap)

    if config.sweeps == 0 or (numerics.is_capped(k0, cap) and not minimize):
        return TuneResult(w0.copy(), k0, k0, 1)

    def score(w: np.ndarray) -> float:
        k = kappa(w)
        if not math.isfinite(k):
            return -math.inf
        return -k if minimize else k

    res = numerics.coordinate_compass_maximize(
        score,
        w0,
        (1.0 - WIDTH_SPAN) * w0,
        (1.0 + WIDTH_SPAN) * w0,
        sweeps=config.sweeps,
        rel_tol=config.line_tol,
        line_tol=config.line_tol,
        accept_tol=config.line_tol,
    )
    if not math.isfinite(res.fx):
        # capped start under minimisation with no valid probe
        return TuneResult(w0.copy(), k0, k0, res.nfev)
    return TuneResult(res.x, k0, abs(res.fx), res.nfev)


def _widths(w0, n: int) -> np.ndarray:
    w0 = np.array(np.broadcast_to(np.asarray(w0, dtype=float), (n,)))
    if np.any(~(w0 > 0)):
        raise ValueError("initial widths must be positive")
    return w0


def tune_kriging(
    dataset: Dataset, a0, config: TuneConfig | None = None, minimize: bool = False
) -> TuneResult:
    """Tune the semi-variogram widths to maximise ``cond(Gamma)``.

    ``minimize=True`` runs the opposite search. It narrows the Gaussians, so
    the surface relaxes toward the data mean between samples; it exists for
    comparison only.
    """
    config = config or TuneConfig()
    a0 = _widths(a0, dataset.n)
    D = dataset.distances
    return _tune(lambda a: kriging.gamma_from_distances(D, a), a0, config, minimize)


def tune_spline(
    dataset: Dataset, b0, config: TuneConfig | None = None, minimize: bool = False
) -> TuneResult:
    """Tune the spline support slopes to maximise ``cond(A)``.

    Wider supports (smaller slopes) push ``A`` toward the all-ones matrix, so
    the search usually drifts to the lower bound ``0.5 * b0``.
    """
    config = config or TuneConfig()
    b0 = _widths(b0, dataset.n)
    D = dataset.distances
    return _tune(lambda b: mds.system_matrix(D, b), b0, config, minimize)
