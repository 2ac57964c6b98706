"""Reproducible experiments shared by the command line and the acceptance suite."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kriging, mds, refine
from .bench import Objective
from .dataset import Dataset
from .regularizer import TuneConfig, tune_kriging, tune_spline
from .space import normalized_distances, scale, sobol, uniform_random

OFF_SAMPLE_TOL = 1e-3


def off_sample_mad(values: np.ndarray, grid: np.ndarray, dataset: Dataset) -> float:
    """Mean ``|f - mean(F)|`` over grid nodes farther than ``OFF_SAMPLE_TOL`` from every sample."""
    near = normalized_distances(grid, dataset.points, dataset.space).min(axis=1)
    off = near > OFF_SAMPLE_TOL
    return float(np.mean(np.abs(values[off] - dataset.values.mean())))


def grid_2d(objective: Objective, resolution: int) -> np.ndarray:
    lo, hi = objective.space.lower, objective.space.upper
    g1 = np.linspace(lo[0], hi[0], resolution)
    g2 = np.linspace(lo[1], hi[1], resolution)
    X1, X2 = np.meshgrid(g1, g2, indexing="ij")
    return np.column_stack([X1.ravel(), X2.ravel()])


@dataclass(frozen=True, eq=False)
class SurfaceStudy:
    dataset: Dataset
    grid: np.ndarray
    columns: dict[str, np.ndarray]  # surface name -> values on grid
    kappa: dict[str, float]
    mad: dict[str, float]
    a0: float
    b0: float


def surface_study(
    objective: Objective,
    n_samples: int = 16,
    resolution: int = 101,
    seed: int = 0,
    tune: TuneConfig | None = None,
) -> SurfaceStudy:
    """Both models on random samples, before and after condition-number tuning.

    Kriging is tuned in both directions (max and min κ); the spline only
    toward max κ. Every surface is evaluated on a regular grid.
    """
    if objective.d != 2:
        raise ValueError("surface study needs a two-dimensional objective")
    tune = tune or TuneConfig()
    X = scale(uniform_random(n_samples, 2, seed), objective.space)
    F = np.array([objective(x) for x in X])
    data = Dataset(X, F, objective.space)
    a0 = kriging.fit_width(data)
    b0 = mds.default_slope(data)
    k_max = tune_kriging(data, a0, tune)
    k_min = tune_kriging(data, a0, tune, minimize=True)
    s_max = tune_spline(data, b0, tune)
    models = {
        "kriging_initial": kriging.fit(data, a0),
        "kriging_tuned": kriging.fit(data, k_max.widths),
        "kriging_min_kappa": kriging.fit(data, k_min.widths),
        "mds_initial": mds.fit(data, b0),
        "mds_tuned": mds.fit(data, s_max.widths),
    }
    grid = grid_2d(objective, resolution)
    columns = {"true": np.asarray(objective.func(grid), dtype=float)}
    columns.update({name: m.predict_many(grid) for name, m in models.items()})
    kappa = {name: m.condition_number(tune.kappa_cap) for name, m in models.items()}
    mad = {name: off_sample_mad(v, grid, data) for name, v in columns.items()}
    return SurfaceStudy(data, grid, columns, kappa, mad, a0, b0)


@dataclass(frozen=True, eq=False)
class Snapshot:
    n_evals: int
    report: refine.DisagreementReport


def mltrace_study(
    objective: Objective,
    n_doe: int = 32,
    insertions: int = 20,
    scan_size: int | None = None,
    seed: int = 0,
    settings: refine.ModelSettings | None = None,
    min_sep: float = refine.DEFAULT_MIN_SEP,
) -> tuple[Dataset, list[float], list[Snapshot]]:
    """Disagreement-driven refinement from a Sobol DOE, without constriction."""
    X = scale(sobol(n_doe, objective.d, seed * n_doe), objective.space)
    F = np.array([objective(x) for x in X])
    data = Dataset(X, F, objective.space)
    snaps: list[Snapshot] = []
    final, trace = refine.run_ml_trace(
        objective, data, insertions, scan_size, seed, settings, min_sep,
        on_snapshot=lambda k, ds, rep: snaps.append(Snapshot(ds.n, rep)),
    )
    return final, trace, snaps
