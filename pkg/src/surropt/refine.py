"""Disagreement-driven refinement of the two meta-models.

Both models interpolate the same data, so they agree at every sample. Where
they disagree most, neither can be trusted; that is where a new true
evaluation is placed. Disagreement is reported as a percentage of the data
range ``max(F) - min(F)`` rather than of the local prediction, which would
blow up near zero-valued predictions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kriging, mds
from .dataset import Dataset
from .regularizer import TuneConfig, tune_kriging, tune_spline
from .space import DesignSpace, normalized_distances, scale, sobol

RANGE_FLOOR = 1e-12
DEFAULT_MIN_SEP = 1e-3


def default_scan_size(d: int) -> int:
    return 256 * d


@dataclass(frozen=True)
class ModelSettings:
    """How meta-models are (re)built after every change to the data.

    With ``refit_widths`` the base widths are re-estimated from the data on
    every refit; otherwise the base widths of the previous pair are reused.
    ``regularize`` adds the condition-number tuning on top. It is off by
    default: pushing the condition number up makes the Kriging surface
    overshoot wildly between samples (see :mod:`surropt.regularizer`).
    """

    regularize: bool = False
    refit_widths: bool = True
    tune: TuneConfig = field(default_factory=TuneConfig)


@dataclass(frozen=True, eq=False)
class ModelPair:
    kriging: kriging.KrigingModel
    spline: mds.SplineModel
    a0: float
    b0: float


def fit_models(
    dataset: Dataset, settings: ModelSettings | None = None, previous: ModelPair | None = None
) -> ModelPair:
    settings = settings or ModelSettings()
    dataset.check_distinct()
    if previous is not None and not settings.refit_widths:
        a0, b0 = previous.a0, previous.b0
    else:
        a0 = kriging.fit_width(dataset)
        b0 = mds.default_slope(dataset)
    a, b = a0, b0
    if settings.regularize and dataset.n > 1:
        a = tune_kriging(dataset, a0, settings.tune).widths
        b = tune_spline(dataset, b0, settings.tune).widths
    return ModelPair(kriging.fit(dataset, a), mds.fit(dataset, b), a0, b0)


def _value_range(kr: kriging.KrigingModel) -> float:
    v = kr.dataset.values
    return max(float(v.max() - v.min()), RANGE_FLOOR)


def disagreement(kr: kriging.KrigingModel, sp: mds.SplineModel, x) -> float | np.ndarray:
    """``100 |f_K(x) - f_S(x)| / (F_max - F_min)``; vectorised over rows of ``x``."""
    x = np.asarray(x, dtype=float)
    X = np.atleast_2d(x)
    pct = 100.0 * np.abs(kr.predict_many(X) - sp.predict_many(X)) / _value_range(kr)
    return float(pct[0]) if x.ndim == 1 else pct


@dataclass(frozen=True, eq=False)
class DisagreementReport:
    scan_points: np.ndarray
    f_kriging: np.ndarray
    f_spline: np.ndarray
    pct: np.ndarray
    order: np.ndarray  # scan indices, descending disagreement (stable)

    @property
    def max_disagreement(self) -> float:
        return float(self.pct[self.order[0]])

    @property
    def argmax(self) -> np.ndarray:
        return self.scan_points[self.order[0]]

    @property
    def ranked_points(self) -> np.ndarray:
        return self.scan_points[self.order]


def scan(
    kr: kriging.KrigingModel,
    sp: mds.SplineModel,
    space: DesignSpace,
    m: int,
    seed: int = 0,
) -> DisagreementReport:
    """Evaluate both models on an ``m``-point Sobol plan over ``space``."""
    if m < 1:
        raise ValueError("scan size must be >= 1")
    X = scale(sobol(m, space.d, seed), space)
    fk = kr.predict_many(X)
    fs = sp.predict_many(X)
    pct = 100.0 * np.abs(fk - fs) / _value_range(kr)
    order = np.argsort(-pct, kind="stable")
    return DisagreementReport(X, fk, fs, pct, order)


def select_separated(
    ranked: np.ndarray, existing: np.ndarray, k: int, min_sep: float, space: DesignSpace
) -> np.ndarray:
    """Greedy pick, in rank order, of up to ``k`` rows of ``ranked``.

    A candidate is taken when its normalised distance to every row of
    ``existing`` and to every earlier pick is at least ``min_sep``. Returns
    the chosen row indices into ``ranked``.
    """
    if k <= 0 or ranked.shape[0] == 0:
        return np.zeros(0, dtype=int)
    U = space.normalize(ranked)
    if existing.shape[0]:
        near = normalized_distances(ranked, existing, space).min(axis=1)
        ok = near >= min_sep
    else:
        ok = np.ones(ranked.shape[0], dtype=bool)
    chosen: list[int] = []
    for i in np.flatnonzero(ok):
        if chosen:
            dist = np.sqrt(np.sum((U[chosen] - U[i]) ** 2, axis=1))
            if dist.min() < min_sep:
                continue
        chosen.append(int(i))
        if len(chosen) == k:
            break
    return np.asarray(chosen, dtype=int)


@dataclass(frozen=True, eq=False)
class MLStepResult:
    dataset: Dataset
    models: ModelPair
    report: DisagreementReport  # scan before insertion
    points: np.ndarray  # evaluated points, in selection order
    values: np.ndarray  # their objective values (non-finite ones were not inserted)
    shortfall: int  # requested minus selected

    @property
    def inserted(self) -> int:
        return int(np.sum(np.isfinite(self.values)))


def _evaluate_all(objective: Callable, X: np.ndarray) -> np.ndarray:
    return np.array([objective(x) for x in X], dtype=float)


def ml_step(
    objective: Callable,
    dataset: Dataset,
    models: ModelPair,
    k: int = 1,
    min_sep: float = DEFAULT_MIN_SEP,
    scan_size: int | None = None,
    seed: int = 0,
    settings: ModelSettings | None = None,
    space: DesignSpace | None = None,
    exclude: np.ndarray | None = None,
    evaluate: Callable[[np.ndarray], np.ndarray] | None = None,
) -> MLStepResult:
    """One refinement round: scan, pick the top-``k`` separated points, evaluate, refit.

    ``space`` is the region scanned (defaults to ``dataset.space``);
    ``exclude`` adds points, beyond the dataset, that candidates must keep
    clear of. ``evaluate`` maps a batch of points to values and defaults
    to calling ``objective`` row by row. Points whose value is not finite
    are reported but not inserted.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    space = space or dataset.space
    scan_size = scan_size or default_scan_size(space.d)
    report = scan(models.kriging, models.spline, space, scan_size, seed)
    existing = dataset.points if exclude is None else np.vstack([dataset.points, exclude])
    ranked = report.ranked_points
    pick = select_separated(ranked, existing, k, min_sep, dataset.space)
    X = ranked[pick]
    if X.shape[0] == 0:
        return MLStepResult(dataset, models, report, X, np.zeros(0), k)
    F = (evaluate or (lambda P: _evaluate_all(objective, P)))(X)
    good = np.isfinite(F)
    new = dataset.append(X[good], F[good]) if good.any() else dataset
    refit = fit_models(new, settings, models) if good.any() else models
    return MLStepResult(new, refit, report, X, F, k - X.shape[0])


def smoothed_nonincreasing(trace, window: int = 5) -> bool:
    """True when block means over consecutive windows never increase.

    The trailing partial block is merged into the last full block.
    """
    t = np.asarray(trace, dtype=float)
    nblocks = max(1, t.size // window)
    edges = [i * window for i in range(nblocks)] + [t.size]
    means = [t[edges[i] : edges[i + 1]].mean() for i in range(nblocks)]
    return all(b <= a for a, b in zip(means, means[1:]))


def run_ml_trace(
    objective: Callable,
    dataset: Dataset,
    insertions: int,
    scan_size: int | None = None,
    seed: int = 0,
    settings: ModelSettings | None = None,
    min_sep: float = DEFAULT_MIN_SEP,
    on_snapshot: Callable[[int, Dataset, DisagreementReport], None] | None = None,
) -> tuple[Dataset, list[float]]:
    """Repeated single-point refinement on a fixed scan plan.

    Returns the enriched dataset and the ``insertions + 1`` maximum
    disagreements, the first measured before any insertion. ``on_snapshot``
    sees every scan (including the final one).
    """
    models = fit_models(dataset, settings)
    trace: list[float] = []
    for step in range(insertions):
        res = ml_step(
            objective, dataset, models, 1, min_sep, scan_size, seed, settings
        )
        trace.append(res.report.max_disagreement)
        if on_snapshot:
            on_snapshot(step, dataset, res.report)
        if res.points.shape[0] == 0:
            break
        dataset, models = res.dataset, res.models
    final = scan(models.kriging, models.spline, dataset.space,
                 scan_size or default_scan_size(dataset.d), seed)
    trace.append(final.max_disagreement)
    if on_snapshot:
        on_snapshot(len(trace) - 1, dataset, final)
    return dataset, trace
