"""PSI-AI: meta-model driven search with ML refinement and box constriction.

One iteration, given the current box:

1. fit Kriging and the spline on the evaluated points near the box,
2. ML phase: evaluate ``n_ml`` points where the two models disagree most,
3. search: evaluate the ``n_best`` lowest Kriging predictions on a Sobol scan,
4. recentre the box on the best evaluated point and shrink it by ``alpha``.

The run stops after ``n_iter`` iterations or when the evaluation budget is
spent, whichever comes first.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import refine
from .dataset import Dataset, ModelFitError
from .kriging import KrigingModel
from .regularizer import TuneConfig, TuningError
from .space import DesignSpace, scale, sobol

log = logging.getLogger(__name__)

PHASES = ("DOE", "ML", "SEARCH")
THREADS_ENV = "SURROPT_THREADS"
_SCAN_BASE = 1 << 20


class OptimizationError(RuntimeError):
    """A run aborted; ``history`` holds every evaluation made before the abort."""

    def __init__(self, message: str, iteration: int, history: RunHistory | None = None):
        super().__init__(f"iteration {iteration}: {message}")
        self.iteration = iteration
        self.history = history


@dataclass(frozen=True)
class PsiConfig:
    alpha: float = 0.9
    n_doe: int = 192
    n_ml: int = 8
    n_best: int = 8
    n_iter: int = 10
    budget: int = 352
    scan_size: int = 3072
    min_sep: float = refine.DEFAULT_MIN_SEP
    seed: int = 0
    regularize: bool = False
    refit_widths: bool = True
    tune_sweeps: int = 3

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.budget < self.n_doe:
            raise ValueError("budget must cover the initial DOE")
        for name in ("n_ml", "n_best", "n_iter", "seed", "tune_sweeps"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.scan_size < 1:
            raise ValueError("scan_size must be >= 1")
        if not self.min_sep >= 0.0:
            raise ValueError("min_sep must be >= 0")

    @classmethod
    def for_dimension(cls, d: int, **overrides) -> PsiConfig:
        """Defaults scaled to ``d``: 16 DOE points per variable, scans of 256 per variable.

        ``budget`` defaults to exactly what ``n_iter`` full iterations need.
        """
        n_doe = overrides.pop("n_doe", 16 * d)
        n_ml = overrides.pop("n_ml", 8)
        n_best = overrides.pop("n_best", 8)
        n_iter = overrides.pop("n_iter", 10)
        budget = overrides.pop("budget", n_doe + n_iter * (n_ml + n_best))
        scan_size = overrides.pop("scan_size", refine.default_scan_size(d))
        cfg = cls(
            n_doe=n_doe, n_ml=n_ml, n_best=n_best, n_iter=n_iter,
            budget=budget, scan_size=scan_size, **overrides,
        )
        cfg.check_dimension(d)
        return cfg

    def check_dimension(self, d: int) -> None:
        if self.n_doe < d + 2:
            raise ValueError(f"n_doe must be >= d + 2 = {d + 2}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Record:
    eval_index: int
    iteration: int
    phase: str
    x: tuple[float, ...]
    f: float
    valid: bool
    best_so_far: float
    lower: tuple[float, ...]
    upper: tuple[float, ...]


@dataclass
class RunHistory:
    d: int
    records: list[Record] = field(default_factory=list)
    best_x: np.ndarray | None = None
    best_f: float = math.inf

    def __len__(self) -> int:
        return len(self.records)

    def add(self, iteration: int, phase: str, x, f: float, space: DesignSpace) -> Record:
        valid = math.isfinite(f)
        if valid and f < self.best_f:
            self.best_f = f
            self.best_x = np.array(x, dtype=float)
        rec = Record(
            len(self.records), iteration, phase, tuple(float(v) for v in x), f, valid,
            self.best_f, tuple(space.lower.tolist()), tuple(space.upper.tolist()),
        )
        self.records.append(rec)
        return rec

    def points(self, valid_only: bool = True) -> np.ndarray:
        rows = [r.x for r in self.records if r.valid or not valid_only]
        return np.array(rows, dtype=float).reshape(len(rows), self.d)

    def values(self, valid_only: bool = True) -> np.ndarray:
        return np.array([r.f for r in self.records if r.valid or not valid_only], dtype=float)

    def phase_counts(self) -> dict[str, int]:
        counts = dict.fromkeys(PHASES, 0)
        for r in self.records:
            counts[r.phase] += 1
        return counts

    def best_by_phase(self, phase: str) -> float:
        vals = [r.f for r in self.records if r.phase == phase and r.valid]
        return min(vals) if vals else math.inf


@dataclass(frozen=True, eq=False)
class OptimizeResult:
    x: np.ndarray
    f: float
    history: RunHistory
    config: PsiConfig
    shortfall: int = 0


def reduce_dvs(
    current: DesignSpace, center, alpha: float, original: DesignSpace
) -> DesignSpace:
    """Recentre on ``center`` with half-widths scaled by ``alpha``, clipped to ``original``."""
    center = np.asarray(center, dtype=float)
    if not original.contains(center):
        raise ValueError("center must lie inside the original space")
    hw = alpha * 0.5 * current.amplitude
    lo = np.maximum(center - hw, original.lower)
    hi = np.minimum(center + hw, original.upper)
    # an axis can only collapse when center sits on a bound and hw underflows
    tiny = np.spacing(np.maximum(np.abs(lo), np.abs(hi))) * 4
    collapsed = ~(lo < hi)
    lo = np.where(collapsed, np.maximum(center - tiny, original.lower), lo)
    hi = np.where(collapsed, np.minimum(center + tiny, original.upper), hi)
    return DesignSpace(lo, hi)


def search_step(
    kr: KrigingModel,
    space: DesignSpace,
    n_best: int,
    scan_size: int,
    min_sep: float = refine.DEFAULT_MIN_SEP,
    seed: int = 0,
    exclude: np.ndarray | None = None,
) -> tuple[np.ndarray, int]:
    """Lowest-predicted Sobol scan points, separated from ``exclude`` and each other.

    Separation is measured in the unit cube of ``space``. Returns the points
    and the shortfall against ``n_best``.
    """
    if n_best <= 0:
        return np.zeros((0, space.d)), 0
    X = scale(sobol(scan_size, space.d, seed), space)
    order = np.argsort(kr.predict_many(X), kind="stable")
    existing = np.zeros((0, space.d)) if exclude is None else np.atleast_2d(exclude)
    pick = refine.select_separated(X[order], existing, n_best, min_sep, space)
    return X[order][pick], n_best - pick.size


def fitting_subset(points: np.ndarray, space: DesignSpace) -> np.ndarray:
    """Mask of points no farther than one box width outside ``space`` on any axis."""
    w = space.amplitude
    return np.all((points >= space.lower - w) & (points <= space.upper + w), axis=1)


def threads_from_env() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _batch_evaluator(objective: Callable, threads: int) -> Callable[[np.ndarray], np.ndarray]:
    concurrent = threads > 1 and getattr(objective, "pure", False)

    def call(x) -> float:
        try:
            return float(objective(x))
        except (ArithmeticError, FloatingPointError):
            return math.nan

    def evaluate(X: np.ndarray) -> np.ndarray:
        if concurrent and len(X) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                return np.array(list(pool.map(call, X)), dtype=float)
        return np.array([call(x) for x in X], dtype=float)

    return evaluate


def optimize(
    objective: Callable,
    space: DesignSpace,
    config: PsiConfig,
    threads: int | None = None,
    callback: Callable[[int, RunHistory, DesignSpace], None] | None = None,
) -> OptimizeResult:
    """Minimise ``objective`` over ``space`` with PSI-AI.

    ``objective`` maps a point to a real; non-finite results are recorded as
    invalid and never enter a model. With ``threads > 1`` and a pure
    objective, batches are evaluated concurrently but recorded in index
    order. Raises :class:`OptimizationError` when a model cannot be fitted.
    """
    config.check_dimension(space.d)
    evaluate_batch = _batch_evaluator(objective, threads or threads_from_env())
    settings = refine.ModelSettings(
        regularize=config.regularize,
        refit_widths=config.refit_widths,
        tune=TuneConfig(sweeps=config.tune_sweeps),
    )
    history = RunHistory(space.d)
    shortfall = 0

    def commit(X: np.ndarray, iteration: int, phase: str, box: DesignSpace) -> np.ndarray:
        room = config.budget - len(history)
        X = X[:room]
        F = evaluate_batch(X) if len(X) else np.zeros(0)
        for x, f in zip(X, F):
            history.add(iteration, phase, x, float(f), box)
        return F

    # each seed scans its own Sobol block past the DOE blocks (two scans per
    # iteration); skipping costs time linear in the offset, so keep it modest
    base = _SCAN_BASE + config.seed * 2 * config.n_iter * config.scan_size
    doe = scale(sobol(config.n_doe, space.d, config.seed * config.n_doe), space)
    commit(doe, 0, "DOE", space)
    if callback:
        callback(0, history, space)

    box = space
    models = None
    for it in range(1, config.n_iter + 1):
        if len(history) >= config.budget:
            break
        if config.n_ml == 0 and config.n_best == 0:
            if history.best_x is not None:
                box = reduce_dvs(box, history.best_x, config.alpha, space)
            continue
        pts, vals = history.points(), history.values()
        if pts.shape[0] == 0:
            raise OptimizationError("no valid evaluations to fit", it, history)
        mask = fitting_subset(pts, box)
        if not mask.any():  # defensive: the box is centred on a valid point
            mask[:] = True
        try:
            data = Dataset(pts[mask], vals[mask], box)
            models = refine.fit_models(data, settings, models)
        except (ModelFitError, TuningError) as exc:
            raise OptimizationError(f"model fit failed: {exc}", it, history) from exc
        scan_seed = base + 2 * (it - 1) * config.scan_size

        if config.n_ml > 0:
            room = config.budget - len(history)
            k = min(config.n_ml, room)
            if k > 0:
                try:
                    res = refine.ml_step(
                        objective, data, models, k, config.min_sep, config.scan_size,
                        scan_seed, settings, space=box,
                        exclude=history.points(valid_only=False),
                        evaluate=lambda X: commit(X, it, "ML", box),
                    )
                except (ModelFitError, TuningError) as exc:
                    raise OptimizationError(f"refit after ML failed: {exc}", it, history) from exc
                data, models = res.dataset, res.models
                shortfall += res.shortfall
                log.debug("iteration %d: max disagreement %.3g%%", it, res.report.max_disagreement)

        room = config.budget - len(history)
        if config.n_best > 0 and room > 0:
            cand, short = search_step(
                models.kriging, box, min(config.n_best, room), config.scan_size,
                config.min_sep, scan_seed + config.scan_size,
                exclude=history.points(valid_only=False),
            )
            shortfall += short
            commit(cand, it, "SEARCH", box)

        if history.best_x is not None:
            box = reduce_dvs(box, history.best_x, config.alpha, space)
        if callback:
            callback(it, history, box)

    if history.best_x is None:
        best_x = np.full(space.d, np.nan)
    else:
        best_x = history.best_x.copy()
    return OptimizeResult(best_x, history.best_f, history, config, shortfall)
