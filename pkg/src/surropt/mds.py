"""Multi-dimensional spline: a weighted sum of linear compact-support kernels.

    f(x) = sum_i w_i * R_i(rho(x_i, x)),   R_i(r) = max(0, 1 - b_i * r)

The weights interpolate the data exactly: ``A w = F`` with
``A[i, j] = R_j(rho(x_i, x_j))``. Distances use the same unit-cube
normalisation as :mod:`surropt.kriging`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .dataset import Dataset, ModelFitError


def kernel(r, b):
    """Linear compact-support kernel ``1 - b r`` on ``b r <= 1``, zero beyond."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("distance must be non-negative")
    return np.maximum(0.0, 1.0 - np.asarray(b, dtype=float) * r)


def default_slope(dataset: Dataset) -> float:
    """``2 / D`` with ``D`` the largest pairwise normalised distance (support radius D/2)."""
    if dataset.n < 2:
        return 1.0
    return 2.0 / float(dataset.distances.max())


def system_matrix(dist: np.ndarray, b) -> np.ndarray:
    """``A[i, j] = kernel(dist[i, j], b[j])``; column ``j`` belongs to point ``j``."""
    b = np.broadcast_to(np.asarray(b, dtype=float), (dist.shape[0],))
    return np.maximum(0.0, 1.0 - dist * b[None, :])


@dataclass(frozen=True, eq=False)
class SplineModel:
    dataset: Dataset
    b: np.ndarray
    w: np.ndarray
    matrix: np.ndarray

    @property
    def n(self) -> int:
        return self.dataset.n

    def condition_number(self, cap: float = numerics.KAPPA_CAP) -> float:
        return numerics.condition_number(self.matrix, cap=cap)

    def predict_many(self, x) -> np.ndarray:
        """Evaluate at each row of ``x``; zero where no support reaches."""
        r = self.dataset.distances_to(x)  # (N, M)
        return self.w @ np.maximum(0.0, 1.0 - self.b[:, None] * r)

    def predict(self, x) -> float:
        return float(self.predict_many(np.atleast_2d(x))[0])

    __call__ = predict


def fit(dataset: Dataset, b=None) -> SplineModel:
    """Solve for the kernel weights; ``b`` defaults to :func:`default_slope`."""
    dataset.check_distinct()
    if b is None:
        b = default_slope(dataset)
    b = np.array(np.broadcast_to(np.asarray(b, dtype=float), (dataset.n,)))
    if np.any(~(b > 0)):
        raise ValueError("support slopes must be positive")
    A = system_matrix(dataset.distances, b)
    try:
        w = numerics.lu_solve(A, dataset.values)
    except numerics.SingularMatrixError as exc:
        # a point whose support reaches nobody else only constrains itself;
        # flag points whose neighbourhoods overlap nobody as the likely culprits
        overlap = (A > 0).sum(axis=0) + (A > 0).sum(axis=1) - 2
        isolated = tuple(int(i) for i in np.flatnonzero(overlap == 0))
        i, j, dist = dataset.closest_pair()
        raise ModelFitError(
            f"singular spline matrix ({exc}); isolated points {list(isolated)}, "
            f"closest pair {i}, {j} at {dist:.3e}",
            points=isolated or (i, j),
        ) from exc
    b.flags.writeable = False
    w.flags.writeable = False
    return SplineModel(dataset, b, w, A)
