"""Ordinary Kriging with one Gaussian semi-variogram width per sample point.

Row ``i`` of the correlation matrix uses the width of point ``i``::

    Gamma[i, j] = exp(-(r_ij / a_i) ** 2)      i, j < N
    Gamma[i, N] = Gamma[N, j] = 1,  Gamma[N, N] = 0

so ``Gamma`` is symmetric only when all widths agree. Predictions solve
``Gamma W = Gamma_0`` with the bordered right-hand side
``Gamma_0 = (exp(-(r_i0 / a_i) ** 2), ..., 1)`` and return ``sum_i W_i F_i``.
The border row forces ``sum_i W_i = 1`` (unbiased predictor).
Distances are measured in unit-cube coordinates of ``dataset.space``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import numerics
from .dataset import Dataset, ModelFitError

# kappa * eps stays near 1e-8, so default models interpolate to about that accuracy
GUARD_KAPPA = 1e8
GUARD_SHRINK = 0.8
_GUARD_MAX_STEPS = 200


class DegenerateDataError(ValueError):
    """All sample values are equal, so the correlogram has no sill."""


class Correlogram(NamedTuple):
    r: np.ndarray  # mean pair distance per non-empty bin
    gamma: np.ndarray  # empirical semi-variance
    rho: np.ndarray  # sill-normalised correlation, clipped to [0, 1]
    count: np.ndarray  # pairs per bin
    sill: float
    r_max: float


def default_nbins(n: int) -> int:
    pairs = n * (n - 1) // 2
    return min(20, max(4, int(np.sqrt(pairs))))


def empirical_correlogram(dataset: Dataset, nbins: int | None = None) -> Correlogram:
    """Binned semi-variance of ``dataset`` and the matching correlation estimate.

    Pair distances are split into ``nbins`` equal-width bins over
    ``(0, r_max]``. Per bin ``gamma_k`` is the mean of ``(F_i - F_j)**2 / 2``
    and ``rho_k = clip(1 - gamma_k / s, 0, 1)`` where ``s`` is the sample
    variance (ddof=1) of the values. Empty bins are dropped.
    """
    n = dataset.n
    if n < 3:
        raise ValueError(f"correlogram needs at least 3 points, got {n}")
    nbins = default_nbins(n) if nbins is None else nbins
    if nbins < 2:
        raise ValueError("nbins must be >= 2")
    sill = float(np.var(dataset.values, ddof=1))
    if not sill > 0.0:
        raise DegenerateDataError("all sample values are equal")

    iu = np.triu_indices(n, k=1)
    r = dataset.distances[iu]
    sv = 0.5 * (dataset.values[iu[0]] - dataset.values[iu[1]]) ** 2
    r_max = float(r.max())
    # bin k covers (k*h, (k+1)*h]
    idx = np.clip(np.ceil(r / r_max * nbins).astype(int) - 1, 0, nbins - 1)
    count = np.bincount(idx, minlength=nbins)
    r_sum = np.bincount(idx, weights=r, minlength=nbins)
    sv_sum = np.bincount(idx, weights=sv, minlength=nbins)
    keep = count > 0
    r_k = r_sum[keep] / count[keep]
    g_k = sv_sum[keep] / count[keep]
    rho = np.clip(1.0 - g_k / sill, 0.0, 1.0)
    return Correlogram(r_k, g_k, rho, count[keep], sill, r_max)


def fit_width_to_correlogram(r, rho, r_max: float, tol: float | None = None) -> float:
    """Least-squares width ``a`` of ``exp(-(r/a)**2)`` against ``rho``, searched in ``[0.05, 2] * r_max``."""
    r = np.asarray(r, dtype=float)
    rho = np.asarray(rho, dtype=float)
    lo, hi = 0.05 * r_max, 2.0 * r_max
    tol = 1e-6 * r_max if tol is None else tol

    def sse(a: float) -> float:
        return float(np.sum((np.exp(-((r / a) ** 2)) - rho) ** 2))

    return numerics.golden_section(sse, lo, hi, tol=tol, maximize=False).x


def fallback_width(dataset: Dataset) -> float:
    """Twice the mean nearest-neighbour distance (1.0 for a single point)."""
    if dataset.n < 2:
        return 1.0
    D = dataset.distances + np.diag(np.full(dataset.n, np.inf))
    return float(2.0 * D.min(axis=1).mean())


def guard_width(dataset: Dataset, a: float, kappa_max: float = GUARD_KAPPA) -> float:
    """Shrink a shared width geometrically until ``cond(Gamma) <= kappa_max``.

    Wide Gaussians over closely spaced points drive ``Gamma`` toward a
    rank-deficient matrix; narrowing always restores conditioning because
    ``Gamma`` tends to the well-conditioned bordered identity as ``a -> 0``.
    """
    if dataset.n < 2:
        return a
    D = dataset.distances
    for _ in range(_GUARD_MAX_STEPS):
        k = numerics.condition_number(gamma_from_distances(D, a), cap=np.inf)
        if k <= kappa_max:
            return a
        a *= GUARD_SHRINK
    return a


def fit_width(dataset: Dataset, nbins: int | None = None) -> float:
    """Shared semi-variogram width fitted to the empirical correlogram.

    Falls back to :func:`fallback_width` for fewer than three points or
    constant data. The result is passed through :func:`guard_width`.
    """
    if dataset.n < 3:
        return guard_width(dataset, fallback_width(dataset))
    try:
        cg = empirical_correlogram(dataset, nbins)
    except DegenerateDataError:
        return guard_width(dataset, fallback_width(dataset))
    return guard_width(dataset, fit_width_to_correlogram(cg.r, cg.rho, cg.r_max))


def gamma_from_distances(dist: np.ndarray, a) -> np.ndarray:
    n = dist.shape[0]
    a = np.broadcast_to(np.asarray(a, dtype=float), (n,))
    G = np.ones((n + 1, n + 1))
    G[:n, :n] = np.exp(-((dist / a[:, None]) ** 2))
    G[n, n] = 0.0
    return G


def assemble_gamma(points, a, space=None) -> np.ndarray:
    """Bordered ``(N+1) x (N+1)`` correlation matrix.

    ``points`` are unit-cube coordinates unless ``space`` is given, in which
    case they are normalised by it first.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if space is not None:
        pts = space.normalize(pts)
    a = np.broadcast_to(np.asarray(a, dtype=float), (pts.shape[0],))
    if np.any(~(a > 0)):
        raise ValueError("semi-variogram widths must be positive")
    diff = pts[:, None, :] - pts[None, :, :]
    return gamma_from_distances(np.sqrt(np.sum(diff * diff, axis=-1)), a)


@dataclass(frozen=True, eq=False)
class KrigingModel:
    dataset: Dataset
    a: np.ndarray
    gamma: np.ndarray
    lu: numerics.LUFactorization

    @property
    def n(self) -> int:
        return self.dataset.n

    def condition_number(self, cap: float = numerics.KAPPA_CAP) -> float:
        return numerics.condition_number(self.gamma, cap=cap)

    def weights(self, x) -> np.ndarray:
        """Solution ``W`` of ``Gamma W = Gamma_0`` per query row, shape (M, N+1); last column is the Lagrange term."""
        r0 = self.dataset.distances_to(x)  # (N, M)
        rhs = np.ones((self.n + 1, r0.shape[1]))
        rhs[: self.n] = np.exp(-((r0 / self.a[:, None]) ** 2))
        return self.lu.solve(rhs).T

    def predict_many(self, x) -> np.ndarray:
        W = self.weights(x)
        return W[:, : self.n] @ self.dataset.values

    def predict(self, x) -> float:
        return float(self.predict_many(np.atleast_2d(x))[0])

    __call__ = predict


def fit(dataset: Dataset, a=None) -> KrigingModel:
    """Assemble and LU-factorise ``Gamma`` once; ``a`` defaults to :func:`fit_width`."""
    dataset.check_distinct()
    if a is None:
        a = fit_width(dataset)
    a = np.array(np.broadcast_to(np.asarray(a, dtype=float), (dataset.n,)))
    if np.any(~(a > 0)):
        raise ValueError("semi-variogram widths must be positive")
    G = gamma_from_distances(dataset.distances, a)
    try:
        lu = numerics.lu_factor(G)
    except numerics.SingularMatrixError as exc:
        i, j, dist = dataset.closest_pair()
        raise ModelFitError(
            f"singular Kriging matrix ({exc}); closest points {i} and {j} "
            f"at normalised distance {dist:.3e}",
            points=(i, j),
        ) from exc
    a.flags.writeable = False
    return KrigingModel(dataset, a, G, lu)
