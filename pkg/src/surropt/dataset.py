"""Sampled design points with their objective values."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .space import DesignSpace, normalized_distances

DUPLICATE_TOL = 1e-10


class ModelFitError(ValueError):
    """A meta-model could not be built from the given data."""

    def __init__(self, message: str, points: tuple[int, ...] = ()):
        super().__init__(message)
        self.points = points


@dataclass(frozen=True, eq=False)
class Dataset:
    """``N`` design points, their values ``F(x_i)`` and the box used to normalise distances.

    Points may sit outside ``space``; normalisation is a plain affine map.
    """

    points: np.ndarray
    values: np.ndarray
    space: DesignSpace

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float)).copy()
        vals = np.atleast_1d(np.asarray(self.values, dtype=float)).copy()
        if pts.shape[0] < 1:
            raise ValueError("dataset needs at least one point")
        if pts.shape[1] != self.space.d:
            raise ValueError(f"points have {pts.shape[1]} columns, space has {self.space.d}")
        if vals.shape != (pts.shape[0],):
            raise ValueError("one value per point required")
        if not np.all(np.isfinite(vals)):
            raise ValueError("dataset values must be finite")
        if not np.all(np.isfinite(pts)):
            raise ValueError("dataset points must be finite")
        pts.flags.writeable = False
        vals.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @cached_property
    def unit_points(self) -> np.ndarray:
        return self.space.normalize(self.points)

    @cached_property
    def distances(self) -> np.ndarray:
        """Pairwise normalised distance matrix (N x N)."""
        return normalized_distances(self.points, self.points, self.space)

    def distances_to(self, x) -> np.ndarray:
        """Normalised distances from every dataset point to each row of ``x``, shape (N, M)."""
        return normalized_distances(self.points, np.atleast_2d(x), self.space)

    def append(self, x, f) -> Dataset:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        f = np.atleast_1d(np.asarray(f, dtype=float))
        return Dataset(np.vstack([self.points, x]), np.concatenate([self.values, f]), self.space)

    def closest_pair(self) -> tuple[int, int, float]:
        if self.n < 2:
            return (0, 0, np.inf)
        D = self.distances + np.diag(np.full(self.n, np.inf))
        i, j = np.unravel_index(np.argmin(D), D.shape)
        i, j = sorted((int(i), int(j)))
        return i, j, float(D[i, j])

    def check_distinct(self, tol: float = DUPLICATE_TOL) -> None:
        i, j, dist = self.closest_pair()
        if dist <= tol:
            raise ModelFitError(
                f"points {i} and {j} are near-duplicates (normalised distance {dist:.3e})",
                points=(i, j),
            )
