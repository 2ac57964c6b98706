"""Design variable space and uniformly distributed sample plans.

All generators return points in the unit cube; :func:`scale` maps them onto a
:class:`DesignSpace`. Randomised generators (``lhs`` and ``random``) draw from
numpy's PCG64 bit generator seeded with the plan seed, which is byte-stable
across platforms for a given numpy major version.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import qmc

# first 64 primes, one Halton base per axis
PRIMES = (
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53,
    59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131,
    137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193, 197, 199, 211, 223,
    227, 229, 233, 239, 241, 251, 257, 263, 269, 271, 277, 281, 283, 293, 307, 311,
)

# scipy ships Joe & Kuo direction numbers up to this dimension
SOBOL_MAX_DIM = 21201

GENERATORS = ("halton", "sobol", "lhs", "random")


class UnsupportedDimensionError(ValueError):
    """Requested dimension exceeds the generator's table."""


@dataclass(frozen=True)
class DesignSpace:
    """Axis-aligned box ``[lower, upper]`` of admissible design vectors."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float)).copy()
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float)).copy()
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ValueError("lower and upper must be 1-D vectors of equal length")
        if lower.size == 0:
            raise ValueError("design space needs at least one axis")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("bounds must be finite")
        bad = np.flatnonzero(~(lower < upper))
        if bad.size:
            raise ValueError(f"degenerate or inverted axes: {bad.tolist()}")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def cube(cls, d: int, lo: float = 0.0, hi: float = 1.0) -> DesignSpace:
        return cls(np.full(d, lo), np.full(d, hi))

    @property
    def d(self) -> int:
        return self.lower.size

    @property
    def amplitude(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, x, tol: float = 0.0) -> np.ndarray | bool:
        """True where ``x`` (one point or a stack of rows) lies in the closed box."""
        x = np.asarray(x, dtype=float)
        inside = np.all((x >= self.lower - tol) & (x <= self.upper + tol), axis=-1)
        return bool(inside) if x.ndim == 1 else inside

    def normalize(self, x) -> np.ndarray:
        """Map DVS coordinates to unit-cube coordinates (not clipped)."""
        return (np.asarray(x, dtype=float) - self.lower) / self.amplitude

    def denormalize(self, u) -> np.ndarray:
        return self.lower + np.asarray(u, dtype=float) * self.amplitude

    def to_dict(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}

    def __eq__(self, other):
        if not isinstance(other, DesignSpace):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(
            self.upper, other.upper
        )

    def __hash__(self):
        return hash((self.lower.tobytes(), self.upper.tobytes()))


@dataclass(frozen=True)
class SamplePlan:
    """Points in ``[0, 1]^d`` plus the generator tag and seed that produced them."""

    points: np.ndarray
    generator: str
    seed: int = 0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError("a sample plan needs an n x d array with n, d >= 1")
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")
        if np.any(pts < 0.0) or np.any(pts > 1.0):
            raise ValueError("plan coordinates must lie in [0, 1]")
        if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise ValueError("plan contains duplicate rows")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def _check_counts(n: int, d: int) -> None:
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")


def radical_inverse(index: int, base: int) -> float:
    """Van der Corput radical inverse of a non-negative integer, correctly rounded."""
    num, den = 0, 1
    while index > 0:
        index, digit = divmod(index, base)
        num = num * base + digit
        den *= base
    return num / den


def halton(n: int, d: int) -> SamplePlan:
    """Halton plan; row ``k`` is the radical inverse of ``k + 1`` in the first ``d`` primes."""
    _check_counts(n, d)
    if d > len(PRIMES):
        raise UnsupportedDimensionError(
            f"halton supports at most {len(PRIMES)} dimensions, got {d}"
        )
    pts = np.empty((n, d))
    for j, base in enumerate(PRIMES[:d]):
        pts[:, j] = [radical_inverse(k + 1, base) for k in range(n)]
    return SamplePlan(pts, "halton", 0)


def sobol(n: int, d: int, seed: int = 0) -> SamplePlan:
    """Unscrambled Sobol plan.

    The all-zero point at index 0 is always dropped, then ``seed`` further
    points are skipped, so ``sobol(1, d)`` is the point ``(0.5, ..., 0.5)``.
    Prefixes are nested: ``sobol(m, d, s)`` equals the first ``m`` rows of
    ``sobol(n, d, s)`` for ``m < n``.
    """
    _check_counts(n, d)
    if seed < 0:
        raise ValueError("seed (skip count) must be non-negative")
    if d > SOBOL_MAX_DIM:
        raise UnsupportedDimensionError(
            f"sobol supports at most {SOBOL_MAX_DIM} dimensions, got {d}"
        )
    engine = qmc.Sobol(d, scramble=False)
    engine.fast_forward(1 + seed)
    with warnings.catch_warnings():
        # balance warning for non power-of-two n; prefixes are what we want
        warnings.simplefilter("ignore", UserWarning)
        pts = engine.random(n)
    return SamplePlan(pts, "sobol", seed)


def lhs(n: int, d: int, seed: int = 0) -> SamplePlan:
    """Latin hypercube plan: one point per stratum ``[k/n, (k+1)/n)`` on every axis."""
    _check_counts(n, d)
    rng = np.random.Generator(np.random.PCG64(seed))
    strata = np.column_stack([rng.permutation(n) for _ in range(d)])
    pts = (strata + rng.random((n, d))) / n
    return SamplePlan(pts, "lhs", seed)


def uniform_random(n: int, d: int, seed: int = 0) -> SamplePlan:
    _check_counts(n, d)
    rng = np.random.Generator(np.random.PCG64(seed))
    return SamplePlan(rng.random((n, d)), "random", seed)


def generate(generator: str, n: int, d: int, seed: int = 0) -> SamplePlan:
    """Dispatch on a generator tag (``halton``, ``sobol``, ``lhs``, ``random``)."""
    if generator == "halton":
        return halton(n, d)
    if generator == "sobol":
        return sobol(n, d, seed)
    if generator == "lhs":
        return lhs(n, d, seed)
    if generator == "random":
        return uniform_random(n, d, seed)
    raise ValueError(f"unknown generator {generator!r}; expected one of {GENERATORS}")


def scale(plan: SamplePlan | np.ndarray, space: DesignSpace) -> np.ndarray:
    """Map unit-cube plan points to DVS coordinates."""
    u = plan.points if isinstance(plan, SamplePlan) else np.atleast_2d(plan)
    if u.shape[1] != space.d:
        raise ValueError(f"plan dimension {u.shape[1]} != space dimension {space.d}")
    x = space.lower + u * space.amplitude
    # guard against rounding pushing u=1 past the upper bound
    return np.clip(x, space.lower, space.upper)


def normalized_distances(a, b, space: DesignSpace) -> np.ndarray:
    """Euclidean distances between rows of ``a`` and ``b`` after unit-cube normalisation."""
    ua = np.atleast_2d(space.normalize(a))
    ub = np.atleast_2d(space.normalize(b))
    return cdist(ua, ub)
