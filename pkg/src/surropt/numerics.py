"""Dense linear algebra and bounded scalar/coordinate search.

Matrices are plain 2-D ``numpy`` arrays. LU factorisation and singular
values come from LAPACK through scipy/numpy; a one-sided Jacobi SVD is kept
alongside as an independent route for cross-checking condition numbers on
small matrices.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla

PIVOT_RTOL = 1e-14
SIGMA_MIN_FLOOR = 1e-300
KAPPA_CAP = 1e14

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0  # 0.618...
INV_PHI_SQ = 1.0 - INV_PHI


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when a pivot falls below ``PIVOT_RTOL * max|A|``.

    ``index`` is the elimination step where the small pivot appeared.
    """

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


def _as_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


@dataclass(frozen=True)
class LUFactorization:
    """Partial-pivoting LU of a square matrix, reusable for many right-hand sides."""

    lu: np.ndarray
    piv: np.ndarray

    @property
    def n(self) -> int:
        return self.lu.shape[0]

    def solve(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.n:
            raise ValueError(f"rhs has {b.shape[0]} rows, matrix has {self.n}")
        return sla.lu_solve((self.lu, self.piv), b, check_finite=False)


def lu_factor(A) -> LUFactorization:
    A = _as_square(A)
    scale = np.max(np.abs(A)) if A.size else 0.0
    if scale == 0.0:
        raise SingularMatrixError("zero matrix", index=0)
    with warnings.catch_warnings():
        # exact-zero pivots are reported below as SingularMatrixError
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    small = np.flatnonzero(pivots < PIVOT_RTOL * scale)
    if small.size:
        k = int(small[0])
        raise SingularMatrixError(
            f"pivot {pivots[k]:.3e} at step {k} below {PIVOT_RTOL:g} * max|A|", index=k
        )
    return LUFactorization(lu, piv)


def lu_solve(A, b) -> np.ndarray:
    """Solve ``A x = b`` by LU with partial pivoting (``A`` need not be symmetric)."""
    return lu_factor(A).solve(b)


def jacobi_singular_values(A, tol: float = 1e-12, max_sweeps: int = 60) -> np.ndarray:
    """Singular values by one-sided (Hestenes) Jacobi rotations, descending.

    Meant for small matrices; every sweep visits all column pairs.
    """
    U = np.array(_as_square(A), dtype=float)
    n = U.shape[1]
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = U[:, p] @ U[:, p]
                beta = U[:, q] @ U[:, q]
                gamma = U[:, p] @ U[:, q]
                if alpha == 0.0 or beta == 0.0:
                    continue
                c_pq = abs(gamma) / math.sqrt(alpha * beta)
                off = max(off, c_pq)
                if c_pq <= tol:
                    continue
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                up = U[:, p].copy()
                U[:, p] = c * up - s * U[:, q]
                U[:, q] = s * up + c * U[:, q]
        if off <= tol:
            break
    return np.sort(np.linalg.norm(U, axis=0))[::-1]


def condition_number(A, cap: float = KAPPA_CAP, method: str = "lapack") -> float:
    """2-norm condition number ``sigma_max / sigma_min``.

    Values above ``cap`` (including singular matrices, where
    ``sigma_min < 1e-300``) are reported as ``cap`` itself; use
    :func:`is_capped` to test for the flag. Pass ``cap=np.inf`` to get the
    raw ratio with ``inf`` for singular input.
    """
    A = _as_square(A)
    if method == "lapack":
        sv = np.linalg.svd(A, compute_uv=False)
    elif method == "jacobi":
        sv = jacobi_singular_values(A)
    else:
        raise ValueError(f"unknown method {method!r}")
    smax, smin = sv[0], sv[-1]
    if smax == 0.0 or smin < SIGMA_MIN_FLOOR:
        return float(cap)
    return float(min(smax / smin, cap))


def is_capped(kappa: float, cap: float = KAPPA_CAP) -> bool:
    return not kappa < cap


@dataclass(frozen=True)
class LineSearchResult:
    x: float
    fx: float
    iterations: int
    nfev: int


def golden_section(
    g: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-6,
    maximize: bool = True,
) -> LineSearchResult:
    """Golden-section search of ``g`` on ``[lo, hi]``.

    The bracket shrinks by ``(sqrt(5) - 1) / 2`` per iteration until it is
    shorter than ``tol``; the endpoints are probed last, so monotone
    functions return an exact bound. The best probed point is returned and
    always lies in ``[lo, hi]``. Non-finite values of ``g`` rank worst.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    if not tol > 0:
        raise ValueError("tol must be positive")
    sign = 1.0 if maximize else -1.0
    nfev = 0
    best_x, best_h = lo, -math.inf

    def h(x: float) -> float:
        nonlocal nfev, best_x, best_h
        nfev += 1
        v = g(x)
        v = sign * v if math.isfinite(v) else -math.inf
        if v > best_h or nfev == 1:
            best_x, best_h = x, v
        return v

    a, b = lo, hi
    c = min(max(a + INV_PHI_SQ * (b - a), lo), hi)
    d = min(max(a + INV_PHI * (b - a), lo), hi)
    hc, hd = h(c), h(d)
    iterations = 0
    while b - a >= tol:
        iterations += 1
        if hc >= hd:
            b, d, hd = d, c, hc
            c = min(max(a + INV_PHI_SQ * (b - a), lo), hi)
            hc = h(c)
        else:
            a, c, hc = c, d, hd
            d = min(max(a + INV_PHI * (b - a), lo), hi)
            hd = h(d)
    h(lo)
    h(hi)
    fx = sign * best_h if math.isfinite(best_h) else (-math.inf if maximize else math.inf)
    return LineSearchResult(best_x, fx, iterations, nfev)


def golden_iteration_bound(lo: float, hi: float, tol: float) -> int:
    return max(0, math.ceil(math.log((hi - lo) / tol) / math.log(1.0 / INV_PHI))) + 2


@dataclass(frozen=True)
class CompassResult:
    x: np.ndarray
    fx: float
    sweeps: int
    nfev: int


def coordinate_compass_maximize(
    g: Callable[[np.ndarray], float],
    x0,
    lo,
    hi,
    sweeps: int = 3,
    rel_tol: float = 1e-6,
    line_tol: float = 1e-3,
    accept_tol: float = 0.0,
) -> CompassResult:
    """Cyclic coordinate ascent with a golden-section line search per axis.

    Each coordinate ``i`` is searched over ``[lo[i], hi[i]]`` with bracket
    tolerance ``line_tol * (hi[i] - lo[i])`` while the others stay fixed. A
    move is accepted only when it beats the incumbent by more than
    ``accept_tol * |g|``, so ties keep the incumbent. Iteration stops after
    ``sweeps`` full cycles, or earlier when a cycle gains less than
    ``rel_tol * (1 + |g|)``. ``g`` is never evaluated outside the box, and
    non-finite values count as rejected probes.
    """
    x = np.array(x0, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if x.shape != lo.shape or x.shape != hi.shape:
        raise ValueError("x0, lo and hi must share a shape")
    if np.any(x < lo) or np.any(x > hi):
        raise ValueError("x0 must lie inside [lo, hi]")
    if sweeps < 0:
        raise ValueError("sweeps must be >= 0")

    def safe(v: float) -> float:
        return v if math.isfinite(v) else -math.inf

    fx = safe(g(x.copy()))
    nfev = 1
    done = 0
    for _ in range(sweeps):
        start = fx
        for i in range(x.size):
            if not lo[i] < hi[i]:
                continue

            def line(t: float, i=i) -> float:
                y = x.copy()
                y[i] = t
                return g(y)

            res = golden_section(line, lo[i], hi[i], tol=line_tol * (hi[i] - lo[i]))
            nfev += res.nfev
            cand = safe(res.fx)
            margin = accept_tol * abs(fx) if math.isfinite(fx) else 0.0
            if cand > fx + margin:
                x[i] = res.x
                fx = cand
        done += 1
        if math.isfinite(start) and fx - start < rel_tol * (1.0 + abs(fx)):
            break
    return CompassResult(x, fx, done, nfev)
