"""Finite truncations of ordered normed sequence spaces.

Every space here is ``R^n`` ordered by the nonnegative orthant and equipped
with one of four norms:

``sup``     max_j |x_j|
``sum``     sum_j |x_j|
``euclid``  sqrt(sum_j x_j^2)
``bv``      |x_1| + sum_{j<n} |x_{j+1} - x_j|   (variation norm of the truncation)

The first three are lattice norms, so the orthant is normal and the
companion half-norm is simply ``||x^+||``.  Under ``bv`` the cone is the
standard non-normal example; the companion norm collapses to the sup norm.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import UsageError

NORM_KINDS = ("sup", "sum", "euclid", "bv")


@dataclass(frozen=True)
class SpaceSpec:
    dim: int
    norm_kind: str = "sup"

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise UsageError(f"dimension must be a positive integer, got {self.dim!r}")
        if self.norm_kind not in NORM_KINDS:
            raise UsageError(f"unknown norm kind {self.norm_kind!r}; expected one of {NORM_KINDS}")


class OrderInfo(NamedTuple):
    leq: bool
    geq: bool
    meet: np.ndarray
    join: np.ndarray


@dataclass(frozen=True)
class GaugeResult:
    value: float
    witness: np.ndarray


def as_point(x, dim: int | None = None) -> np.ndarray:
    """Coerce ``x`` to a finite 1-d float array, optionally checking its length."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise UsageError(f"a point must be a non-empty 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise UsageError("point has non-finite coordinates")
    if dim is not None and arr.size != dim:
        raise UsageError(f"dimension mismatch: point has {arr.size} coordinates, space has {dim}")
    return arr


def in_cone(x) -> bool:
    return bool(np.all(np.asarray(x) >= 0))


def _check_cone(x: np.ndarray, what: str = "x"):
    if not in_cone(x):
        raise UsageError(f"{what} must lie in the nonnegative orthant")


def _euclid(rows: np.ndarray) -> np.ndarray:
    # scale by the largest entry so tiny and huge vectors neither underflow nor overflow
    big = np.max(np.abs(rows), axis=-1, keepdims=True)
    safe = np.where(big > 0, big, 1.0)
    return (safe * np.sqrt(np.sum((rows / safe) ** 2, axis=-1, keepdims=True)))[..., 0]


def _row_norms(kind: str, rows: np.ndarray) -> np.ndarray:
    # rows has shape (..., n)
    if kind == "sup":
        return np.max(np.abs(rows), axis=-1)
    if kind == "sum":
        return np.sum(np.abs(rows), axis=-1)
    if kind == "euclid":
        return _euclid(rows)
    if kind == "bv":
        return np.abs(rows[..., 0]) + np.sum(np.abs(np.diff(rows, axis=-1)), axis=-1)
    raise UsageError(f"unknown norm kind {kind!r}")


def _row_dual_norms(kind: str, rows: np.ndarray) -> np.ndarray:
    if kind == "sup":
        return np.sum(np.abs(rows), axis=-1)
    if kind == "sum":
        return np.max(np.abs(rows), axis=-1)
    if kind == "euclid":
        return _euclid(rows)
    if kind == "bv":
        # <y, z> = <tail sums of y, increments of z>, increments have l1 norm ||z||_bv
        tails = np.cumsum(rows[..., ::-1], axis=-1)[..., ::-1]
        return np.max(np.abs(tails), axis=-1)
    raise UsageError(f"unknown norm kind {kind!r}")


def norm(space: SpaceSpec, x) -> float:
    x = as_point(x, space.dim)
    return float(_row_norms(space.norm_kind, x))


def dual_norm(space: SpaceSpec, y) -> float:
    """Norm of the functional ``z -> <y, z>`` with respect to ``space``."""
    y = as_point(y, space.dim)
    return float(_row_dual_norms(space.norm_kind, y))


def leq_meet_join(x, y) -> OrderInfo:
    x = as_point(x)
    y = as_point(y, x.size)
    d = y - x
    return OrderInfo(
        leq=bool(np.all(d >= 0)),
        geq=bool(np.all(d <= 0)),
        meet=np.minimum(x, y),
        join=np.maximum(x, y),
    )


def _half_norms(kind: str, rows: np.ndarray) -> np.ndarray:
    if kind == "bv":
        # constant majorant max(0, max x) * (1,...,1) is optimal since ||.||_bv >= ||.||_inf
        return np.maximum(np.max(rows, axis=-1), 0.0)
    return _row_norms(kind, np.maximum(rows, 0.0))


def _half_norm(kind: str, x: np.ndarray) -> float:
    return float(_half_norms(kind, x))


def companion_half_norm(space: SpaceSpec, x) -> float:
    """Distance from ``x`` to the negative cone, ``inf{||z|| : z >= x}``."""
    x = as_point(x, space.dim)
    return _half_norm(space.norm_kind, x)


def companion_norm(space: SpaceSpec, x) -> float:
    x = as_point(x, space.dim)
    return max(_half_norm(space.norm_kind, x), _half_norm(space.norm_kind, -x))


def cone_norm(space: SpaceSpec, x: np.ndarray) -> float:
    """Ambient norm without validation; hot path for iterative code on the cone."""
    return float(_row_norms(space.norm_kind, x))


def cone_companion_norm(space: SpaceSpec, x: np.ndarray) -> float:
    """Companion norm of a cone point, without validation.

    On the orthant the companion norm agrees with the ambient norm for the
    lattice norms and with the sup norm under ``bv``.
    """
    if space.norm_kind == "bv":
        return float(np.max(x))
    return float(_row_norms(space.norm_kind, x))


def _product_min(kind: str, x: np.ndarray, axes: list[np.ndarray], chunk: int = 200_000) -> float:
    best = np.inf
    sizes = [a.size for a in axes]
    total = int(np.prod(sizes))
    # enumerate the product lazily in flat-index chunks
    for start in range(0, total, chunk):
        idx = np.unravel_index(np.arange(start, min(total, start + chunk)), sizes)
        z = np.stack([axes[j][idx[j]] for j in range(len(axes))], axis=-1)
        best = min(best, float(np.min(_row_norms(kind, x + z))))
    return best


def half_norm_oracle(space: SpaceSpec, x, grid_step: float, radius: float) -> tuple[float, float]:
    """Brute-force two-sided bracket of the companion half-norm.

    The upper value minimises ``||x + z||`` over a grid of ``z`` in
    ``[0, radius]^n`` (augmented with the shifts that move a coordinate onto
    0 or onto another coordinate of ``x``).  Every candidate is primal
    feasible, so the minimum is an upper bound.  The lower value maximises
    ``<y, x>`` over grid directions ``y >= 0`` rescaled to unit dual norm;
    each is dual feasible, so the maximum is a lower bound.
    """
    x = as_point(x, space.dim)
    if grid_step <= 0 or radius <= 0:
        raise UsageError("grid_step and radius must be positive")
    n = x.size
    if n > 4:
        raise UsageError(f"half_norm_oracle enumerates a grid; dimension {n} > 4 is too large")
    kind = space.norm_kind

    grid = np.arange(0.0, radius + 0.5 * grid_step, grid_step)
    levels = np.concatenate(([0.0], x))
    axes = []
    for j in range(n):
        shifts = levels[levels >= x[j]] - x[j]
        axes.append(np.unique(np.concatenate((grid, shifts))))
    upper = _product_min(kind, x, axes)

    unit = np.arange(0.0, 1.0 + 0.5 * grid_step, grid_step)
    dirs = np.array(list(itertools.product(unit, repeat=n)))
    dirs = dirs[np.any(dirs > 0, axis=1)]
    dirs = dirs / _row_dual_norms(kind, dirs)[:, None]
    lower = max(0.0, float(np.max(dirs @ x)))
    return lower, upper


def u_norm(x, u) -> float:
    """Smallest ``c`` with ``-c u <= x <= c u``; ``inf`` if ``x`` is not u-bounded."""
    u = as_point(u)
    x = as_point(x, u.size)
    _check_cone(u, "u")
    if not np.any(u > 0):
        raise UsageError("u must be nonzero")
    supp = u > 0
    if np.any(x[~supp] != 0):
        return float("inf")
    with np.errstate(over="ignore"):
        return float(np.max(np.abs(x[supp]) / u[supp]))


def lower_gauge(x, u) -> float:
    """Largest ``beta >= 0`` with ``beta u <= x``."""
    u = as_point(u)
    x = as_point(x, u.size)
    _check_cone(u, "u")
    _check_cone(x, "x")
    if not np.any(u > 0):
        raise UsageError("u must be nonzero")
    supp = u > 0
    with np.errstate(over="ignore"):
        return float(np.min(x[supp] / u[supp]))


def normal_point_gauge(x) -> GaugeResult:
    """``max{||v||_bv : 0 <= v <= x}`` by dynamic programming over box vertices.

    The bv norm is convex, so the maximum over the box ``[0, x]`` sits at a
    vertex; the objective only couples neighbouring coordinates, which makes
    a two-state chain recursion exact.
    """
    x = as_point(x)
    _check_cone(x, "x")
    n = x.size
    states = np.stack([np.zeros(n), x])  # states[s, j] is v_j in state s
    score = np.abs(states[:, 0]).copy()
    back = np.zeros((n, 2), dtype=int)
    for j in range(1, n):
        # cand[s, t]: best score ending in state t at j coming from state s at j-1
        cand = score[:, None] + np.abs(states[None, :, j] - states[:, j - 1][:, None])
        back[j] = np.argmax(cand, axis=0)
        score = cand[back[j], [0, 1]]
    s = int(np.argmax(score))
    value = float(score[s])
    path = [s]
    for j in range(n - 1, 0, -1):
        s = int(back[j, s])
        path.append(s)
    path.reverse()
    witness = states[path, np.arange(n)]
    return GaugeResult(value=value, witness=witness)


def bv_example_pair(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Truncations ``(x^m, u^m)`` of the classic non-normality example.

    ``x^m`` has ones at the even positions ``2, 4, ..., 2m`` and ``u^m`` has
    ones at positions ``1..2m``; both carry one trailing zero so that the
    final descent of the infinite sequence is counted.
    """
    if m < 1:
        raise UsageError("m must be positive")
    x = np.zeros(2 * m + 1)
    x[1 : 2 * m : 2] = 1.0
    u = np.zeros(2 * m + 1)
    u[: 2 * m] = 1.0
    return x, u
