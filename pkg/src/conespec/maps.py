"""Homogeneous order-preserving maps on the orthant.

Maps are small expression trees.  Leaves are positive matrices, the
two-sex mating map, the rank-structured population map and opaque
callables; inner nodes scale, compose, raise to a power, or add the
rank-one perturbation ``eps * psi(x) * u``.  Every node exposes ``dim`` and
an unvalidated ``apply``; :func:`evaluate` is the checked entry point.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import UsageError
from .ordered_space import SpaceSpec, _half_norm, _half_norms, _row_norms, as_point, in_cone


class MapExpr:
    dim: int

    def apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def apply_rows(self, xs: np.ndarray) -> np.ndarray:
        """Apply to every row of a ``(k, dim)`` array; nodes override this with vectorised code."""
        return np.stack([self.apply(x) for x in xs]) if len(xs) else np.empty_like(xs)

    def __call__(self, x) -> np.ndarray:
        return evaluate(self, x)


def _nonneg(name, arr):
    if np.any(np.asarray(arr) < 0) or not np.all(np.isfinite(arr)):
        raise UsageError(f"{name} must be finite and nonnegative")


@dataclass(eq=False)
class Linear(MapExpr):
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise UsageError(f"Linear needs a square matrix, got shape {self.matrix.shape}")
        _nonneg("matrix entries", self.matrix)
        self.dim = self.matrix.shape[0]

    def apply(self, x):
        return self.matrix @ x

    def apply_rows(self, xs):
        return xs @ self.matrix.T


def identity(n: int) -> Linear:
    return Linear(np.eye(n))


@dataclass(eq=False)
class TwoSex(MapExpr):
    """Female/male map with harmonic-mean mating.

    ``(f, m) -> (p_f f + b_f h, p_m m + b_m h)`` with ``h = f m / (f + m)``,
    extended by ``h = 0`` at the origin.
    """

    p_f: float
    p_m: float
    b_f: float
    b_m: float
    dim: int = field(default=2, init=False)

    def __post_init__(self):
        _nonneg("two-sex parameters", [self.p_f, self.p_m, self.b_f, self.b_m])

    def apply(self, x):
        f, m = x[0], x[1]
        s = f + m
        h = f * m / s if s > 0 else 0.0
        return np.array([self.p_f * f + self.b_f * h, self.p_m * m + self.b_m * h])

    def apply_rows(self, xs):
        f, m = xs[:, 0], xs[:, 1]
        s = f + m
        with np.errstate(invalid="ignore", divide="ignore"):
            h = np.where(s > 0, f * m / np.where(s > 0, s, 1.0), 0.0)
        return np.stack([self.p_f * f + self.b_f * h, self.p_m * m + self.b_m * h], axis=1)


@dataclass(eq=False)
class Rank(MapExpr):
    """Rank-structured population with rank-selective mating.

    ``B_1(x) = q_1 x_1 + sum_{j,k} beta[j,k] min(x_j, x_k)`` and
    ``B_j(x) = max(p_{j-1} x_{j-1}, q_j x_j)`` for ``j >= 2``.
    ``beta`` is a dense ``n x n`` array (0-based).
    """

    q: np.ndarray
    p: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float).ravel()
        self.p = np.asarray(self.p, dtype=float).ravel()
        n = self.q.size
        if n < 1:
            raise UsageError("rank model needs at least one rank")
        if self.p.size != n - 1:
            raise UsageError(f"p must have length n-1 = {n - 1}, got {self.p.size}")
        self.beta = np.asarray(self.beta, dtype=float)
        if self.beta.shape != (n, n):
            raise UsageError(f"beta must be {n}x{n}, got {self.beta.shape}")
        _nonneg("q", self.q)
        _nonneg("p", self.p)
        _nonneg("beta", self.beta)
        self.dim = n
        self._pairs = np.nonzero(self.beta)

    def apply(self, x):
        j, k = self._pairs
        out = np.empty_like(x)
        out[0] = self.q[0] * x[0] + np.sum(self.beta[j, k] * np.minimum(x[j], x[k]))
        out[1:] = np.maximum(self.p * x[:-1], self.q[1:] * x[1:])
        return out

    def apply_rows(self, xs):
        j, k = self._pairs
        out = np.empty_like(xs)
        out[:, 0] = self.q[0] * xs[:, 0] + np.sum(self.beta[j, k] * np.minimum(xs[:, j], xs[:, k]), axis=1)
        out[:, 1:] = np.maximum(self.p * xs[:, :-1], self.q[1:] * xs[:, 1:])
        return out


@dataclass(eq=False)
class Scale(MapExpr):
    alpha: float
    inner: MapExpr

    def __post_init__(self):
        _nonneg("alpha", [self.alpha])
        self.dim = self.inner.dim

    def apply(self, x):
        return self.alpha * self.inner.apply(x)

    def apply_rows(self, xs):
        return self.alpha * self.inner.apply_rows(xs)


@dataclass(eq=False)
class Compose(MapExpr):
    """``outer(inner(x))``."""

    outer: MapExpr
    inner: MapExpr

    def __post_init__(self):
        if self.outer.dim != self.inner.dim:
            raise UsageError(f"cannot compose maps of dimensions {self.outer.dim} and {self.inner.dim}")
        self.dim = self.inner.dim

    def apply(self, x):
        return self.outer.apply(self.inner.apply(x))

    def apply_rows(self, xs):
        return self.outer.apply_rows(self.inner.apply_rows(xs))


@dataclass(eq=False)
class Power(MapExpr):
    inner: MapExpr
    k: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise UsageError("power must be a nonnegative integer")
        self.k = int(self.k)
        self.dim = self.inner.dim

    def apply(self, x):
        for _ in range(self.k):
            x = self.inner.apply(x)
        return x

    def apply_rows(self, xs):
        for _ in range(self.k):
            xs = self.inner.apply_rows(xs)
        return xs


@dataclass(eq=False)
class Perturb(MapExpr):
    """``inner(x) + eps * psi(x) * u`` with ``psi`` the companion half-norm of ``space``."""

    inner: MapExpr
    eps: float
    u: np.ndarray
    space: SpaceSpec

    def __post_init__(self):
        if not self.eps > 0:
            raise UsageError("eps must be positive")
        self.u = as_point(self.u, self.inner.dim)
        if not in_cone(self.u):
            raise UsageError("perturbation direction u must lie in the cone")
        if self.space.dim != self.inner.dim:
            raise UsageError("space dimension does not match map dimension")
        self.dim = self.inner.dim

    def apply(self, x):
        return self.inner.apply(x) + (self.eps * _half_norm(self.space.norm_kind, x)) * self.u

    def apply_rows(self, xs):
        return self.inner.apply_rows(xs) + (self.eps * _half_norms(self.space.norm_kind, xs))[:, None] * self.u


@dataclass(eq=False)
class FunctionMap(MapExpr):
    """Wrap an arbitrary callable; nothing about it is assumed."""

    fn: Callable[[np.ndarray], np.ndarray]
    dim: int
    name: str = "custom"

    def apply(self, x):
        return np.asarray(self.fn(x), dtype=float)


def evaluate(m: MapExpr, x) -> np.ndarray:
    x = as_point(x, m.dim)
    if not in_cone(x):
        raise UsageError("homogeneous maps are only defined on the cone; x has a negative coordinate")
    return m.apply(x)


def as_matrix(m: MapExpr) -> np.ndarray | None:
    """Matrix of ``m`` if the expression is built from linear leaves only, else ``None``."""
    if isinstance(m, Linear):
        return m.matrix
    if isinstance(m, Scale):
        inner = as_matrix(m.inner)
        return None if inner is None else m.alpha * inner
    if isinstance(m, Compose):
        a, b = as_matrix(m.outer), as_matrix(m.inner)
        return None if a is None or b is None else a @ b
    if isinstance(m, Power):
        inner = as_matrix(m.inner)
        return None if inner is None else np.linalg.matrix_power(inner, m.k)
    return None


# -- operator norms -------------------------------------------------------


@dataclass(frozen=True)
class OpNormResult:
    value: float
    certified: bool
    witness: np.ndarray


def interval_indicators(n: int) -> np.ndarray:
    """All 0/1 vectors supported on a contiguous index range, one per row."""
    rows = []
    for a in range(n):
        for b in range(a, n):
            v = np.zeros(n)
            v[a : b + 1] = 1.0
            rows.append(v)
    return np.array(rows)


def _bv_linear_norm(a: np.ndarray) -> tuple[float, np.ndarray]:
    # Positive part of the bv unit ball is the convex hull of normalised interval
    # indicators (layer-cake decomposition), and x -> ||Ax||_bv is convex.
    cands = interval_indicators(a.shape[0])
    q = _row_norms("bv", cands @ a.T) / _row_norms("bv", cands)
    i = int(np.argmax(q))
    return float(q[i]), cands[i]


def linear_cone_norm(a: np.ndarray, kind: str) -> tuple[float, np.ndarray]:
    """Exact ``sup{||Ax|| : x >= 0, ||x|| <= 1}`` for a nonnegative matrix and its maximiser."""
    n = a.shape[0]
    if kind == "sup":
        return float(np.max(a.sum(axis=1))), np.ones(n)
    if kind == "sum":
        j = int(np.argmax(a.sum(axis=0)))
        return float(a[:, j].sum()), np.eye(n)[j]
    if kind == "euclid":
        _, s, vt = np.linalg.svd(a)
        w = np.abs(vt[0])
        return float(s[0]), w
    if kind == "bv":
        return _bv_linear_norm(a)
    raise UsageError(f"unknown norm kind {kind!r}")


def _probe_directions(n: int, rng: np.random.Generator, samples: int) -> np.ndarray:
    rows = [np.eye(n)]
    if n <= 12:
        bits = np.array(list(itertools.product([0.0, 1.0], repeat=n))[1:])
        rows.append(bits)
    else:
        rows.append(interval_indicators(n))
    if samples > 0:
        rows.append(rng.dirichlet(np.ones(n), size=samples))
    return np.vstack(rows)


def cone_operator_norm(m: MapExpr, space: SpaceSpec, samples: int = 2000, seed: int = 0) -> OpNormResult:
    """Cone operator norm ``sup{||B x|| : x >= 0, ||x|| <= 1}``.

    Certified when the norm is ``sup`` (the unit ball's positive part has the
    top element ``e``) or when the map is linear.  Otherwise the value is the
    best quotient found by sampling and local hill-climbing, which is only a
    lower bound.
    """
    if space.dim != m.dim:
        raise UsageError("space dimension does not match map dimension")
    n = m.dim
    kind = space.norm_kind
    if kind == "sup":
        e = np.ones(n)
        return OpNormResult(float(np.max(np.abs(m.apply(e)))), True, e)
    a = as_matrix(m)
    if a is not None:
        value, w = linear_cone_norm(a, kind)
        return OpNormResult(value, True, w)

    rng = np.random.default_rng(seed)
    dirs = _probe_directions(n, rng, samples)
    if kind == "bv":
        dirs = np.vstack([dirs, interval_indicators(n)])
    dirs = dirs / _row_norms(kind, dirs)[:, None]

    def quotient(x):
        return float(_row_norms(kind, m.apply(x)) / _row_norms(kind, x))

    vals = np.array([quotient(d) for d in dirs])
    order = np.argsort(-vals, kind="stable")[: min(5, len(vals))]
    best_val, best_x = float(vals[order[0]]), dirs[order[0]]
    for i in order:
        x, v = dirs[i], float(vals[i])
        step = 0.5
        for _ in range(60):
            trial = np.maximum(x * (1.0 + step * rng.standard_normal(n)) + 0.05 * step * rng.random(n), 0.0)
            if not np.any(trial > 0):
                continue
            tv = quotient(trial)
            if tv > v:
                x, v = trial, tv
            else:
                step *= 0.9
        if v > best_val:
            best_val, best_x = v, x
    best_x = best_x / _row_norms(kind, best_x)
    return OpNormResult(best_val, False, best_x)


# -- hypothesis checks ----------------------------------------------------


@dataclass(frozen=True)
class HypothesisReport:
    homogeneous: bool
    order_preserving: bool
    counterexample: tuple | None = None


def check_homogeneous_order_preserving(m: MapExpr, space: SpaceSpec, trials: int = 1000, seed: int = 0) -> HypothesisReport:
    """Randomised search for violations of ``B(a x) = a B(x)`` and ``x <= y => B x <= B y``."""
    n = m.dim
    rng = np.random.default_rng(seed)
    rtol = 1e-9
    homogeneous = order_preserving = True
    counter = None

    z = m.apply(np.zeros(n))
    if np.any(np.abs(z) > 0):
        homogeneous = False
        counter = ("homogeneity", np.zeros(n), 0.0)

    if trials > 0:
        scale = 10.0 ** rng.uniform(-2, 2, trials)[:, None]
        x = rng.random((trials, n)) * scale * (rng.random((trials, n)) > 0.2)
        y = x + rng.random((trials, n)) * scale * (rng.random((trials, n)) > 0.5)
        pick = rng.integers(0, 3, trials)
        alpha = np.choose(pick, [np.zeros(trials), rng.uniform(0, 5, trials), 10.0 ** rng.uniform(-3, 3, trials)])
        bx, by = m.apply_rows(x), m.apply_rows(y)
        lhs, rhs = m.apply_rows(alpha[:, None] * x), alpha[:, None] * bx
        big = np.maximum(1.0, np.maximum(np.max(np.abs(lhs), axis=1), np.max(np.abs(rhs), axis=1)))
        bad_h = np.max(np.abs(lhs - rhs), axis=1) > rtol * big
        bad_o = np.min(by - bx, axis=1) < -rtol * np.maximum(1.0, np.max(np.abs(by), axis=1))
        first_h = int(np.argmax(bad_h)) if bad_h.any() else trials
        first_o = int(np.argmax(bad_o)) if bad_o.any() else trials
        if homogeneous and first_h < trials:
            homogeneous = False
        if first_o < trials:
            order_preserving = False
        if counter is None and min(first_h, first_o) < trials:
            i = min(first_h, first_o)
            counter = ("homogeneity", x[i], float(alpha[i])) if first_h <= first_o else ("order", x[i], y[i])
    return HypothesisReport(homogeneous, order_preserving, counter)
