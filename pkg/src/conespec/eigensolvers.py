"""Eigenvector and lower-eigenvector solvers for homogeneous order-preserving maps."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, UsageError
from .maps import MapExpr, Perturb, as_matrix
from .ordered_space import SpaceSpec, _half_norm, _row_norms, as_point, in_cone

CONVERGED = "converged"
MAX_ITER = "max_iter"
DEGENERATE_ZERO = "degenerate_zero"


@dataclass
class SolveResult:
    r: float
    v: np.ndarray
    residual: float
    iterations: int
    status: str
    trace: list = field(default_factory=list)
    certificate: tuple | None = None

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED


def _sharp(kind: str, d: np.ndarray) -> float:
    return max(_half_norm(kind, d), _half_norm(kind, -d))


def _start(m: MapExpr, x0, what="x0") -> np.ndarray:
    x0 = as_point(x0, m.dim)
    if not in_cone(x0) or not np.any(x0 > 0):
        raise UsageError(f"{what} must be a nonzero point of the cone")
    return x0


def lower_deficit(m: MapExpr, v: np.ndarray, r: float, kind: str = "sup") -> float:
    """How far ``B(v) >= r v`` is from holding, relative to ``||v||``."""
    gap = r * v - m.apply(v)
    return float(max(0.0, np.max(gap)) / _row_norms(kind, v))


def power_iterate(m: MapExpr, space: SpaceSpec, x0, tol: float = 1e-12, max_iter: int = 10_000) -> SolveResult:
    """Normalised iteration ``y <- B(y) / ||B(y)||``.

    Stops when both the step drift (companion norm) and the eigen-residual
    fall below ``tol``.  Periodic orbits of period up to 8 are detected and
    replaced by the weighted cycle average, which is an eigenvector for
    linear maps and a good restart otherwise.
    """
    kind = space.norm_kind
    x0 = _start(m, x0)
    y = x0 / _row_norms(kind, x0)
    history: deque[np.ndarray] = deque(maxlen=8)
    restarts = 0
    r = float("nan")
    residual = float("inf")
    for it in range(1, max_iter + 1):
        z = m.apply(y)
        s = float(_row_norms(kind, z))
        if s == 0.0:
            return SolveResult(0.0, y, 0.0, it, DEGENERATE_ZERO)
        y_new = z / s
        r = s
        drift = _sharp(kind, y_new - y)
        if drift < tol:
            z2 = m.apply(y_new)
            r2 = float(_row_norms(kind, z2))
            residual = float(_row_norms(kind, z2 - r2 * y_new))
            if residual < tol * max(1.0, r2):
                return SolveResult(r2, y_new, residual, it, CONVERGED)
        elif restarts < 5:
            for p in range(2, len(history) + 1):
                if _sharp(kind, y_new - history[-p]) < tol:
                    y_new = _cycle_average(m, y_new, p, kind)
                    history.clear()
                    restarts += 1
                    break
        history.append(y_new)
        y = y_new
    z = m.apply(y)
    r = float(_row_norms(kind, z))
    residual = float(_row_norms(kind, z - r * y))
    return SolveResult(r, y, residual, max_iter, MAX_ITER)


def _cycle_average(m: MapExpr, w: np.ndarray, p: int, kind: str) -> np.ndarray:
    terms = [w]
    for _ in range(p):
        terms.append(m.apply(terms[-1]))
    growth = float(_row_norms(kind, terms[p])) / float(_row_norms(kind, w))
    if growth <= 0:
        return w
    rate = growth ** (1.0 / p)
    v = sum(terms[j] * rate ** (-j) for j in range(p))
    return v / _row_norms(kind, v)


def cyclic_sum_eigenvector(m: MapExpr, w, k: int, r: float, tol: float = 1e-10) -> SolveResult:
    """Turn a ``k``-periodic eigenvector of a positive linear map into an eigenvector.

    Given ``B^k w = r^k w`` returns ``v = sum_{j<k} r^-j B^j w`` (sup-normalised),
    which satisfies ``B v = r v``.
    """
    if as_matrix(m) is None:
        raise UsageError("cyclic_sum_eigenvector needs a positively linear map")
    if not r > 0 or k < 1:
        raise UsageError("r must be positive and k >= 1")
    w = _start(m, w, "w")
    terms = [w]
    for _ in range(k):
        terms.append(m.apply(terms[-1]))
    scale = r**k * float(np.max(np.abs(w)))
    if np.max(np.abs(terms[k] - r**k * w)) > tol * scale:
        raise NumericalError(f"not an {k}-periodic eigenvector: B^{k}(w) differs from r^{k} w")
    v = sum(terms[j] * r ** (-j) for j in range(k))
    v = v / np.max(v)
    residual = float(np.max(np.abs(m.apply(v) - r * v)))
    return SolveResult(r, v, residual, k, CONVERGED)


def sup_lower_eigenvector(m: MapExpr, w, k: int, r: float, tol: float = 1e-10) -> SolveResult:
    """Lower eigenvector ``B v >= r v`` from ``B^k w >= r^k w`` via ``v = max_j r^-j B^j w``."""
    if not r > 0 or k < 1:
        raise UsageError("r must be positive and k >= 1")
    w = _start(m, w, "w")
    terms = [w]
    for _ in range(k):
        terms.append(m.apply(terms[-1]))
    scale = r**k * float(np.max(w))
    if np.min(terms[k] - r**k * w) < -tol * scale:
        raise NumericalError(f"precondition fails: B^{k}(w) >= r^{k} w does not hold")
    v = np.max(np.stack([terms[j] * r ** (-j) for j in range(k)]), axis=0)
    v = v / np.max(v)
    return SolveResult(r, v, lower_deficit(m, v, r), k, CONVERGED)


def meet_iteration_lower(m: MapExpr, space: SpaceSpec, u, r: float, K: int = 100, collapse_rtol: float = 1e-6) -> SolveResult:
    """Decreasing meet iteration for ``C = B / r``.

    ``x_0 = u``, ``x_k = min(C(x_{k-1}) + 2^-k u, u)``.  A nonzero limit is a
    lower eigenvector ``B(x) >= r x``; collapse to zero means ``r`` exceeds
    the upper local Collatz-Wielandt radius at ``u``.  Collapse is declared
    when the companion norm of ``x_K`` drops below ``collapse_rtol`` times
    that of ``u``, or earlier with certainty as soon as some iterate ``x``
    satisfies ``C(x) <= theta x`` with ``theta < 1`` (every iterate is
    comparable to ``u``).
    """
    kind = space.norm_kind
    u = as_point(u, m.dim)
    if not np.all(u > 0):
        raise UsageError("meet iteration needs a strictly positive u")
    if not r > 0:
        raise UsageError("r must be positive")
    x = u.copy()
    slack = 8 * np.finfo(float).eps * float(np.max(u))
    certified_collapse = None
    trace = []
    for k in range(1, K + 1):
        cx = m.apply(x) / r
        if certified_collapse is None:
            theta = float(np.max(cx / x))
            if theta < 1.0 - 1e-12:
                certified_collapse = (k - 1, theta)
        x_new = np.minimum(cx + 2.0 ** (-k) * u, u)
        if np.any(x_new > x + slack):
            raise NumericalError(f"meet iteration is not decreasing at step {k}; is the map order-preserving?")
        x = x_new
        trace.append((k, _sharp(kind, x)))
    size = _sharp(kind, x)
    if certified_collapse is not None or size < collapse_rtol * _sharp(kind, u):
        return SolveResult(r, x, float("nan"), K, DEGENERATE_ZERO, trace, certified_collapse)
    v = x / _row_norms(kind, x)
    return SolveResult(r, v, lower_deficit(m, v, r, kind), K, CONVERGED, trace)


def eta_via_meet_bisection(m: MapExpr, space: SpaceSpec, u, r_lo: float, r_hi: float, tol_r: float = 1e-6, K: int = 200) -> float:
    """Locate the survive/collapse threshold of the meet iteration by bisection."""
    if not 0 < r_lo < r_hi:
        raise UsageError("need 0 < r_lo < r_hi")

    def survives(r):
        return meet_iteration_lower(m, space, u, r, K).status == CONVERGED

    if not survives(r_lo):
        raise NumericalError(f"invalid bracket: meet iteration collapses at r_lo={r_lo}")
    if survives(r_hi):
        raise NumericalError(f"invalid bracket: meet iteration survives at r_hi={r_hi}")
    lo, hi = r_lo, r_hi
    while hi - lo > tol_r:
        mid = 0.5 * (lo + hi)
        if survives(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def epsilon_homotopy(m: MapExpr, space: SpaceSpec, u, eps0: float = 0.1, steps: int = 20, tol: float = 1e-12, max_iter: int = 20_000) -> SolveResult:
    """Eigenpairs of ``B_eps(x) = B(x) + eps psi(x) u`` along ``eps_k = eps0 2^-k``.

    Each solve is warm-started from the previous eigenvector.  The trace
    holds ``(k, eps_k, r_k, residual_k)``; ``r_k`` decreases with ``eps``.
    """
    u = as_point(u, m.dim)
    if not np.all(u > 0):
        raise UsageError("homotopy direction u must be strictly positive")
    if not eps0 > 0:
        raise UsageError("eps0 must be positive")
    v = u.copy()
    trace = []
    res = None
    iters = 0
    for k in range(steps + 1):
        eps = eps0 * 2.0 ** (-k)
        res = power_iterate(Perturb(m, eps, u, space), space, v, tol, max_iter)
        iters += res.iterations
        trace.append((k, eps, res.r, res.residual))
        if res.status != CONVERGED:
            return SolveResult(res.r, res.v, res.residual, iters, MAX_ITER, trace)
        v = res.v
    return SolveResult(res.r, res.v, res.residual, iters, CONVERGED, trace)


def trace_csv(trace) -> str:
    lines = ["k,epsilon,r,residual"]
    for k, eps, r, resid in trace:
        lines.append(f"{k},{eps:.17g},{r:.17g},{resid:.17g}")
    return "\n".join(lines) + "\n"
