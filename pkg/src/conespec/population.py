"""Two-sex and rank-structured population models and their diagnostics."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import NumericalError, UsageError
from .maps import MapExpr, Rank, TwoSex, as_matrix, linear_cone_norm
from .ordered_space import SpaceSpec, _row_norms, as_point, companion_norm, in_cone

# -- model parameters -----------------------------------------------------


@dataclass
class RankConfig:
    """Parameters of the rank-structured model.

    ``q`` (length n) are survival-in-rank rates, ``p`` (length n-1) promotion
    rates and ``beta`` the dense ``n x n`` fertility matrix (0-based).
    ``s > 0`` turns on the saturating law: all parameters are divided by
    ``1 + s ||x||_1``.
    """

    q: np.ndarray
    p: np.ndarray
    beta: np.ndarray
    s: float = 0.0

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float).ravel()
        self.p = np.asarray(self.p, dtype=float).ravel()
        self.beta = np.asarray(self.beta, dtype=float)
        n = self.q.size
        if n < 1 or self.p.size != n - 1 or self.beta.shape != (n, n):
            raise UsageError(f"inconsistent rank config: len(q)={n}, len(p)={self.p.size}, beta {self.beta.shape}")
        for name, arr in (("q", self.q), ("p", self.p), ("beta", self.beta), ("s", [self.s])):
            if np.any(np.asarray(arr) < 0) or not np.all(np.isfinite(arr)):
                raise UsageError(f"{name} must be finite and nonnegative")

    @property
    def n(self) -> int:
        return self.q.size

    @classmethod
    def from_triples(cls, q, p, triples, s: float = 0.0) -> "RankConfig":
        """Build from 1-based ``(j, k, beta_jk)`` triples."""
        q = np.asarray(q, dtype=float)
        beta = np.zeros((q.size, q.size))
        for j, k, val in triples:
            if not (1 <= j <= q.size and 1 <= k <= q.size):
                raise UsageError(f"beta index ({j}, {k}) outside 1..{q.size}")
            beta[int(j) - 1, int(k) - 1] += float(val)
        return cls(q, p, beta, s)

    def triples(self) -> list:
        j, k = np.nonzero(self.beta)
        return [[int(a) + 1, int(b) + 1, float(self.beta[a, b])] for a, b in zip(j, k)]

    def rank_map(self) -> Rank:
        return Rank(self.q, self.p, self.beta)


@dataclass(frozen=True)
class TwoSexParams:
    p_f: float
    p_m: float
    b_f: float
    b_m: float

    def __post_init__(self):
        if min(self.p_f, self.p_m, self.b_f, self.b_m) < 0:
            raise UsageError("two-sex parameters must be nonnegative")

    def map(self) -> TwoSex:
        return TwoSex(self.p_f, self.p_m, self.b_f, self.b_m)


def reference_rank_config() -> RankConfig:
    """Five-rank configuration used throughout the tests and demos."""
    return RankConfig.from_triples(
        q=[0.5, 0.3, 0.2, 0.1, 0.05],
        p=[0.6, 0.4, 0.2, 0.1],
        triples=[(1, 1, 0.4), (1, 2, 0.3), (2, 1, 0.3)],
    )


# -- rank model -----------------------------------------------------------


class RankModel(NamedTuple):
    map: Rank
    u: np.ndarray
    c: float


def build_rank_model(cfg: RankConfig) -> RankModel:
    """Rank map, its uniform order bound ``u`` and the constant ``c`` with ``B(x) <= c ||x|| u``.

    ``u_1 = 1`` and ``u_j = p_{j-1} + q_j``; any norm dominating the sup
    norm on the cone works for ``||x||``.
    """
    if cfg.s > 0:
        raise UsageError("saturating configs (s > 0) are not homogeneous; use saturating_semiflow")
    u = np.concatenate(([1.0], cfg.p + cfg.q[1:]))
    c = max(cfg.q[0] + cfg.beta.sum(), 1.0)
    return RankModel(cfg.rank_map(), u, float(c))


def rank_cw_formulas(cfg: RankConfig, m: int) -> tuple[float, float]:
    """Closed-form lower CW numbers at the prefix indicator ``x^m`` and coordinate vector ``e^m``."""
    if not 1 <= m <= cfg.n:
        raise UsageError(f"m must lie in 1..{cfg.n}")
    q, p, beta = cfg.q, cfg.p, cfg.beta
    if m == 1:
        v = q[0] + beta[0, 0]
        return float(v), float(v)
    births = q[0] + beta[:m, :m].sum()
    moves = min(max(p[j - 2], q[j - 1]) for j in range(2, m + 1))
    return float(min(births, moves)), float(q[m - 1])


def rank_positivity_conditions(cfg: RankConfig) -> tuple[bool, bool]:
    """Two sufficient conditions for a positive lower CW bound (at least one is necessary)."""
    q, p, beta = cfg.q, cfg.p, cfg.beta
    cond1 = bool(q[0] + beta[0, 0] > 0 or np.any(q[1:] > 0))
    # reach[m-1]: p_1..p_{m-1} all positive
    reach = np.concatenate(([True], np.cumprod(p > 0).astype(bool)))
    cond2 = False
    for j, k in zip(*np.nonzero(beta > 0)):
        if reach[max(j, k)]:
            cond2 = True
            break
    return cond1, cond2


# -- two-sex model --------------------------------------------------------


class TwoSexEigen(NamedTuple):
    lam: float
    eigenvector: np.ndarray  # (f, m)
    interior: bool


def twosex_closed_form(params: TwoSexParams) -> TwoSexEigen:
    """Mating eigenvalue and its normalised eigenvector ``f + m = 1``."""
    pf, pm, bf, bm = params.p_f, params.p_m, params.b_f, params.b_m
    total = bf + bm
    if total == 0:
        lam = max(pf, pm)
        vec = np.array([1.0, 0.0]) if pf >= pm else np.array([0.0, 1.0])
        return TwoSexEigen(float(lam), vec, False)
    lam = (bf * bm + bm * pf + bf * pm) / total
    m = (bm + pm - pf) / total
    f = 1.0 - m
    return TwoSexEigen(float(lam), np.array([f, m]), bool(lam > pf and lam > pm))


# -- orbits ---------------------------------------------------------------


@dataclass
class Trajectory:
    norms: np.ndarray
    log_norms: np.ndarray
    log_growth: np.ndarray
    final: np.ndarray

    def to_csv(self) -> str:
        lines = ["step,norm,log_norm"]
        for i, (a, b) in enumerate(zip(self.norms, self.log_norms)):
            lines.append(f"{i},{a:.17g},{b:.17g}")
        return "\n".join(lines) + "\n"


def orbit_simulate(fn: MapExpr | Callable, x0, steps: int, space: SpaceSpec | None = None, normalize: bool = False) -> Trajectory:
    """Forward orbit ``x0, F(x0), F^2(x0), ...`` with norms tracked in log space.

    ``norms[i]`` and ``log_norms[i]`` refer to ``F^i(x0)``.  With
    ``normalize=True`` the state is rescaled to unit norm every step (only
    meaningful for homogeneous maps), so arbitrarily fast growth or decay
    stays representable.
    """
    x = as_point(x0)
    if not in_cone(x):
        raise UsageError("orbit start must lie in the cone")
    apply = fn.apply if isinstance(fn, MapExpr) else fn
    kind = (space or SpaceSpec(x.size, "sum")).norm_kind
    log_norms = np.full(steps + 1, -np.inf)
    nrm = float(_row_norms(kind, x))
    log_norms[0] = np.log(nrm) if nrm > 0 else -np.inf
    if normalize and nrm > 0:
        x = x / nrm
    for i in range(1, steps + 1):
        if not np.isfinite(log_norms[i - 1]):
            x = np.zeros_like(x)
            continue
        with np.errstate(over="ignore"):
            x = np.asarray(apply(x), dtype=float)
        if not np.all(np.isfinite(x)):
            raise NumericalError(f"orbit overflowed at step {i}")
        nrm = float(_row_norms(kind, x))
        if nrm == 0:
            continue
        if normalize:
            log_norms[i] = log_norms[i - 1] + np.log(nrm)
            x = x / nrm
        else:
            log_norms[i] = np.log(nrm)
    with np.errstate(invalid="ignore"):
        growth = np.diff(log_norms)
    growth[np.isneginf(log_norms[1:])] = -np.inf
    with np.errstate(over="ignore"):
        norms = np.exp(log_norms)
    return Trajectory(norms, log_norms, growth, x)


# -- dissipativity --------------------------------------------------------


def spectral_radius_estimate(a: np.ndarray, steps: int = 2000) -> float:
    """Power-method estimate of the spectral radius of a nonnegative matrix."""
    a = np.asarray(a, dtype=float)
    x = np.ones(a.shape[0])
    logs = []
    for _ in range(steps):
        x = a @ x
        s = float(np.max(x))
        if s == 0:
            return 0.0
        logs.append(np.log(s))
        x = x / s
    return float(np.exp(np.mean(logs[steps // 2 :])))


def companion_linear_norm(a: np.ndarray, kind: str) -> float:
    """Cone operator norm of a positive matrix with respect to the companion norm."""
    # companion norm on the orthant: ambient norm for lattice norms, sup norm for bv
    return linear_cone_norm(a, "sup" if kind == "bv" else kind)[0]


@dataclass
class Renorm:
    """Equivalent norm ``||x||~ = sum_{k<=m} r^-k #A^k x#`` under which ``||A||~ <= r``."""

    matrix: np.ndarray
    space: SpaceSpec
    r: float
    m: int
    weights: np.ndarray

    def __call__(self, x) -> float:
        x = as_point(x, self.space.dim)
        total, y = 0.0, x
        for w in self.weights:
            total += w * companion_norm(self.space, y)
            y = self.matrix @ y
        return total

    def cone_equivalence(self) -> float:
        """``W`` with ``||x||~ <= W #x#`` on the cone."""
        total, p = 0.0, np.eye(self.matrix.shape[0])
        for w in self.weights:
            total += w * companion_linear_norm(p, self.space.norm_kind)
            p = self.matrix @ p
        return total


def contraction_renorm(A: MapExpr | np.ndarray, space: SpaceSpec, r: float, samples: int = 1000, seed: int = 0, max_m: int = 200) -> Renorm:
    """Renorming that makes a positive linear map with spectral radius ``< r`` an ``r``-contraction.

    ``m`` is the smallest index with ``#A^{m+1}#_+ < r^{m+1}``; the weights
    are ``r^-k`` for ``k = 0..m``.  The contraction inequality is verified on
    ``samples`` random cone vectors and a failure raises.
    """
    a = A if isinstance(A, np.ndarray) else as_matrix(A)
    if a is None:
        raise UsageError("contraction_renorm needs a linear map")
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise UsageError("matrix must be nonnegative")
    if not 0 < r < 1:
        raise UsageError("r must lie in (0, 1)")
    rho = spectral_radius_estimate(a)
    if rho >= r:
        raise UsageError(f"r={r} does not exceed the spectral radius estimate {rho}")
    kind = space.norm_kind
    p = a.copy()
    for m in range(max_m + 1):
        if companion_linear_norm(p, kind) < r ** (m + 1):
            break
        p = a @ p
    else:
        raise NumericalError("r too close to spectral radius: no m <= 200 found")
    ren = Renorm(a, space, r, m, r ** -np.arange(m + 1.0))

    rng = np.random.default_rng(seed)
    n = a.shape[0]
    for _ in range(samples):
        x = rng.random(n) * (rng.random(n) > 0.3) * 10.0 ** rng.uniform(-2, 2)
        lhs, rhs = ren(a @ x), r * ren(x)
        if lhs > rhs * (1 + 1e-12) + 1e-300:
            raise NumericalError(f"renorm contraction fails at x={x}: {lhs} > {rhs}")
    return ren


def saturating_semiflow(cfg: RankConfig) -> Callable[[np.ndarray], np.ndarray]:
    """``F(x) = B(x) / (1 + s ||x||_1)``: every parameter divided by the saturation factor."""
    b = cfg.rank_map()
    s = cfg.s

    def F(x):
        return b.apply(x) / (1.0 + s * float(np.sum(x)))

    return F


def dissipation_matrix(cfg: RankConfig, eps: float, c: float, beta_tilde=None) -> np.ndarray:
    """Linear majorant ``A`` with ``A_1 = eps x_1 + sum_{jk} bt_jk x_j``, ``A_j = eps (x_{j-1} + x_j)``.

    ``beta_tilde`` defaults to the sup of the saturated fertilities over
    ``||x||_1 >= c``, i.e. ``beta / (1 + s c)``.
    """
    n = cfg.n
    bt = cfg.beta / (1.0 + cfg.s * c) if beta_tilde is None else np.asarray(beta_tilde, dtype=float)
    a = np.zeros((n, n))
    a[0, :] = bt.sum(axis=1)
    a[0, 0] += eps
    for j in range(1, n):
        a[j, j - 1] = eps
        a[j, j] = eps
    return a


@dataclass
class DissipativityReport:
    premise_ok: bool
    premise_witness: np.ndarray
    c_tilde: float
    contraction_ok: bool
    spectral_radius: float
    renorm_weights: list
    orbit_limsup: np.ndarray
    bound_c_hat: float
    warnings: list = field(default_factory=list)

    @property
    def conclusion_ok(self) -> bool:
        return bool(np.all(self.orbit_limsup <= self.bound_c_hat))

    def to_csv(self) -> str:
        lines = ["seed,orbit_limsup,bound_c_hat,premise_ok,contraction_ok"]
        for i, v in enumerate(self.orbit_limsup):
            lines.append(f"{i},{v:.17g},{self.bound_c_hat:.17g},{int(self.premise_ok)},{int(self.contraction_ok)}")
        return "\n".join(lines) + "\n"


def dissipativity_check(
    cfg: RankConfig,
    eps: float,
    c: float,
    beta_tilde=None,
    seeds: int = 50,
    steps: int = 200,
    norm_kind: str = "sum",
    x0_max: float = 100.0,
    samples: int = 200,
    seed: int = 0,
) -> DissipativityReport:
    """Numerical check of point-dissipativity for the saturating rank model.

    The premise ``F(x) <= A x + y`` with bounded ``y`` for ``||x|| >= c`` is
    sampled on rays at radii ``c, 10c, ..., 10^4 c``; it is accepted when the
    defect ``y = (F(x) - A x)^+`` does not grow beyond its size at radius
    ``c``.  With ``rho(A) < r < 1`` and the contraction renorming of weight
    ``W``, every orbit eventually stays below
    ``c_hat = max(W c_tilde / (1 - r), W K c)`` where ``K`` bounds
    ``||F(x)|| / ||x||``.
    """
    if norm_kind not in ("sup", "sum", "euclid"):
        raise UsageError("dissipativity needs a normal cone: use sup, sum or euclid")
    n = cfg.n
    space = SpaceSpec(n, norm_kind)
    warnings = []
    limit = {"sup": 0.5, "sum": 1.0 / 3.0}.get(norm_kind)
    if limit is not None and eps >= limit:
        warnings.append(f"eps={eps} is not below {limit:.4g}; the majorant may fail to contract")

    F = saturating_semiflow(cfg)
    a = dissipation_matrix(cfg, eps, c, beta_tilde)
    rng = np.random.default_rng(seed)

    dirs = np.vstack([np.eye(n), np.ones((1, n)), rng.dirichlet(np.ones(n), size=samples)])
    dirs = dirs / _row_norms(norm_kind, dirs)[:, None]
    radii = c * 10.0 ** np.arange(5)
    defect = np.zeros((len(radii), len(dirs)))
    for i, R in enumerate(radii):
        for j, d in enumerate(dirs):
            x = R * d
            defect[i, j] = _row_norms(norm_kind, np.maximum(F(x) - a @ x, 0.0))
    c_tilde = float(defect.max())
    i, j = np.unravel_index(int(np.argmax(defect)), defect.shape)
    witness = radii[i] * dirs[j]
    premise_ok = bool(defect[-1].max() <= defect[0].max() * (1 + 1e-9) + 1e-12)

    rho = spectral_radius_estimate(a)
    contraction_ok = rho < 1
    weights: list = []
    c_hat = float("inf")
    if contraction_ok:
        r = 0.5 * (rho + 1.0)
        ren = contraction_renorm(a, space, r, samples=200, seed=seed)
        weights = [float(w) for w in ren.weights]
        W = ren.cone_equivalence()
        growth = np.concatenate(([cfg.q[0] + cfg.beta.sum()], cfg.p + cfg.q[1:]))
        K = float(_row_norms(norm_kind, growth))
        if premise_ok:
            c_hat = max(W * c_tilde / (1.0 - r), W * K * c)

    limsups = np.empty(seeds)
    half = max(1, steps // 2)
    for k in range(seeds):
        x0 = rng.dirichlet(np.ones(n)) * rng.uniform(0.0, x0_max)
        try:
            traj = orbit_simulate(F, x0, steps, space)
        except NumericalError:
            limsups[k] = np.inf
            continue
        limsups[k] = float(np.max(traj.norms[-half:]))
    return DissipativityReport(premise_ok, witness, c_tilde, contraction_ok, rho, weights, limsups, c_hat, warnings)
