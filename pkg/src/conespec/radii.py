"""Certified enclosures of the cone spectral radius.

Lower bounds come from lower Collatz-Wielandt numbers ``[B^n]_x^{1/n}`` at
any nonzero cone point ``x``; upper bounds from upper Collatz-Wielandt
numbers ``||B^n||_u^{1/n}`` at strictly positive ``u`` and from roots of
certified cone operator norms.  Every individual ``n`` yields a valid
bound, so finite horizons never weaken a certificate, they only make it
less tight.  Orbits are renormalised every step and tracked in log space.
"""
from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from itertools import repeat
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .eigensolvers import power_iterate
from .errors import UsageError
from .maps import MapExpr, Power, as_matrix, check_homogeneous_order_preserving, cone_operator_norm, linear_cone_norm
from .ordered_space import SpaceSpec, _row_norms, as_point, in_cone, lower_gauge, u_norm
from .population import orbit_simulate


class CWPair(NamedTuple):
    lower: float
    upper: float


def _probe(m: MapExpr, x) -> np.ndarray:
    x = as_point(x, m.dim)
    if not in_cone(x) or not np.any(x > 0):
        raise UsageError("probe must be a nonzero point of the cone")
    return x


def cw_numbers(m: MapExpr, x) -> CWPair:
    """Lower and upper Collatz-Wielandt numbers of ``m`` at ``x``."""
    x = _probe(m, x)
    y = m.apply(x)
    return CWPair(lower_gauge(y, x), u_norm(y, x))


def _scaled_orbit(m: MapExpr, x: np.ndarray, N: int):
    """Yield ``(n, log_scale, y)`` with ``B^n x = exp(log_scale) * y`` and ``max(y) = 1`` (or ``y = 0``)."""
    y, log_scale = x, 0.0
    for n in range(1, N + 1):
        if log_scale == -math.inf:
            yield n, log_scale, y
            continue
        y = m.apply(y)
        s = float(np.max(y))
        if s > 0:
            log_scale += math.log(s)
            y = y / s
        else:
            log_scale = -math.inf
            y = np.zeros_like(y)
        yield n, log_scale, y


def _cw_roots(m: MapExpr, x: np.ndarray, N: int) -> tuple[np.ndarray, np.ndarray]:
    supp = x > 0
    lower = np.empty(N)
    upper = np.empty(N)
    for n, ls, y in _scaled_orbit(m, x, N):
        if ls == -math.inf:
            lower[n - 1] = upper[n - 1] = 0.0
            continue
        ratios = y[supp] / x[supp]
        lo = float(np.min(ratios))
        lower[n - 1] = math.exp((ls + math.log(lo)) / n) if lo > 0 else 0.0
        if np.any(y[~supp] > 0):
            upper[n - 1] = math.inf
        else:
            hi = float(np.max(ratios))
            upper[n - 1] = math.exp((ls + math.log(hi)) / n) if hi > 0 else 0.0
    return lower, upper


def cw_root_table(m: MapExpr, x, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-horizon ``[B^n]_x^{1/n}`` and ``||B^n||_x^{1/n}`` for ``n = 1..N``."""
    return _cw_roots(m, _probe(m, x), N)


def eta_lower(m: MapExpr, x, N: int) -> float:
    """``max_{n<=N} [B^n]_x^{1/n}``: a certified lower bound of the cone spectral radius."""
    return float(np.max(cw_root_table(m, x, N)[0]))


def eta_upper(m: MapExpr, u, N: int) -> float:
    """``min_{n<=N} ||B^n||_u^{1/n}``.

    A certified upper bound of the cone spectral radius when every
    coordinate of ``u`` is positive; for ``u`` on the boundary of the cone
    it only bounds the growth along ``u``.
    """
    return float(np.min(cw_root_table(m, u, N)[1]))


class GammaEstimate(NamedTuple):
    value: float
    log_trace: np.ndarray


def local_radius_gamma(m: MapExpr, space: SpaceSpec, x, N: int) -> GammaEstimate:
    """Finite-horizon estimate of ``limsup ||B^n x||^{1/n}``.

    The value is ``exp`` of the mean log-growth over the last ``ceil(N/2)``
    renormalised steps; ``0`` when the orbit dies.
    """
    x = as_point(x, m.dim)
    traj = orbit_simulate(m, x, N, space, normalize=True)
    inc = traj.log_growth
    tail = inc[-math.ceil(N / 2) :]
    if np.any(np.isneginf(inc)) or not np.isfinite(traj.log_norms[0]):
        return GammaEstimate(0.0, inc)
    return GammaEstimate(float(np.exp(np.mean(tail))), inc)


class RootTable(NamedTuple):
    values: np.ndarray
    certified: bool


def _linear_power_roots(a: np.ndarray, kind: str, N: int) -> np.ndarray:
    out = np.empty(N)
    p, log_scale = np.eye(a.shape[0]), 0.0
    for n in range(1, N + 1):
        p = a @ p
        s = float(np.max(p))
        if s == 0:
            out[n - 1 :] = 0.0
            break
        log_scale += math.log(s)
        p = p / s
        val = linear_cone_norm(p, kind)[0]
        out[n - 1] = math.exp((log_scale + math.log(val)) / n) if val > 0 else 0.0
    return out


def _top_element_roots(m: MapExpr, N: int) -> np.ndarray:
    # ||B^n||_+ = ||B^n e||_inf when the positive unit ball has top element e
    out = np.empty(N)
    for n, ls, y in _scaled_orbit(m, np.ones(m.dim), N):
        out[n - 1] = 0.0 if ls == -math.inf else math.exp(ls / n)
    return out


def opnorm_radius(m: MapExpr, space: SpaceSpec, N: int, samples: int = 200, seed: int = 0) -> RootTable:
    """``||B^n||_+^{1/n}`` for ``n = 1..N``; the running minimum bounds the cone spectral radius from above.

    Certified for the sup norm and for linear maps; for other combinations
    the entries are sampled lower estimates of the operator norms and the
    table is flagged as heuristic.
    """
    if space.dim != m.dim:
        raise UsageError("space dimension does not match map dimension")
    if space.norm_kind == "sup":
        return RootTable(_top_element_roots(m, N), True)
    a = as_matrix(m)
    if a is not None:
        return RootTable(_linear_power_roots(a, space.norm_kind, N), True)
    vals = np.array([cone_operator_norm(Power(m, n), space, samples, seed).value ** (1.0 / n) for n in range(1, N + 1)])
    return RootTable(vals, False)


def companion_opnorm_radius(m: MapExpr, space: SpaceSpec, N: int, samples: int = 200, seed: int = 0) -> RootTable:
    """Same as :func:`opnorm_radius` with the companion norm in place of the ambient norm."""
    if space.norm_kind == "bv":
        # companion norm is the sup norm, whose positive unit ball has top element e
        return RootTable(_top_element_roots(m, N), True)
    # lattice norms: companion norm equals the ambient norm on the cone
    return opnorm_radius(m, space, N, samples, seed)


# -- report ---------------------------------------------------------------

KINDS = ("lower", "upper", "gamma", "opnorm", "comp_lower", "comp_upper")


class Row(NamedTuple):
    n: int
    probe_id: str
    kind: str
    value: float
    certified: bool


@dataclass
class RadiusReport:
    horizon: int
    rows: list
    probes: dict
    enclosure: tuple
    lower_certified: bool
    upper_certified: bool
    hypotheses_ok: bool
    notes: list = field(default_factory=list)

    def table(self, kind: str) -> dict:
        """``{probe_id: array over n}`` (or ``{"": ...}`` for probe-free kinds)."""
        out: dict = {}
        for row in self.rows:
            if row.kind == kind:
                out.setdefault(row.probe_id, {})[row.n] = row.value
        return {pid: np.array([d[n] for n in sorted(d)]) for pid, d in out.items()}

    @property
    def lower_table(self):
        return self.table("lower")

    @property
    def upper_table(self):
        return self.table("upper")

    @property
    def gamma_estimates(self):
        return {pid: float(v[-1]) for pid, v in self.table("gamma").items()}

    @property
    def opnorm_roots(self):
        return self.table("opnorm").get("", np.array([]))

    def certified_values(self, side: str) -> np.ndarray:
        kinds = ("lower",) if side == "lower" else ("upper", "opnorm", "comp_upper")
        return np.array([r.value for r in self.rows if r.certified and r.kind in kinds])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("n,probe_id,kind,value,certified\n")
        for r in self.rows:
            buf.write(f"{r.n},{r.probe_id},{r.kind},{r.value:.17g},{int(r.certified)}\n")
        return buf.getvalue()

    def summary(self) -> str:
        lo, hi = self.enclosure
        lines = []
        if self.lower_certified and self.upper_certified:
            lo_s = math.floor(lo * 1e6) / 1e6
            hi_s = math.ceil(hi * 1e6) / 1e6
            lines.append(f"r+ ∈ [{lo_s:.6f}, {hi_s:.6f}] certified")
        elif self.lower_certified:
            lines.append(f"r+ ≥ {math.floor(lo * 1e6) / 1e6:.6f} certified; no upper certificate")
        else:
            lines.append("no certified enclosure (map failed the homogeneity/order checks)")
        best_lo = max((r for r in self.rows if r.kind == "lower"), key=lambda r: r.value, default=None)
        best_hi = min((r for r in self.rows if r.kind in ("upper", "opnorm", "comp_upper") and r.certified),
                      key=lambda r: r.value, default=None)
        if best_lo is not None:
            lines.append(f"  best lower: {best_lo.value:.12g} (probe {best_lo.probe_id}, n={best_lo.n}, certified={best_lo.certified})")
        if best_hi is not None:
            lines.append(f"  best upper: {best_hi.value:.12g} ({best_hi.kind} {best_hi.probe_id or '-'}, n={best_hi.n}, certified)")
        gam = self.gamma_estimates
        if gam:
            lines.append(f"  growth estimates (uncertified): max {max(gam.values()):.12g}")
        lines.extend(f"  note: {note}" for note in self.notes)
        return "\n".join(lines)


def lower_probe_menu(n: int, rng: np.random.Generator, random_probes: int) -> dict:
    probes = {f"e{j + 1}": np.eye(n)[j] for j in range(n)}
    for j in range(1, n + 1):
        v = np.zeros(n)
        v[:j] = 1.0
        probes[f"x{j}"] = v
    for i in range(random_probes):
        probes[f"rand{i}"] = rng.dirichlet(np.ones(n))
    return probes


def upper_probe_menu(n: int) -> dict:
    idx = np.arange(n)
    return {"ones": np.ones(n), "geo0.5": 0.5**idx, "geo0.9": 0.9**idx}


def _dedupe(probes: dict) -> dict:
    out: dict = {}
    for pid, v in probes.items():
        if not any(np.array_equal(v, w) for w in out.values()):
            out[pid] = v
    return out


# probes are evaluated in fixed blocks so the output never depends on the worker count
PROBE_BLOCK = 32


def _batch_tables(m: MapExpr, space: SpaceSpec, xs: np.ndarray, N: int):
    """Per-horizon root tables for a stack of probes, from one renormalised orbit per row.

    Returns ``(lower, upper, comp, gamma)``; the first three have shape
    ``(N, k)``.  ``gamma`` is the mean log-growth of ``||B^n x||`` over the
    last ``ceil(N/2)`` steps, ``0`` when the orbit dies.
    """
    k = xs.shape[0]
    kind = space.norm_kind
    comp_kind = "sup" if kind == "bv" else kind
    ys = np.empty((N, k, xs.shape[1]))
    log_scale = np.empty((N, k))
    y, ls = xs.copy(), np.zeros(k)
    alive = np.ones(k, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for n in range(N):
            if alive.all():
                y = m.apply_rows(y)
            elif alive.any():
                y[alive] = m.apply_rows(y[alive])
            s = np.max(y, axis=1)
            alive &= s > 0
            if alive.all():
                ls = ls + np.log(s)
                y = y / s[:, None]
            else:
                safe = np.where(alive, s, 1.0)
                ls = np.where(alive, ls + np.log(safe), -np.inf)
                y = np.where(alive[:, None], y / safe[:, None], 0.0)
            ys[n], log_scale[n] = y, ls

        live = np.isfinite(log_scale)
        n_col = np.arange(1, N + 1)[:, None]
        supp = xs > 0
        ratios = ys / np.where(supp, xs, 1.0)
        lo = np.min(np.where(supp, ratios, np.inf), axis=2)
        hi = np.max(np.where(supp, ratios, -np.inf), axis=2)
        off = np.any(~supp & (ys > 0), axis=2)
        lower = np.where(live & (lo > 0), np.exp((log_scale + np.log(lo)) / n_col), 0.0)
        upper = np.where(off, np.inf, np.where(hi > 0, np.exp((log_scale + np.log(hi)) / n_col), 0.0))
        upper = np.where(live, upper, 0.0)
        log_c = log_scale + np.log(_row_norms(comp_kind, ys)) - np.log(_row_norms(comp_kind, xs))
        comp = np.where(live, np.exp(log_c / n_col), 0.0)
        log_norm = np.vstack([np.log(_row_norms(kind, xs))[None], np.where(live, log_scale + np.log(_row_norms(kind, ys)), -np.inf)])
        h = math.ceil(N / 2)
        gamma = np.where(live[-1], np.exp((log_norm[N] - log_norm[N - h]) / h), 0.0)
    return lower, upper, comp, gamma


def _series(pid: str, kind: str, values: np.ndarray, certified: bool) -> list:
    return list(map(Row, range(1, len(values) + 1), repeat(pid), repeat(kind), values.tolist(), repeat(certified)))


def _block_rows(m: MapExpr, space: SpaceSpec, jobs: list, N: int, ok: bool) -> list:
    xs = np.stack([x for _, x, _, _ in jobs]).astype(float)
    lower, upper, comp, gamma = _batch_tables(m, space, xs, N)
    rows = []
    for i, (pid, x, as_lower, as_upper) in enumerate(jobs):
        if as_lower:
            rows += _series(pid, "lower", lower[:, i], ok)
            # companion growth quotients (#B^n x# / #x#)^{1/n}
            rows += _series(pid, "comp_lower", comp[:, i], False)
            rows.append(Row(N, pid, "gamma", float(gamma[i]), False))
        if as_upper:
            cert = ok and bool(np.all(x > 0))
            rows += [r for r in _series(pid, "upper", upper[:, i], cert) if r.value != math.inf]
    return rows


def probe_tables(m: MapExpr, space: SpaceSpec, lower_probes: dict, upper_probes: dict, N: int, certified: bool = True, workers: int = 1) -> list:
    """Rows for explicit probe sets; order is fixed by the probe dictionaries."""
    for x in (*lower_probes.values(), *upper_probes.values()):
        _probe(m, x)
    jobs = [(pid, x, True, pid in upper_probes) for pid, x in lower_probes.items()]
    jobs += [(pid, x, False, True) for pid, x in upper_probes.items() if pid not in lower_probes]
    blocks = [jobs[i : i + PROBE_BLOCK] for i in range(0, len(jobs), PROBE_BLOCK)]

    def run(block):
        return _block_rows(m, space, block, N, certified)

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(run, blocks))
    else:
        chunks = [run(block) for block in blocks]
    return [row for chunk in chunks for row in chunk]


def enclosure_report(
    m: MapExpr,
    space: SpaceSpec,
    N: int,
    probes: int = 4,
    seed: int = 0,
    workers: int = 1,
    check_trials: int = 200,
) -> RadiusReport:
    """Assemble lower/upper tables over the standard probe menu and the resulting enclosure.

    Lower probes: coordinate vectors ``e^m``, prefix indicators ``x^m``,
    ``probes`` seeded Dirichlet points and the power-iteration output.
    Upper probes (strictly positive): ``e``, geometric profiles ``0.5^j`` and
    ``0.9^j``, and the power-iteration output lifted off the boundary.
    """
    if space.dim != m.dim:
        raise UsageError("space dimension does not match map dimension")
    if N < 1:
        raise UsageError("horizon must be positive")
    n = m.dim
    rng = np.random.default_rng(seed)
    hyp = check_homogeneous_order_preserving(m, space, check_trials, seed)
    ok = hyp.homogeneous and hyp.order_preserving
    notes = []
    if not ok:
        notes.append(f"hypothesis check failed (homogeneous={hyp.homogeneous}, order_preserving={hyp.order_preserving}); tables are heuristic")

    lower = lower_probe_menu(n, rng, probes)
    upper = upper_probe_menu(n)
    sol = power_iterate(m, space, np.ones(n), tol=1e-13, max_iter=max(1000, 5 * N))
    if sol.status != "degenerate_zero" and np.any(sol.v > 0):
        v = sol.v / np.max(sol.v)
        lower["power"] = v
        if np.all(v > 0):
            upper["power"] = v
        for d in (1e-8, 1e-4):
            upper[f"power+{d:g}"] = v + d
    lower, upper = _dedupe(lower), _dedupe(upper)

    rows = probe_tables(m, space, lower, upper, N, ok, workers)
    op = opnorm_radius(m, space, N) if (space.norm_kind == "sup" or as_matrix(m) is not None) else None
    if op is not None:
        rows += _series("", "opnorm", op.values, ok and op.certified)
    comp = None
    if op is not None and space.norm_kind != "bv":
        # lattice norms: the companion table coincides with the operator-norm table
        comp = op
    elif space.norm_kind == "bv":
        comp = companion_opnorm_radius(m, space, N)
    if comp is not None:
        rows += _series("", "comp_upper", comp.values, ok and comp.certified)

    lo_vals = [r.value for r in rows if r.certified and r.kind == "lower"]
    hi_vals = [r.value for r in rows if r.certified and r.kind in ("upper", "opnorm", "comp_upper")]
    lo = max(lo_vals) if lo_vals else 0.0
    hi = min(hi_vals) if hi_vals else math.inf
    if ok and not hi_vals:
        notes.append("no upper certificate")
    probes_all = {**lower, **{k: v for k, v in upper.items() if k not in lower}}
    return RadiusReport(N, rows, probes_all, (lo, hi), bool(lo_vals), bool(hi_vals), ok, notes)
