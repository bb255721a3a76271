"""Command-line front end.

Models are read from a JSON file (``--model``)::

    {"model": "rank", "n": 5, "q": [...], "p": [...], "beta": [[j, k, value], ...], "s": 0.0}
    {"model": "twosex", "pf": 0.5, "pm": 0.4, "bf": 1.0, "bm": 0.8}
    {"model": "linear", "matrix": [[...], ...]}
    {"model": "scale", "alpha": 2.0, "inner": {...}}
    {"model": "compose", "outer": {...}, "inner": {...}}
    {"model": "power", "k": 3, "inner": {...}}

Rank indices ``j, k`` are 1-based.  Usage errors exit with status 1 and
numerical failures with status 2; both print a JSON object on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import eigensolvers as eig
from .errors import NumericalError, UsageError
from .maps import Compose, Linear, MapExpr, Power, Scale, check_homogeneous_order_preserving, cone_operator_norm
from .ordered_space import NORM_KINDS, SpaceSpec, as_point, companion_half_norm, companion_norm, norm, normal_point_gauge
from .population import RankConfig, TwoSexParams, dissipativity_check, orbit_simulate
from .radii import enclosure_report

# -- config ---------------------------------------------------------------

_KEYS = {
    "rank": ({"model", "q", "p"}, {"n", "beta", "s"}),
    "twosex": ({"model", "pf", "pm", "bf", "bm"}, set()),
    "linear": ({"model", "matrix"}, set()),
    "scale": ({"model", "alpha", "inner"}, set()),
    "compose": ({"model", "outer", "inner"}, set()),
    "power": ({"model", "k", "inner"}, set()),
}


def _number(cfg, key) -> float:
    val = cfg[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise UsageError(f"config key {key!r} must be a number")
    return float(val)


def canonical_config(cfg: dict) -> dict:
    """Validate a model config and return it in canonical form (floats, sorted beta, explicit defaults)."""
    if not isinstance(cfg, dict) or "model" not in cfg:
        raise UsageError("model config must be a JSON object with a 'model' key")
    kind = cfg["model"]
    if kind not in _KEYS:
        raise UsageError(f"unknown model {kind!r}; expected one of {sorted(_KEYS)}")
    required, optional = _KEYS[kind]
    missing = required - cfg.keys()
    unknown = cfg.keys() - required - optional
    if missing:
        raise UsageError(f"{kind} config is missing keys {sorted(missing)}")
    if unknown:
        raise UsageError(f"{kind} config has unknown keys {sorted(unknown)}")

    if kind == "rank":
        q = [float(v) for v in cfg["q"]]
        p = [float(v) for v in cfg["p"]]
        n = int(cfg.get("n", len(q)))
        if n != len(q):
            raise UsageError(f"rank config: n={n} but len(q)={len(q)}")
        triples = cfg.get("beta", [])
        if any(len(t) != 3 for t in triples):
            raise UsageError("beta entries must be [j, k, value] triples")
        rc = RankConfig.from_triples(q, p, [(int(j), int(k), float(v)) for j, k, v in triples], _number(cfg, "s") if "s" in cfg else 0.0)
        return {"model": "rank", "n": rc.n, "q": q, "p": p, "beta": rc.triples(), "s": float(rc.s)}
    if kind == "twosex":
        return {"model": "twosex", **{k: _number(cfg, k) for k in ("pf", "pm", "bf", "bm")}}
    if kind == "linear":
        a = np.asarray(cfg["matrix"], dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise UsageError("linear matrix must be square")
        return {"model": "linear", "matrix": a.tolist()}
    if kind == "scale":
        return {"model": "scale", "alpha": _number(cfg, "alpha"), "inner": canonical_config(cfg["inner"])}
    if kind == "compose":
        return {"model": "compose", "outer": canonical_config(cfg["outer"]), "inner": canonical_config(cfg["inner"])}
    k = cfg["k"]
    if isinstance(k, bool) or not isinstance(k, int):
        raise UsageError("power exponent k must be an integer")
    return {"model": "power", "k": k, "inner": canonical_config(cfg["inner"])}


def rank_config_from(cfg: dict) -> RankConfig:
    cfg = canonical_config(cfg)
    if cfg["model"] != "rank":
        raise UsageError("this command needs a rank model config")
    return RankConfig.from_triples(cfg["q"], cfg["p"], cfg["beta"], cfg["s"])


def build_map(cfg: dict) -> MapExpr:
    cfg = canonical_config(cfg)
    kind = cfg["model"]
    if kind == "rank":
        rc = rank_config_from(cfg)
        if rc.s > 0:
            raise UsageError("saturating rank configs (s > 0) are not homogeneous; use the dissipativity command")
        return rc.rank_map()
    if kind == "twosex":
        return TwoSexParams(cfg["pf"], cfg["pm"], cfg["bf"], cfg["bm"]).map()
    if kind == "linear":
        return Linear(np.asarray(cfg["matrix"]))
    if kind == "scale":
        return Scale(cfg["alpha"], build_map(cfg["inner"]))
    if kind == "compose":
        return Compose(build_map(cfg["outer"]), build_map(cfg["inner"]))
    return Power(build_map(cfg["inner"]), cfg["k"])


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read model file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"model file is not valid JSON: {exc}") from exc


def parse_vector(text: str) -> np.ndarray:
    try:
        return as_point([float(t) for t in text.split(",")])
    except ValueError as exc:
        raise UsageError(f"cannot parse vector {text!r}: {exc}") from exc


# -- output helpers -------------------------------------------------------


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _vec(v) -> str:
    return " ".join(_fmt(t) for t in v)


def _emit(args, text: str):
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _context(args):
    if not args.model:
        raise UsageError("--model is required for this command")
    m = build_map(load_config(args.model))
    if args.dim is not None and args.dim != m.dim:
        raise UsageError(f"--dim {args.dim} does not match the model dimension {m.dim}")
    return m, SpaceSpec(m.dim, args.space)


# -- commands -------------------------------------------------------------


def cmd_psi(args):
    x = parse_vector(args.vector)
    space = SpaceSpec(args.dim or x.size, args.space)
    print(f"psi,{_fmt(companion_half_norm(space, x))}")
    print(f"companion_norm,{_fmt(companion_norm(space, x))}")
    print(f"norm,{_fmt(norm(space, x))}")


def cmd_opnorm(args):
    m, space = _context(args)
    res = cone_operator_norm(m, space, args.samples, args.seed)
    print(f"value,{_fmt(res.value)}")
    print(f"certified,{int(res.certified)}")
    print(f"witness,{_vec(res.witness)}")


def cmd_enclosure(args):
    m, space = _context(args)
    rep = enclosure_report(m, space, args.horizon, args.probes, args.seed, args.workers)
    _emit(args, rep.to_csv())
    print(rep.summary())


def cmd_eig(args):
    m, space = _context(args)
    start = parse_vector(args.vector) if args.vector else np.ones(m.dim)
    method = args.method
    if method == "power":
        res = eig.power_iterate(m, space, start, args.tol, args.max_iter)
    elif method in ("cyclic", "sup"):
        if args.r is None:
            raise UsageError(f"--r is required for --method {method}")
        fn = eig.cyclic_sum_eigenvector if method == "cyclic" else eig.sup_lower_eigenvector
        res = fn(m, start, args.period, args.r, args.tol)
    elif method == "meet":
        if args.r is None:
            raise UsageError("--r is required for --method meet")
        res = eig.meet_iteration_lower(m, space, start, args.r, args.K)
    else:
        res = eig.epsilon_homotopy(m, space, start, args.eps0, args.steps, args.tol, args.max_iter)
        _emit(args, eig.trace_csv(res.trace))
        print(f"status,{res.status}")
        print(f"r,{_fmt(res.r)}")
        print(f"v,{_vec(res.v)}")
        if res.status != eig.CONVERGED:
            raise NumericalError(f"homotopy stopped early: {res.status}")
        return
    text = f"status,{res.status}\nr,{_fmt(res.r)}\nresidual,{_fmt(res.residual)}\niterations,{res.iterations}\nv,{_vec(res.v)}\n"
    _emit(args, text)
    if method == "power" and res.status == eig.MAX_ITER:
        raise NumericalError(f"power iteration did not converge in {args.max_iter} steps (residual {res.residual:.3g})")


def cmd_model(args):
    if args.action == "show":
        if not args.model:
            raise UsageError("--model is required")
        print(json.dumps(canonical_config(load_config(args.model)), sort_keys=True))
        return
    m, space = _context(args)
    rep = check_homogeneous_order_preserving(m, space, args.trials, args.seed)
    print(f"homogeneous,{int(rep.homogeneous)}")
    print(f"order_preserving,{int(rep.order_preserving)}")
    if rep.counterexample is not None:
        print("counterexample," + ";".join(_vec(v) for v in rep.counterexample))


def cmd_gauge(args):
    res = normal_point_gauge(parse_vector(args.vector))
    print(f"value,{_fmt(res.value)}")
    print(f"witness,{_vec(res.witness)}")


def cmd_orbit(args):
    m, space = _context(args)
    x0 = parse_vector(args.vector) if args.vector else np.ones(m.dim)
    traj = orbit_simulate(m, x0, args.horizon, space, normalize=args.normalize)
    _emit(args, traj.to_csv())


def cmd_dissipativity(args):
    if not args.model:
        raise UsageError("--model is required for this command")
    rc = rank_config_from(load_config(args.model))
    if args.space not in ("sup", "sum", "euclid"):
        raise UsageError("dissipativity needs --space sup, sum or euclid")
    rep = dissipativity_check(rc, args.eps, args.c, seeds=args.seeds, steps=args.horizon, norm_kind=args.space, seed=args.seed)
    _emit(args, rep.to_csv())
    print(f"premise_ok,{int(rep.premise_ok)}")
    print(f"c_tilde,{_fmt(rep.c_tilde)}")
    print(f"contraction_ok,{int(rep.contraction_ok)}")
    print(f"spectral_radius_A,{_fmt(rep.spectral_radius)}")
    print(f"c_hat,{_fmt(rep.bound_c_hat)}")
    print(f"max_orbit_limsup,{_fmt(np.max(rep.orbit_limsup))}")
    print(f"conclusion_ok,{int(rep.conclusion_ok)}")
    for w in rep.warnings:
        print(f"warning,{w}")


# -- parser ---------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="conespec", description="Cone spectral radius enclosures and eigen-solvers.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, help, space="sup", horizon=100):
        # common flags are added per command so their defaults stay independent
        p = sub.add_parser(name, help=help)
        p.add_argument("--space", choices=NORM_KINDS, default=space)
        p.add_argument("--dim", type=int)
        p.add_argument("--model", help="path to a JSON model config")
        p.add_argument("--horizon", type=int, default=horizon)
        p.add_argument("--probes", type=int, default=4, help="number of random lower probes")
        p.add_argument("--tol", type=float, default=1e-12)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", help="write CSV here instead of stdout")
        return p

    p = command("psi", help="companion half-norm and norm of a vector")
    p.add_argument("--vector", required=True)
    p.set_defaults(fn=cmd_psi)

    p = command("opnorm", help="cone operator norm")
    p.add_argument("--samples", type=int, default=2000)
    p.set_defaults(fn=cmd_opnorm)

    p = command("enclosure", help="certified spectral-radius enclosure")
    p.set_defaults(fn=cmd_enclosure)

    p = command("eig", help="eigenvector and lower-eigenvector solvers")
    p.add_argument("--method", choices=("power", "cyclic", "sup", "meet", "homotopy"), default="power")
    p.add_argument("--vector", help="start vector / w / u (default all ones)")
    p.add_argument("--r", type=float)
    p.add_argument("--period", type=int, default=1)
    p.add_argument("--K", type=int, default=100)
    p.add_argument("--eps0", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--max-iter", type=int, default=20_000)
    p.set_defaults(fn=cmd_eig)

    p = command("model", help="inspect a model config")
    p.add_argument("action", choices=("check", "show"))
    p.add_argument("--trials", type=int, default=1000)
    p.set_defaults(fn=cmd_model)

    p = command("gauge", help="bv normal-point gauge")
    p.add_argument("--vector", required=True)
    p.set_defaults(fn=cmd_gauge)

    p = command("orbit", help="simulate an orbit")
    p.add_argument("--vector")
    p.add_argument("--normalize", action="store_true")
    p.set_defaults(fn=cmd_orbit)

    p = command("dissipativity", help="point-dissipativity check for a saturating rank model", space="sum", horizon=200)
    p.add_argument("--eps", type=float, default=0.2)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--seeds", type=int, default=50)
    p.set_defaults(fn=cmd_dissipativity)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        args.fn(args)
    except UsageError as exc:
        print(json.dumps({"error": "usage", "message": str(exc)}), file=sys.stderr)
        return 1
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(json.dumps({"error": "numerical", "message": str(exc)}), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
