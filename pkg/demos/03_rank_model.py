"""Rank-structured population with mating: closed forms, conditions and enclosures."""
import numpy as np

from conespec import NORM_KINDS, RankConfig, SpaceSpec, build_rank_model, enclosure_report, rank_cw_formulas, rank_positivity_conditions, reference_rank_config

cfg = reference_rank_config()
model = build_rank_model(cfg)
print("q =", cfg.q, " p =", cfg.p)
print("fertile pairs (1-based):", cfg.triples())
print("order bound u =", model.u, " c =", model.c)

## Closed-form lower CW numbers at prefix indicators x^m and coordinate vectors e^m.
print("\n m   [B]_x^m   [B]_e^m")
for m in range(1, cfg.n + 1):
    at_x, at_e = rank_cw_formulas(cfg, m)
    print(f"{m:2d}   {at_x:.4f}    {at_e:.4f}")

## Enclosures barely depend on the norm, since u is summable.
for kind in NORM_KINDS:
    lo, hi = enclosure_report(model.map, SpaceSpec(cfg.n, kind), 100).enclosure
    print(f"{kind:>6}: r+ in [{lo:.8f}, {hi:.8f}]")

## Without survival and with every fertile pair out of reach the radius vanishes.
dead = RankConfig.from_triples(np.zeros(4), [0.5, 0.0, 0.5], [(3, 4, 1.0)])
print("\nconditions:", rank_positivity_conditions(dead))
print("enclosure:", enclosure_report(dead.rank_map(), SpaceSpec(4), 50).enclosure)
