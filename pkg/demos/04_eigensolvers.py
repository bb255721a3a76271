"""Eigenvectors and lower eigenvectors of homogeneous order-preserving maps."""
import numpy as np

from conespec import (
    Linear,
    SpaceSpec,
    TwoSex,
    cyclic_sum_eigenvector,
    epsilon_homotopy,
    eta_via_meet_bisection,
    meet_iteration_lower,
    power_iterate,
    reference_rank_config,
    sup_lower_eigenvector,
)

two_sex = TwoSex(0.5, 0.4, 1.0, 0.8)
space = SpaceSpec(2)

## Power iteration from e converges to the mating eigenvector.
res = power_iterate(two_sex, space, [1.0, 1.0])
print("power:", res.status, res.r, res.v / res.v.sum(), f"residual {res.residual:.1e}")

## The meet iteration survives exactly at r <= 8/9; bisection finds the threshold.
for r in (0.85, 0.95):
    print(f"meet at r = {r}:", meet_iteration_lower(two_sex, space, [1.0, 1.0], r).status)
print("threshold:", eta_via_meet_bisection(two_sex, space, [1.0, 1.0], 0.5, 1.5, tol_r=1e-8))

## Cyclic averages turn a period-two orbit into an eigenvector.
swap = Linear([[0.0, 1.0], [1.0, 0.0]])
print("cyclic:", cyclic_sum_eigenvector(swap, [1.0, 0.0], 2, 1.0).v)
print("sup construction:", sup_lower_eigenvector(swap, [1.0, 0.0], 2, 1.0).v)

## The epsilon homotopy tracks perturbed eigenpairs down to the rank model.
rank = reference_rank_config().rank_map()
hom = epsilon_homotopy(rank, SpaceSpec(5), np.ones(5), eps0=0.1, steps=8)
print("\n k  epsilon      r")
for k, eps, r, _ in hom.trace:
    print(f"{k:2d}  {eps:.2e}  {r:.10f}")
