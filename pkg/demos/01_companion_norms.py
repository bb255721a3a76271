"""Companion half-norms on the orthant and the non-normal bv cone."""
import numpy as np

from conespec import NORM_KINDS, SpaceSpec, bv_example_pair, companion_half_norm, companion_norm, half_norm_oracle, norm, normal_point_gauge

## psi(x) is the distance from x to the negative cone.
## For the lattice norms it is just the norm of the positive part.
x = np.array([0.5, -1.0, 0.25])
for kind in NORM_KINDS:
    space = SpaceSpec(3, kind)
    print(f"{kind:>6}: ||x|| = {norm(space, x):.4f}  psi(x) = {companion_half_norm(space, x):.4f}  #x# = {companion_norm(space, x):.4f}")

## A brute-force bracket agrees with the closed forms.
for kind in NORM_KINDS:
    lo, hi = half_norm_oracle(SpaceSpec(3, kind), x, 0.05, 2.0)
    print(f"{kind:>6}: oracle bracket [{lo:.4f}, {hi:.4f}]")

## Under the variation norm the companion norm collapses to the sup norm,
## while the norm itself can be much larger.
z = np.array([0.0, 1.0, 0.0, 1.0, 0.0])
bv = SpaceSpec(5, "bv")
print("bv norm of 0,1,0,1,0:", norm(bv, z), " companion norm:", companion_norm(bv, z))

## Non-normality: 0 <= x^m <= u^m, yet ||x^m|| / ||u^m|| = m.
print("\n m  ||x^m||  ||u^m||  gauge(x^m)")
for m in range(1, 8):
    xm, um = bv_example_pair(m)
    sp = SpaceSpec(xm.size, "bv")
    print(f"{m:2d}  {norm(sp, xm):7.1f}  {norm(sp, um):7.1f}  {normal_point_gauge(xm).value:10.1f}")

## The gauge of a summable point stays within a factor two of its l1 mass.
rng = np.random.default_rng(0)
y = np.append(rng.random(8), 0.0)
res = normal_point_gauge(y)
print(f"\nl1 mass {y.sum():.4f}, gauge {res.value:.4f}, witness {np.round(res.witness, 3)}")
