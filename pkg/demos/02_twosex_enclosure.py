"""Certified enclosure of the growth rate of a two-sex population."""
import numpy as np

from conespec import SpaceSpec, TwoSexParams, enclosure_report, twosex_closed_form

## Female/male survival and birth rates; mating follows the harmonic mean.
params = TwoSexParams(p_f=0.5, p_m=0.4, b_f=1.0, b_m=0.8)
exact = twosex_closed_form(params)
print("closed form: lambda =", exact.lam, " eigenvector (f, m) =", exact.eigenvector)

## Plain probes (coordinate vectors, prefix indicators, e) close in slowly.
m = params.map()
rep = enclosure_report(m, SpaceSpec(2), 200)
plain_lo = np.max([v for pid, v in rep.lower_table.items() if not pid.startswith("power")], axis=0)
plain_hi = np.min([v for pid, v in rep.upper_table.items() if not pid.startswith("power")], axis=0)
for horizon in (1, 5, 20, 200):
    lo, hi = plain_lo[:horizon].max(), plain_hi[:horizon].min()
    print(f"N = {horizon:3d}: [{lo:.12f}, {hi:.12f}]  width {hi - lo:.2e}")

## The power-iteration probe sits on the eigenvector, so its CW numbers
## pinch lambda from both sides already at n = 1.
print("\npower probe, n = 1:", rep.lower_table["power"][0], rep.upper_table["power"][0])

## The summary rounds the certified enclosure outward.
print()
print(rep.summary())
