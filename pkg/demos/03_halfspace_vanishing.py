"""Vanishing on a half-space, tested through slices and log integrals.

A function supported in {x . eta <= s} whose transform decays faster than
any profile with divergent I must be zero.  The pipeline rotates the
half-space to {x_1 <= 0}, takes the one-dimensional slices and measures
int log^-|F| / (1 + t^2) on each.

    python demos/03_halfspace_vanishing.py
"""

import numpy as np

from inghamkit.grid import SampledFunction
from inghamkit.synthesis import gaps_from_profile, ingham_function, mollify
from inghamkit.vanish import HalfSpace, theorem23_pipeline
from inghamkit.weights import linear_profile, power_profile

# an admissible example: the theorem has nothing to say
p = power_profile(0.5)
f0, _ = ingham_function(gaps_from_profile(p, 0.5, K=6))
f = mollify(f0, 1.0)
rep = theorem23_pipeline(f, HalfSpace([1.0], 1.0), p)
print("mollified Ingham function, weight t^0.5")
print(f"  verdict {rep.verdict}, consistency {rep.consistency}")
print(f"  log plus part {rep.slice_reports[0][1].plus_part:.4f}"
      f" <= weighted bound {rep.slice_reports[0][1].weighted_bound:.4f}")

# a nonzero half-plane function checked against a linear weight
g = SampledFunction.from_callable(
    lambda x, y: np.where(x <= 0, np.exp(-4 * (x + 1) ** 2 - 4 * y ** 2), 0.0) * (x > -2.5),
    [-3, -2], [1, 2], [128, 64])
rep = theorem23_pipeline(g, HalfSpace([1.0, 0.0], 0.0), linear_profile())
print("\nhalf-plane Gaussian, weight t")
print(f"  verdict {rep.verdict}, consistency {rep.consistency}")
print(f"  {rep.slices_tested} of {rep.slices_total} slices tested")
print("  ", rep.diagnostics.get("explanation", ""))
_, first = rep.slice_reports[0]
for T, minus, _ in first.minus_table[-4:]:
    print(f"  T = {T:8.3g}  int log^- |F| / (1+t^2) = {minus:.4f}")
