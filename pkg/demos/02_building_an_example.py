"""Build a function supported in [-l, l] whose transform decays like exp(-sqrt t).

The construction is an infinite convolution of normalized indicators.  The
gap lengths come from the profile, their sum stays below l, and the transform
is the product of sinc factors.  We check the support, the transform and the
envelope |f_hat| e^psi.

    python demos/02_building_an_example.py
"""

import numpy as np

from inghamkit.grid import forward_transform, max_outside_ball
from inghamkit.synthesis import envelope_stability, gaps_from_profile, ingham_function
from inghamkit.weights import power_profile

p = power_profile(0.5)
l = 1.0
gaps = gaps_from_profile(p, l)
print(f"{gaps.count} gaps over {gaps.truncation_index} levels, total {gaps.total:.6f} <= l = {l}")
print("level gaps:", np.array2string(gaps.level_gaps[:5], precision=4), "...")

f, F = ingham_function(gaps)
print(f"grid: {f.shape[0]} points, spacing {f.spacing[0]:.2e}")
print(f"peak {f.peak():.4f}, largest value outside [-l, l]: {max_outside_ball(f, l):.1e}")

G = forward_transform(f)
print(f"FFT of f against the sinc product: {np.max(np.abs(G.values - F.values)):.1e}")

s = envelope_stability(gaps, p)
print(f"max |f_hat| e^psi on [1, 1e4]: {s['band']['max']:.4g} at xi = {s['band']['argmax']:.3g}")
print(f"same on [1, 2e4]:              {s['doubled']['max']:.4g} (change {s['relative_change']:.2%})")

# the envelope is what the profile buys; a faster profile than the gaps allow breaks it
fast = power_profile(0.9)
print(f"envelope under the faster weight t^0.9 on [1, 1e4]: "
      f"{envelope_stability(gaps, fast)['band']['max']:.3g}")
