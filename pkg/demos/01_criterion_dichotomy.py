"""Which decay rates can a compactly supported function afford?

The answer is decided by one number, I = int_1^oo psi(t)/t^2 dt.  This
script classifies a handful of profiles and shows the partial integrals that
the classifier looks at when no closed form is available.

    python demos/01_criterion_dichotomy.py
"""

import numpy as np

from inghamkit.weights import (
    constant_profile,
    criterion,
    linear_profile,
    log_power_profile,
    log_profile,
    power_profile,
    radial_criterion_d,
    tabulated_profile,
)

profiles = [
    constant_profile(3.0),
    power_profile(0.5),
    power_profile(0.9),
    log_power_profile(2.0),
    log_power_profile(1.1),
    log_profile(),
    linear_profile(1.0),
]

print(f"{'profile':<18} {'I':>12}  classification")
for p in profiles:
    rep = criterion(p)
    value = "inf" if rep.value is None else f"{rep.value:.6g}"
    print(f"{p.name:<18} {value:>12}  {rep.classification}")

# t/log(e+t) sits right on the edge: partial integrals grow like log log T
rep = criterion(log_profile())
print("\npartial integrals for", log_profile().name)
for T, I in rep.partial_integrals:
    print(f"  T = {T:>10.3g}   I_T = {I:.6f}")

# a measured profile, given as a table: the classifier fits the growth of the
# partial integrals instead; a logarithmic margin is too thin to call from data
t = np.concatenate([[0.0], np.geomspace(1, 1e8, 60)])
for label, values in (("t^0.5", np.sqrt(t)), ("t/log(e+t)^1.5", t / np.log(np.e + t) ** 1.5)):
    rep = criterion(tabulated_profile(t, values, name="measured"))
    print(f"tabulated {label}: {rep.classification} ({rep.method})")
print()

# in R^d the radial version picks up the sphere area
for d in (1, 2, 3):
    rep = radial_criterion_d(log_power_profile(2.0), d)
    print(f"radial criterion for t/log(e+t)^2 in R^{d}: {rep.value:.6f}")
