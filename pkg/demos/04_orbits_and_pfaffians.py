"""Coadjoint orbits of small nilpotent Lie algebras.

For each algebra we find the generic jump set P, check the group law built
from the BCH series and evaluate the Pfaffian density on a few functionals.

    python demos/04_orbits_and_pfaffians.py
"""

import numpy as np

from inghamkit.nilpotent import (
    abelian,
    bch_inverse,
    bch_multiply,
    coadjoint_form,
    filiform4,
    generic_stratum,
    heisenberg_algebra,
    lower_central_series,
    pfaffian_abs,
)

rng = np.random.default_rng(0x16A3)
for spec in (abelian(3), heisenberg_algebra(1), heisenberg_algebra(2), filiform4()):
    dims = [s.shape[0] for s in lower_central_series(spec)]
    stratum = generic_stratum(spec)
    print(f"{spec.name}: dim {spec.dim}, lower central series dims {dims}")
    print(f"  generic jump set P = {stratum.P}, Q = {stratum.Q}, certificate {stratum.fraction:.0%}")

    x, y, z = rng.standard_normal((3, 200, spec.dim))
    assoc = np.max(np.abs(bch_multiply(spec, bch_multiply(spec, x, y), z)
                          - bch_multiply(spec, x, bch_multiply(spec, y, z))))
    inv = np.max(np.abs(bch_multiply(spec, x, bch_inverse(spec, x))))
    print(f"  BCH associativity error {assoc:.1e}, inverse error {inv:.1e}")

    nu = rng.standard_normal(spec.dim)
    orbit = coadjoint_form(spec, nu)
    print(f"  nu = {np.array2string(nu, precision=2)}: orbit dimension {orbit.rank}")
    if stratum.P:
        pf = pfaffian_abs(spec, nu, stratum.P)
        print(f"  |Pf(nu)| = {pf:.4f}, |Pf(2 nu)| / |Pf(nu)| = "
              f"{pfaffian_abs(spec, 2 * nu, stratum.P) / pf:.4f} (expect 2^{len(stratum.P) // 2})")
