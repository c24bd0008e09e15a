"""Transient laws by uniformization, the quasi-stationarity identity, and the degree law
of non-isolated vertices."""
import numpy as np

from dupdiv import (DistributionVector, basic, conditional_from_semigroup, conditional_limit,
                    quasi_stationarity_check, semigroup, stationary)

spec = basic(0.3, 0.0)
law = semigroup(DistributionVector.point(3, 400), spec, "base", 2.0, K=400)
print("P_3[X_2 = j], j = 0..6:", np.round(law.mass[:7], 5), " deficit", f"{law.deficit:.1e}")

for i in (1, 3, 5):
    qc = quasi_stationarity_check(spec, i, [0.5, 1.0, 2.0, 3.0], K=400)
    print(f"identity j P_i[X_t=j] = e^(-(1-2a)t) i P_i[X~_t=j], i={i}: "
          f"max relative error {qc.max_rel_error:.1e}")

erg = basic(0.2, 0.0)
st = stationary(erg, 600)
cl = conditional_limit(erg, 600)
print("\nstationary law of the weighted chain, j=1..6:", np.round(st.mass[1:7], 4))
print("limit law of X_t given X_t >= 1, j=1..6:   ", np.round(cl.mass[1:7], 4))
for t in (15.0, 30.0, 60.0, 120.0):
    gap = np.max(np.abs(conditional_from_semigroup(erg, t, 1, 600).mass - cl.mass))
    print(f"t={t:5.0f}: sup distance to the limit {gap:.2e}")
