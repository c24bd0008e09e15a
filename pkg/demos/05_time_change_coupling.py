"""Discrete residence times against exponentials under the harmonic clock, and the coupled
pair (Y, X) whose time shift Delta converges."""
import numpy as np

from dupdiv import basic, build_coupled_pair
from dupdiv.timechange import quantile_couple_many, sandwich_violations

rng = np.random.default_rng(0)
print("   m      E V      1/b    E(E-V)^2   sandwich violations")
for m in (10, 100, 1000, 10_000):
    b = 0.5
    e, v, r = quantile_couple_many(float(m), 0.0, b, rng.random(200_000))
    print(f"{m:6d}  {v.mean():.4f}  {1 / b:.4f}  {np.mean((e - v) ** 2):.3e}   "
          f"{sandwich_violations(m, 0.0, b, e, v, r)}")
print("second moment falls like m^-2")

pair = build_coupled_pair(basic(0.4, 0.55), 1, 2, 400, seed=5)
d = pair.delta
print("\ncoupled pair from degree 1 at size 2:",
      "absorbed" if pair.absorbed else f"degree {pair.states[-1]} after 400 jumps")
for n in (10, 50, 100, 200, len(d) - 1):
    print(f"  jump {n:3d}: Delta = {d[n]:+.5f}")
