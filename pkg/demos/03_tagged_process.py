"""The tagged degree as a birth-catastrophe chain: absorption, growth and the martingale W_t."""
import math

import numpy as np

from dupdiv import basic, simulate_basic_fast, simulate_ctmc
from dupdiv.tagged import basic_fast_many

spec = basic(0.4, 0.55)
L = math.log(1 / spec.p)
nu = spec.alpha - spec.beta * L
print(f"alpha={spec.alpha:.3f} beta={spec.beta:.3f} net log-growth nu={nu:.4f}")

path = simulate_ctmc(spec, "base", 1, 10.0, seed=3)
print("one exact path, first events (t, degree, catastrophe rings):")
for t, x, z in list(zip(path.times, path.states, path.z_counts))[:8]:
    print(f"  t={t:6.3f}  X={x:3d}  Z={z}")

T = [10.0, 20.0, 40.0]
out = basic_fast_many(spec, 1, T, 20_000, seed=4)
x, z = out["x"], out["z"]
for c, t in enumerate(T):
    print(f"T={t:4.0f}: absorbed {np.mean(x[:, c] == 0):.3f}, mean log X among survivors "
          f"{np.mean(np.log(x[x[:, c] > 0, c])):.2f} (nu T = {nu * t:.2f})")

# W_t = e^{-alpha t} p^{-Z_t} X_t settles down on survival
surv = x[:, -1] >= 50
with np.errstate(divide="ignore"):
    logw = np.log(x) - spec.alpha * np.array(T) + z * L
gap = np.abs(logw[surv, 2] - logw[surv, 1])
print(f"median |log W_40 - log W_20| among {surv.sum()} survivors: {np.median(gap):.4f}")

p = simulate_basic_fast(spec, 1, 200.0, seed=11)
print("fast-forward path reaches", f"{p.states[-1]:.3g}" if p.absorbed_at is None else
      f"zero at t={p.absorbed_at:.2f}")
