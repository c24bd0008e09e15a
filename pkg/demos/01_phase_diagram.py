"""Where does a tagged vertex end up? Regimes of the degree process over the (p, q) plane."""
import math

import numpy as np

from dupdiv import basic, classify, p_star, region_boundaries

print("Threshold p* solving p e^p = 1 at q = 0:", round(p_star(0.0), 6))
print("Upper boundary q2 at p = e^-2:", round(region_boundaries(math.exp(-2))[1], 6),
      " 1/(e^2+1) =", round(1 / (math.e**2 + 1), 6))

for p, q in ((0.2, 0.0), (0.5, 0.05), (0.4, 0.55), (0.8, 0.2)):
    s = basic(p, q)
    x, w = classify(s, "X_star"), classify(s, "X_tilde")
    print(f"p={p:<4} q={q:<5} region {x.region}: X* {x.verdict:<26} X~ {w.verdict}")

# coarse map: A ergodic, B absorbed but weighted process escapes, C degree grows
n = 24
grid = (np.arange(n) + 0.5) / n
print("\nq ^ (rows), p -> (columns)")
for q in grid[::-1]:
    print("".join(classify(basic(float(p), float(q))).region for p in grid))
