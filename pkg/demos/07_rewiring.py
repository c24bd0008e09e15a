"""Extra random links: the inhomogeneous kernel against its limit, and how quickly a maximal
coupling of the two tagged chains separates."""
from dupdiv import basic, statlab

spec = basic(0.5, 0.2, r=1.0)
scan = statlab.rewiring_tv_scan(spec, k_max=20, m_max=200)
print("one-step kernel gap / r(k+2)/(m(m+1)): worst ratio "
      f"{scan['worst_ratio']:.3f} at (k, m) = {scan['worst_at']}")
print("the gap scales like 1/m^2 but the constant grows with k (mean shift of the link count)")

ex = statlab.rewiring_coupling_experiment(spec, m1_list=(100, 1000, 10_000), N=20_000, seed=2)
for m1, f in zip(ex["m1"], ex["fractions"]):
    print(f"m1={m1:6d}: fraction of coupled pairs that separate {f:.4f}")
print(f"log-log slope {ex['slope']:.3f}")
