"""Monte Carlo checks of the log-normal CLT and W stabilization, with JSON reports."""
from dupdiv import basic, statlab

spec = basic(0.4, 0.55)
for T in (25.0, 100.0, 400.0):
    rep = statlab.clt_test(spec, T=T, N=20_000, discrete_m=None, seed=1)
    print(f"T={T:5.0f}: max deviation from survival x normal tail "
          f"{rep.statistics['max_deviation']:.4f}")
print("the deviation shrinks like T^(-1/2): a finite-horizon bias")

rep = statlab.w_stabilization(spec, N=5000, discrete_m=(10**3, 10**4, 10**5), discrete_N=3000)
print("\nmedian |log W_T - log W_T/2|:", [f"{m:.3g}" for m in rep.statistics["medians"]])
print("discrete analogue:", [f"{m:.3g}" for m in rep.statistics["discrete_medians"]])
print(f"report {rep.experiment}: status {rep.status}, config digest {rep.config_digest}")
print("full JSON via rep.to_json(); keys:", sorted(rep.to_dict()))
