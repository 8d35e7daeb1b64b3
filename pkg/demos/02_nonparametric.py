# Nonparametric estimate of the patience-time survival from one simulated
# sample, compared with the truth.

import numpy as np

import mixcens as mc

data = mc.simulate_dataset(mc.setting(1, n=2000, seed=7))
print("n =", data.n, "counts (served, reported, silent):", data.counts())

curve = mc.estimate_F(data)
print("window end tau =", round(curve.tau, 4))

for t in (0.05, 0.1, 0.2, 0.25):
    print(f"t={t:<5} estimate {curve(t):.4f}  raw {curve.raw[np.searchsorted(curve.grid, t, 'right') - 1]:.4f}"
          f"  truth {np.exp(-4 * t):.4f}")

# The reported-abandonment estimate tracks A(t) = 0.25 (1 - exp(-16 t)).
a = mc.a_hat_curve(data)
print("A_hat(0.1) =", round(float(a(0.1)), 4), "vs", round(0.25 * (1 - np.exp(-1.6)), 4))

# Kaplan-Meier for the waiting time; Gbar(0.1) = exp(-1).
km = mc.km_waiting_survival(data)
print("KM Gbar(0.1) =", round(float(km(0.1)), 4), "vs", round(np.exp(-1), 4))

print("MSE against the truth:", mc.mse(curve, mc.exponential(4.0)))
