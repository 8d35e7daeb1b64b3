# Population quantities of the observation model under the first benchmark
# setting: T ~ Exp(4), W ~ Exp(10), reports with probability exp(-12 t).

import numpy as np

import mixcens as mc

f, g, q = mc.exponential(4.0), mc.exponential(10.0), mc.exp_decay(12.0)

# Shares of served, reported-leave and silent-leave patients.
probs = [mc.category_prob(i, f, g, q) for i in (1, 2, 3)]
print("category probabilities:", np.round(probs, 4), "sum", sum(probs))

# The reporting integral A(t) has the closed form 0.25 (1 - exp(-16 t)) here.
t = np.linspace(0, 0.5, 6)
print("A(t)   :", np.round(mc.report_integral_A(t, f, q), 5))
print("closed :", np.round(0.25 * (1 - np.exp(-16 * t)), 5))

# F is recovered exactly from the three category densities and A.
print("max |F_rec - F| =", np.abs(mc.population_F_reconstruct(t, f, g, q) - f.cdf(t)).max())

# A Monte Carlo sample agrees with pr(U > t) = Gbar(t) (1 - A(t)).
data = mc.simulate_dataset(mc.setting(1, n=100_000, seed=1))
for s in (0.02, 0.05, 0.1):
    print(f"pr(U>{s}): empirical {np.mean(data.u > s):.4f}, model {mc.population_survival_U(s, f, g, q):.4f}")
