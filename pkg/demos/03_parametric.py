# Two-stage parametric fit: waiting-time rate first, then the patience rate
# from the served patients only.

import numpy as np

import mixcens as mc

for number in (1, 2):
    data = mc.simulate_dataset(mc.setting(number, n=2000, seed=3))
    fit = mc.fit_parametric(data)
    print(f"setting {number}: gamma_hat {fit.gamma_hat[0]:.3f} (se {fit.gamma_stderr[0]:.3f}),"
          f" theta_hat {fit.theta_hat[0]:.3f}")

# Under the second setting the exponential working model is wrong, so the
# patience rate settles near a pseudo-true value slightly above 4.
thetas = [mc.fit_parametric(mc.simulate_dataset(mc.setting(2, n=2000, seed=5), r), stderr=False).theta_hat[0]
          for r in range(50)]
print("setting 2 mean theta_hat over 50 replications:", round(float(np.mean(thetas)), 3))

# Bootstrap interval for the patience rate.
data = mc.simulate_dataset(mc.setting(1, n=1000, seed=11))
ci = mc.bootstrap_theta_ci(data, B=200, seed=1)
print("95% bootstrap interval:", np.round([ci.lower[0], ci.upper[0]], 3))
