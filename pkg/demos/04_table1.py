# A small version of the MSE comparison across sample sizes. Use the
# reproduce-table1 command for the full 100-replication run.

import mixcens as mc

summaries = mc.table1_harness(ns=(100, 500, 2000), reps=20, seed=2024)
print(f"{'setting':>7} {'n':>5} {'estimator':>14} {'mean x1e3':>10} {'sd x1e3':>9}")
for s in summaries:
    mean, _, sd = s.scaled()
    print(f"{s.setting:>7} {s.n:>5} {s.estimator:>14} {mean:>10.3f} {sd:>9.3f}")
