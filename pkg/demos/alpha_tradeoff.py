"""
Sensor price versus coverage
============================

At the builtin prices (alpha = 5 for 1D heat) one sensor costs more than the
whole prediction error of a dead sensor set, so the optimizer removes them
all. Cheaper sensors leave room for a trade-off.
"""

from dataclasses import replace

from optsensor import builtin_experiment, run_experiment

base = builtin_experiment("heat1d-step")
base = replace(base, optimizer=replace(base.optimizer, max_outer_iters=300))

for alpha in (0.0, 1e-3, 1e-2, 3e-2, 5.0):
    res = run_experiment(replace(base, alpha=alpha))
    print(f"alpha {alpha:<6g} coverage {res.coverage:.3f}  "
          f"error term {res.cost_final.error_term:.2e}  status {res.trace.status}")
