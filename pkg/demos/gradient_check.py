"""
Checking the approximate gradient
=================================

The optimizer ignores the (almost everywhere zero) derivative of the
reconstruction and differentiates only through the predictor. With the
reconstructed inputs frozen, that gradient is exact, so finite differences
of the frozen surrogate should agree with it.
"""

import numpy as np

from optsensor import (CostParams, Dense2, PdeModel, ReconstructionSpec, SensorWeights,
                       approximate_gradient, build_grid, simulate, surrogate_fd_check)

rng = np.random.default_rng(0)
grid = build_grid(1, 1.0, 7)
traj = simulate(PdeModel("heat1d", 1e-3), rng.normal(size=7), grid, 0.5, 6)
model = Dense2.init(7, rng)
w = SensorWeights([0.9, 0.2, 0.7, 0.1, 0.8, 0.3, 0.95], grid)
p = CostParams.for_trajectory(traj, alpha=1.0)
spec = ReconstructionSpec()

print("gradient:", approximate_gradient(traj, w, model, spec, p))
print("max deviation from surrogate finite differences:",
      surrogate_fd_check(traj, w, model, spec, p, step=1e-5))
