"""
What a single trajectory can teach a linear predictor
=====================================================

A smooth heat trajectory explores only a handful of directions, so a fitted
one-step map matches the data without matching the stencil. Random starting
states fix that.
"""

import numpy as np

from optsensor import (Dense2, InitialCondition, PdeModel, TrainingConfig, build_grid,
                       effective_matrix, make_dataset, simulate, step_operator, train)

grid = build_grid(1, 1.0, 101)
heat = PdeModel("heat1d", 1e-4)
A = step_operator(heat, grid, 0.1).toarray()

single = simulate(heat, InitialCondition("poly1d_half"), grid, 0.1, 100)
s = np.linalg.svd(single.snapshots[:-1], compute_uv=False)
print("singular values of the snapshot matrix:", s[[0, 5, 10, 20, 40]])

rng = np.random.default_rng(0)
many = [simulate(heat, rng.normal(size=grid.c), grid, 0.1, 1) for _ in range(120)]

for label, data in [("one smooth trajectory", single), ("120 random starts", many)]:
    model, hist = train(Dense2.init(grid.c, np.random.default_rng(2)), make_dataset(data),
                        TrainingConfig(learning_rate=1e-2))
    # column 0 multiplies the Dirichlet node, which is always zero
    err = np.abs(effective_matrix(model)[1:-1, 1:] - A[1:-1, 1:]).max()
    print(f"{label:22s} final MSE {hist.loss[-1]:.1e}, stencil error {err:.4f}")
