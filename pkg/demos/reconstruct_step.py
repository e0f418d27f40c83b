"""
Reconstructing a step from sparse sensors
=========================================

The not-a-knot spline is exact for cubics but rings around a jump. More
sensors usually help, though not along every nested sequence.
"""

import numpy as np

from optsensor import (InitialCondition, ReconstructionSpec, SensorWeights, build_grid,
                       eval_initial_condition, reconstruct)

grid = build_grid(1, 1.0, 21)
z = eval_initial_condition(InitialCondition("heaviside_half"), grid)
spec = ReconstructionSpec()


def l1(active):
    om = np.zeros(grid.c)
    om[active] = 1.0
    return grid.quad_weights @ np.abs(reconstruct(z, SensorWeights(om, grid), spec) - z)


# dyadic refinement: the midpoint sensor sits right on the jump and makes things worse
for active in ([0, 20], [0, 10, 20], [0, 5, 10, 20], [0, 5, 10, 15, 20]):
    print(f"{str(active):22s} L1 = {l1(active):.4f}")

# greedy refinement: add whichever sensor helps most
chain = [0, 20]
while len(chain) < 8:
    rest = [i for i in range(grid.c) if i not in chain]
    chain.append(min(rest, key=lambda i: l1(chain + [i])))
    print(f"greedy {chain}: L1 = {l1(chain):.4f}")

# a cubic is reproduced exactly from any four sensors that include both ends
x = grid.axis(0)
cubic = x**3 - 0.4 * x
om = np.zeros(grid.c)
om[[0, 6, 13, 20]] = 1.0
print("cubic max error:", np.abs(reconstruct(cubic, SensorWeights(om, grid), spec) - cubic).max())
