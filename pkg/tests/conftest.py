import numpy as np
import pytest

from optsensor import (CostParams, Dense2, InitialCondition, PdeModel, ReconstructionSpec,
                       SensorWeights, build_grid, simulate)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def toy_heat():
    """c=7 heat trajectory, a random affine predictor and weights away from 0.5."""
    grid = build_grid(1, 1.0, 7)
    traj = simulate(PdeModel("heat1d", 1e-3), InitialCondition("poly1d_quarter"), grid, 0.5, 6)
    r = np.random.default_rng(7)
    model = Dense2(r.normal(size=(7, 7)) * 0.4, r.normal(size=7) * 0.1,
                   r.normal(size=(7, 7)) * 0.4, r.normal(size=7) * 0.1)
    omega = np.array([0.9, 0.1, 0.8, 0.3, 0.95, 0.2, 0.7])
    w = SensorWeights(omega, grid)
    return traj, w, model, ReconstructionSpec(), CostParams.for_trajectory(traj, 0.7)


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
