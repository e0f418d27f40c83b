import numpy as np
import pytest

from optsensor import InitialCondition, build_grid, eval_initial_condition
from optsensor.grid import ICKind, raw_maximum


def test_unit_interval_101_points():
    g = build_grid(1, 1.0, 101)
    assert g.h[0] == pytest.approx(1e-2, rel=1e-14)
    assert g.c == 101


def test_two_point_grid_weights():
    g = build_grid(1, 1.0, 2)
    np.testing.assert_array_equal(g.quad_weights, [0.5, 0.5])
    assert g.quad_weights.sum() == 1.0


def test_1d_trapezoid_pattern():
    g = build_grid(1, 2.0, 5)
    np.testing.assert_allclose(g.quad_weights, [0.25, 0.5, 0.5, 0.5, 0.25])


def test_2d_weights_tensor_product():
    g = build_grid(2, (1.0, 1.0), (34, 34))
    assert g.h[0] == pytest.approx(3e-2, rel=0.02)
    assert g.c == 34 * 34
    assert g.quad_weights.sum() == pytest.approx(1.0, rel=1e-12)
    w1 = np.full(34, 1 / 33)
    w1[[0, -1]] /= 2
    np.testing.assert_allclose(g.quad_weights.reshape(34, 34), np.outer(w1, w1), rtol=1e-14)


@pytest.mark.parametrize("extent,n", [(1.0, 11), (3.5, 40), ((2.0, 0.5), (9, 13))])
def test_weights_integrate_constants(extent, n):
    dim = 2 if isinstance(n, tuple) else 1
    g = build_grid(dim, extent, n)
    assert g.quad_weights @ np.ones(g.c) == pytest.approx(g.measure, rel=1e-12)


def test_weights_integrate_linear_exactly():
    g = build_grid(1, 1.0, 17)
    x = g.axis(0)
    assert g.quad_weights @ (3 * x + 1) == pytest.approx(2.5, rel=1e-14)


@pytest.mark.parametrize("n", [1, 0])
def test_degenerate_mesh_rejected(n):
    with pytest.raises(ValueError):
        build_grid(1, 1.0, n)


def test_nonpositive_extent_rejected():
    with pytest.raises(ValueError):
        build_grid(1, 0.0, 5)


def test_2d_flattening_is_x_fastest():
    g = build_grid(2, (1.0, 2.0), (3, 5))
    x, y = g.coordinates()
    assert g.shape == (5, 3)
    np.testing.assert_allclose(x[:3], [0, 0.5, 1])
    np.testing.assert_allclose(y[::3], np.linspace(0, 2, 5))


def test_heaviside_values_and_tie():
    g = build_grid(1, 1.0, 101)
    u = eval_initial_condition(InitialCondition("heaviside_half"), g)
    x = g.axis(0)
    np.testing.assert_array_equal(u[x < 0.5], 0.0)
    np.testing.assert_array_equal(u[x >= 0.5], 1.0)
    assert u[50] == 1.0  # x = 0.5 exactly


def test_poly_half_roots():
    ic = InitialCondition("poly1d_half")
    np.testing.assert_array_equal(ic(np.array([0.0, 0.5, 1.0])), 0.0)


def _dense_scan_max(f):
    xs = np.linspace(0.0, 1.0, 1_000_001)  # 1e-6 resolution
    return f(xs).max()


@pytest.mark.parametrize("kind", ["poly1d_half", "poly1d_quarter", "poly1d_neg_half"])
def test_raw_maximum_matches_dense_scan(kind):
    ic = InitialCondition(kind, normalize=False)
    assert raw_maximum(kind) == pytest.approx(_dense_scan_max(ic.raw), rel=1e-9)


def test_poly_half_peak_closed_form():
    # peak of u^2 (u^2 - 1/4)^2 at u^2 = 1/12
    assert raw_maximum("poly1d_half") == pytest.approx(1 / 432, rel=1e-12)
    x_star = 0.5 - 1 / (2 * np.sqrt(3))
    assert InitialCondition("poly1d_half")(np.array([x_star]))[0] == pytest.approx(1.0, abs=1e-12)


def test_poly2d_peak():
    assert raw_maximum(ICKind.POLY2D) == pytest.approx(1 / 256, rel=1e-12)
    g = build_grid(2, (1, 1), (35, 35))  # includes (1/2, 1/2)
    u = eval_initial_condition(InitialCondition("poly2d"), g)
    assert u.max() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("kind", [k for k in ICKind if k is not ICKind.POLY2D])
def test_normalized_range_on_grid(kind):
    g = build_grid(1, 1.0, 101)
    u = eval_initial_condition(InitialCondition(kind), g)
    assert u.min() >= 0
    # the grid may miss the continuous argmax by O(h^2)
    assert 0.99 <= u.max() <= 1.0 + 1e-12


def test_unnormalized_is_raw():
    g = build_grid(1, 1.0, 11)
    u = eval_initial_condition(InitialCondition("poly1d_neg_half", normalize=False), g)
    x = g.axis(0)
    np.testing.assert_allclose(u, x**2 * (x - 1) ** 2 * (x + 0.5) ** 2)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        eval_initial_condition(InitialCondition("poly2d"), build_grid(1, 1.0, 11))
    with pytest.raises(ValueError):
        eval_initial_condition(InitialCondition("poly1d_half"), build_grid(2, 1.0, 5))
