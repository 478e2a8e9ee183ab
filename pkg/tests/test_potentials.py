import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from gje import GridPotential, SemiDiscretePotential, grid_axes, preset
from gje.errors import ConfigError

from conftest import BOX, family


def cubic(p):
    p = np.atleast_2d(p)
    return 0.3 * p[:, 0] ** 3 - 0.2 * p[:, 0] * p[:, 1] ** 2 + 0.5 * p[:, 1] ** 2 + 0.1


def test_spline_reproduces_cubics_exactly():
    u = GridPotential.from_function(cubic, grid_axes(BOX, 9))
    x = np.array([0.123, -0.456])
    assert u(x) == pytest.approx(float(cubic(x)[0]), abs=1e-12)
    g = np.array([0.9 * x[0] ** 2 - 0.2 * x[1] ** 2, -0.4 * x[0] * x[1] + x[1]])
    H = np.array([[1.8 * x[0], -0.4 * x[1]], [-0.4 * x[1], -0.4 * x[0] + 1.0]])
    np.testing.assert_allclose(u.gradient(x), g, atol=1e-11)
    np.testing.assert_allclose(u.hessian(x), H, atol=1e-10)


def test_batch_and_single_evaluation_agree(quad_grid):
    pts = np.array([[0.1, 0.2], [-0.3, 0.5]])
    np.testing.assert_allclose(quad_grid(pts), [quad_grid(p) for p in pts])
    assert quad_grid.hessian(pts).shape == (2, 2, 2)


def test_fd_derivatives_on_nodes(quad_grid):
    g = quad_grid.fd_gradient()
    np.testing.assert_allclose(g[..., 0], quad_grid.points()[:, 0].reshape(quad_grid.shape), atol=1e-12)
    H = quad_grid.fd_hessian()
    np.testing.assert_allclose(H[..., 0, 0], 1.0, atol=1e-9)
    np.testing.assert_allclose(H[..., 0, 1], 0.0, atol=1e-9)


grid_values = arrays(np.float64, (5, 6), elements=st.floats(-1e6, 1e6, allow_subnormal=False))


@given(grid_values)
def test_json_and_csv_roundtrip_exactly(vals):
    u = GridPotential((np.linspace(0, 1, 5), np.linspace(-2, 3, 6)), vals)
    for v in (GridPotential.from_json(u.to_json()), GridPotential.from_csv(u.to_csv())):
        assert np.array_equal(v.values, u.values)
        assert all(np.array_equal(a, b) for a, b in zip(v.axes, u.axes))


def test_bad_grids_rejected():
    with pytest.raises(ConfigError):
        GridPotential((np.arange(3.0), np.arange(5.0)), np.zeros((3, 5)))
    with pytest.raises(ConfigError):
        GridPotential((np.arange(4.0), np.arange(5.0)), np.zeros((5, 4)))
    with pytest.raises(ConfigError):
        GridPotential.from_csv("a,b\n1,2\n")


def test_contains_and_shift(quad_grid):
    assert quad_grid.contains(np.array([[0.0, 0.0], [1.2, 0.0]])).tolist() == [True, False]
    assert quad_grid.shifted(1.0)(np.zeros(2)) == pytest.approx(1.0)


def test_cell_centred_axes():
    a0, a1 = grid_axes([[0, 1], [0, 2]], 4, cell_centered=True)
    np.testing.assert_allclose(a0, [0.125, 0.375, 0.625, 0.875])
    np.testing.assert_allclose(a1, [0.25, 0.75, 1.25, 1.75])


def test_semi_discrete_max_and_active_sets():
    gf = family("quad-cost")
    u = SemiDiscretePotential(gf, [[0.5, 0.0], [-0.5, 0.0]], [0.0, 0.0])
    pts = np.array([[0.0, 0.3], [0.4, 0.0]])
    ref = np.max(gf.value(pts[:, None, :], u.ys[None], u.zs[None]), axis=1)
    np.testing.assert_allclose(u(pts), ref, atol=1e-14)
    act = u.active(pts)
    assert act[0].tolist() == [0, 1] and act[1].tolist() == [0]


def test_semi_discrete_generic_family_path():
    gf = family("perturbed-bilinear")
    u = SemiDiscretePotential(gf, [[0.5, 0.0], [-0.5, 0.2]], [0.1, -0.2])
    pts = np.array([[0.2, 0.1], [-0.4, 0.3]])
    np.testing.assert_allclose(u(pts), u.all_values(pts).max(axis=1))


def test_presets():
    assert preset("quadratic", a=2.0, center=[1.0, 0.0])(np.array([[0.0, 0.0]]))[0] == pytest.approx(1.0)
    assert preset("kink", a=3.0)(np.array([[-0.5, 1.0]]))[0] == pytest.approx(1.5)
    gf = family("bilinear")
    f = preset("support", gf, y0=[1.0, 2.0], z0=0.5, perturb=0.1)
    assert f(np.array([[1.0, 1.0]]))[0] == pytest.approx(3.0 - 0.5 + 0.2)
    with pytest.raises(ConfigError):
        preset("nope")
    with pytest.raises(ConfigError):
        preset("support")
