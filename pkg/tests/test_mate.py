import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from gje import GridPotential, grid_axes
from gje.errors import SingularMatrix
from gje.genfun import DomainBox, FunctionFamily
from gje.mate import (DY_from_hessian, check_E_is_DpY, coeff_A, contact_field, dy_consistency,
                      matrix_E, mate_coefficients)

from conftest import BOX, family


def test_log_cost_A_against_sympy(logcost):
    x0, x1, y0, y1 = sp.symbols("x0 x1 y0 y1", real=True)
    g = -sp.log(sp.sqrt((x0 - y0) ** 2 + (x1 - y1) ** 2))
    x, p = np.zeros(2), np.array([0.5, 0.0])
    # g_x = (y - x)/|y - x|^2 = p gives y = x + p/|p|^2
    y = x + p / (p @ p)
    subs = {x0: x[0], x1: x[1], y0: y[0], y1: y[1]}
    ref = np.array([[float(sp.diff(g, a, b).subs(subs)) for b in (x0, x1)] for a in (x0, x1)])
    np.testing.assert_allclose(coeff_A(logcost, x, -1.0, p), ref, atol=1e-10)
    np.testing.assert_allclose(ref, np.diag([0.25, -0.25]), atol=1e-14)


def test_constant_A_families(bilinear, quadcost):
    x, p = np.array([0.1, 0.3]), np.array([0.2, -0.4])
    np.testing.assert_allclose(coeff_A(bilinear, x, 0.1, p), 0.0, atol=1e-14)
    np.testing.assert_allclose(coeff_A(quadcost, x, 0.1, p), -np.eye(2), atol=1e-12)


def test_B_is_det_E_times_density(bilinear):
    mc = mate_coefficients(bilinear, np.zeros(2), 0.0, np.array([0.5, 0.5]))
    assert mc.B() == pytest.approx(1.0)
    assert mc.B(lambda x, u, p: 3.0) == pytest.approx(3.0)


def test_singular_E_raises():
    gamma = DomainBox.from_bounds([[-1, 1], [-1, 1]], [[-1, 1], [-1, 1]], [-2, 2])
    gf = FunctionFamily(lambda x, y, z: (x[0] + x[1]) * (y[0] + y[1]) - z, 2, gamma)
    with pytest.raises(SingularMatrix):
        matrix_E(gf, gf.fiber_point(np.zeros(2), np.zeros(2), 0.0))


@pytest.mark.parametrize("name", ["bilinear", "quad-cost", "sqrt-cost", "log-cost",
                                  "perturbed-bilinear"])
def test_E_inverse_is_DpY(name):
    gf = family(name)
    rng = np.random.default_rng(5)
    g = gf.gamma
    for _ in range(5):
        x = g.x_lo + (g.x_hi - g.x_lo) * (0.2 + 0.6 * rng.random(2))
        y = g.y_lo + (g.y_hi - g.y_lo) * (0.3 + 0.4 * rng.random(2))
        lo, hi = g.z_interval(x, y)
        z = 0.5 * (max(lo, -2) + min(hi, 2))
        d = gf.derivs(x, y, z, 1)
        assert check_E_is_DpY(gf, x, d["g"], d["g_x"], seed=(y, z)) < 1e-5


@given(st.floats(0.2, 2.0), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_DY_quad_cost_identity(a, x0, x1):
    gf = family("quad-cost")
    x = np.array([x0, x1])
    H = np.array([[a, 0.1], [0.1, a]])
    DY, det = DY_from_hessian(gf, x, -0.1, 0.2 * x, H)
    # Y = x + p, so DY = I + D^2u
    np.testing.assert_allclose(DY, np.eye(2) + H, atol=1e-10)
    assert det == pytest.approx(np.linalg.det(np.eye(2) + H))


def test_dy_consistency_on_grid(quadcost):
    u = GridPotential.from_function(lambda p: 0.3 * np.sum(p**2, axis=1) + 0.1 * p[:, 0] ** 3,
                                    grid_axes(BOX, 65))
    pts = np.array([[0.1, 0.2], [-0.3, 0.4], [0.5, -0.5]])
    worst, errs = dy_consistency(quadcost, u, pts)
    assert worst < 1e-3 and len(errs) == 3


def test_contact_field_bilinear(bilinear, quad_grid):
    pts = np.array([[0.1, 0.2], [0.3, -0.4]])
    states = contact_field(bilinear, quad_grid, pts)
    for p, s in zip(pts, states):
        np.testing.assert_allclose(s.y, p, atol=1e-8)
