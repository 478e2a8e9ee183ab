import numpy as np
import pytest
from hypothesis import given, strategies as st

from gje.conditions import dp_A
from gje.errors import HypothesisFails
from gje.height import (check_diffseg_bounds, diffint_check, height_trace, kappa, theta_derivatives)
from gje.segments import g_segment

from conftest import family, height_triples, kink_mask


class AnalyticPotential:
    """u(x) = 0.4|x|^2 + 0.1 x0 x1 + 0.05 x0^3 with exact derivatives."""

    def __call__(self, x):
        x = np.atleast_2d(x)
        v = 0.4 * np.sum(x**2, axis=1) + 0.1 * x[:, 0] * x[:, 1] + 0.05 * x[:, 0] ** 3
        return v if len(v) > 1 else float(v[0])

    def gradient(self, x):
        x0, x1 = x
        return np.array([0.8 * x0 + 0.1 * x1 + 0.15 * x0**2, 0.8 * x1 + 0.1 * x0])

    def hessian(self, x):
        return np.array([[0.8 + 0.3 * x[0], 0.1], [0.1, 0.8]])


def test_second_derivative_identity_on_curved_family():
    # h'' = [D^2u - A(x,u0,p0) - D_pA(x,u0,p0).(Du - p0)][x', x'] + c h'
    gf = family("sqrt-cost")
    u = AnalyticPotential()
    y0, z0 = np.array([0.3, -0.2]), 0.1
    seg = g_segment(gf, np.array([-0.5, -0.3]), np.array([0.6, 0.4]), y0, z0, resolution=257)
    h = np.array([u(x) for x in seg.x]) - gf.value(seg.x, y0[None, :], z0)
    dt = seg.theta[1] - seg.theta[0]
    hp, hs = theta_derivatives(h, dt)
    for k in range(8, 250, 24):
        x, v = seg.x[k], seg.xdot[k]
        d = gf.derivs(x, y0, z0, 2)
        u0, p0 = d["g"], d["g_x"]
        Dh = u.gradient(x) - p0
        T = dp_A(gf, x, u0, p0, seed=(y0, z0))
        M = u.hessian(x) - d["g_xx"] - np.einsum("ijk,k->ij", T, Dh)
        exact = float(v @ M @ v) + kappa(gf, x, y0, z0, v) * float(Dh @ v)
        assert hs[k] == pytest.approx(exact, rel=1e-6)
        assert hp[k] == pytest.approx(float(Dh @ v), abs=1e-7)


@pytest.mark.parametrize("idx", [0, 1, 2, 3])
def test_height_inequality_on_fixtures(idx):
    name, gf, u, sup, a, b, kink = height_triples(4)[idx]
    seg = g_segment(gf, a, b, *sup, resolution=65)
    tr = height_trace(gf, u, seg, support=sup)
    m = tr.inequality_margin()
    keep = kink_mask(seg, kink)[tr.interior]
    assert not tr.failures
    assert np.all(m[keep] >= -1e-4)
    assert tr.K_lemma == 0.0          # g_xz = 0 for both families
    np.testing.assert_allclose(tr.h_prime[tr.interior], tr.h_prime_exact[tr.interior], atol=1e-5)


def test_trace_rows_and_dict(bilinear, quad_grid):
    seg = g_segment(bilinear, np.array([-0.5, 0.0]), np.array([0.5, 0.0]), np.zeros(2), 0.0, 9)
    tr = height_trace(bilinear, quad_grid, seg, sigma=0.125)
    assert len(tr.rows()) == 9 and len(tr.rows()[0]) == 5
    assert tr.to_dict()["min_h"] == pytest.approx(-0.125)


positive = st.floats(0.0, 2.0)


@given(positive, st.floats(-1, 1), positive, st.floats(-2, 2), st.integers(5, 59))
def test_sandwich_holds_for_convex_heights(a, m, b, c, t):
    theta = np.linspace(-1, 1, 65)
    h = a * (theta - m) ** 2 + b * np.exp(c * theta) - 0.3
    hp = 2 * a * (theta - m) + b * c * np.exp(c * theta)
    hs = 2 * a + b * c * c * np.exp(c * theta)
    r = check_diffseg_bounds(theta, h, 0.5, t, hprime=hp, hsecond=hs)
    assert r.holds and r.diffint_violations == 0


@given(st.floats(0.1, 3.0))
def test_diffint_is_tight_for_exponential_decay(K):
    theta = np.linspace(0, 1, 41)
    pairs, viol, worst = diffint_check(theta, np.exp(-K * theta), K)
    assert pairs == 41 * 40 // 2 and viol == 0 and worst < 1e-12


def test_sandwich_constants_for_K_zero():
    theta = np.linspace(0, 1, 21)
    r = check_diffseg_bounds(theta, theta.copy(), 0.0, 10, hprime=np.ones(21), hsecond=np.zeros(21))
    assert r.C1 == pytest.approx(4.0) and r.C0 == pytest.approx(4.0)
    assert r.upper == pytest.approx(4.0) and r.holds


def test_sandwich_rejects_hypothesis_violation():
    theta = np.linspace(-1, 1, 33)
    with pytest.raises(HypothesisFails) as exc:
        check_diffseg_bounds(theta, -theta**2, 0.0, 16)
    assert exc.value.witness["K"] == 0.0


def test_zero_branch_reported():
    theta = np.linspace(-1, 1, 33)
    r = check_diffseg_bounds(theta, theta**2, 0.0, 20)
    assert r.zero_branch["taken"] and r.zero_branch["h_prime_a_nonpositive"]
