import numpy as np
import pytest
from hypothesis import given, strategies as st

from gje.errors import SegmentExitsDomain
from gje.height import theta_derivatives
from gje.segments import g_segment, is_g_convex_set, q_of, segment_velocity

from conftest import family

coord = st.floats(-0.7, 0.7)


@given(coord, coord, coord, coord)
def test_bilinear_segments_are_straight(a, b, c, d):
    gf = family("bilinear")
    x0, x1 = np.array([a, b]), np.array([c, d])
    seg = g_segment(gf, x0, x1, np.zeros(2), 0.0, resolution=9)
    ref = x0 + seg.theta[:, None] * (x1 - x0)
    np.testing.assert_allclose(seg.x, ref, atol=1e-12)
    np.testing.assert_allclose(seg.xdot, np.broadcast_to(x1 - x0, seg.xdot.shape), atol=1e-12)


@pytest.mark.parametrize("name", ["sqrt-cost", "log-cost", "perturbed-bilinear"])
def test_q_is_affine_and_velocity_matches_fd(name):
    gf = family(name)
    g = gf.gamma
    c = 0.5 * (g.x_lo + g.x_hi)
    r = 0.3 * (g.x_hi - g.x_lo)
    y0 = 0.5 * (g.y_lo + g.y_hi) + 0.1
    lo, hi = g.z_interval(c, y0)
    z0 = 0.5 * (max(lo, -2) + min(hi, 2))
    seg = g_segment(gf, c - r, c + r * np.array([1.0, -0.5]), y0, z0, resolution=65)
    q = np.array([q_of(gf, x, y0, z0) for x in seg.x])
    np.testing.assert_allclose(q, seg.q0 + seg.theta[:, None] * seg.q, atol=1e-11)
    dt = seg.theta[1] - seg.theta[0]
    fd = np.column_stack([theta_derivatives(seg.x[:, i], dt)[0] for i in range(2)])
    np.testing.assert_allclose(fd[2:-2], seg.xdot[2:-2], rtol=1e-5, atol=1e-6)
    p = gf.fiber_point(seg.x[10], y0, z0)
    np.testing.assert_allclose(segment_velocity(gf, p, seg.q), seg.xdot[10], atol=1e-10)
    assert seg.max_residual < 1e-10


def test_segment_leaving_box_is_reported():
    gf = family("bilinear")
    with pytest.raises(SegmentExitsDomain) as exc:
        g_segment(gf, np.array([0.5, 0.0]), np.array([1.5, 0.0]), np.zeros(2), 0.0)
    assert exc.value.theta == 1.0


def test_square_is_convex_L_shape_is_not():
    gf = family("bilinear")
    ys, zs = np.zeros((1, 2)), np.array([0.0])
    square = [[0, 0], [0.5, 0], [0.5, 0.5], [0, 0.5]]
    assert is_g_convex_set(gf, square, ys, zs).verdict == "PASS"
    L = [[0, 0], [0.6, 0], [0.6, 0.2], [0.2, 0.2], [0.2, 0.6], [0, 0.6]]
    v = is_g_convex_set(gf, L, ys, zs)
    assert v.verdict == "FAIL"
    w = v.witness
    assert w["reason"] == "segment leaves the region" and 0 < w["theta"] < 1


def test_rows_and_header():
    gf = family("quad-cost")
    seg = g_segment(gf, np.zeros(2), np.array([0.2, 0.1]), np.zeros(2), 0.0, resolution=5)
    assert seg.header() == ["theta", "x0", "x1", "xdot0", "xdot1"]
    assert len(seg.to_rows()) == 5 and len(seg.to_rows()[0]) == 5


def test_sliver_region_without_interior_samples():
    gf = family("bilinear")
    sliver = [[0, 0], [0.5, 0], [0.5, 1e-12]]
    v = is_g_convex_set(gf, sliver, np.zeros((1, 2)), np.array([0.0]), n_interior=4)
    assert v.verdict in ("PASS", "FAIL")
