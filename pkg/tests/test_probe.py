import json

import numpy as np
import pytest

from gje import GridPotential, builtin, grid_axes, preset
from gje.errors import ConfigError, HypothesisFails, SegmentExitsGrid
from gje.probe import (Fixture, c1_check, default_fixtures, set_diameter, strict_convexity_probe,
                       tangent_support, theorem_consistency_suite)
from gje.reports import dumps

from conftest import BOX, WIDE, family

ORIGIN = (np.zeros(2), 0.0)
ENDS = ([-0.5, 0.0], [0.5, 0.0])


@pytest.fixture(scope="module")
def quad_report(quad_grid):
    return strict_convexity_probe(family("bilinear"), quad_grid, ORIGIN, *ENDS)


def test_hand_fixture_constants(quad_report):
    r = quad_report
    # sigma = gap = 1/8 at the endpoints, H = 1/8 at the centre
    assert r.sigma == pytest.approx(0.125) and r.H == pytest.approx(0.125)
    # delta = half the distance of [-1/4, 1/4] x {0} to the boundary of [-1, 1]^2
    assert r.delta == pytest.approx(0.375)
    # x' = (1/2, 0) on every offset segment and D^2u - A = I
    assert r.constant("C_tr") == pytest.approx(4.0)
    assert r.constant("C_b") == pytest.approx(1.0)
    assert r.constant("c_det") == pytest.approx(1.0)
    assert r.integral_I == pytest.approx(0.375)
    # exponent C_tr I C_b / (L^2 c_det) = 6
    assert r.implied_H_lower == pytest.approx(0.375 / np.expm1(6.0), rel=1e-9)
    assert r.verdict == "STRICT"


def test_jensen_and_cofactor_invariants(quad_report):
    r = quad_report
    assert r.W >= r.jensen_bound * (1 - 1e-12)
    assert r.cofactor["failed"] == 0 and r.cofactor["checked"] > 0
    assert not r.lipschitz["capped"]


def test_implied_bound_monotone_in_c(quad_grid):
    gf = family("bilinear")
    lo = strict_convexity_probe(gf, quad_grid, ORIGIN, *ENDS, c=0.5, eps_res=9, theta_res=33)
    hi = strict_convexity_probe(gf, quad_grid, ORIGIN, *ENDS, c=1.0, eps_res=9, theta_res=33)
    assert hi.implied_H_lower > lo.implied_H_lower > 0


def test_flat_segment_is_degenerate():
    gf = family("bilinear")
    u = GridPotential.from_function(lambda p: 0.5 * p[:, 1] ** 2, grid_axes(BOX, 65))
    r = strict_convexity_probe(gf, u, ORIGIN, *ENDS, eps_res=9)
    assert r.H < 1e-8 and r.verdict == "DEGENERATE" and not r.contradiction
    r = strict_convexity_probe(gf, u, ORIGIN, *ENDS, eps_res=9, c=1.0)
    assert r.contradiction


def test_probe_preconditions(quad_grid):
    gf = family("bilinear")
    with pytest.raises(HypothesisFails):
        strict_convexity_probe(gf, quad_grid, (np.zeros(2), -0.5), *ENDS)
    with pytest.raises(HypothesisFails):
        strict_convexity_probe(gf, quad_grid, ORIGIN, *ENDS, sigma=0.01)
    with pytest.raises(SegmentExitsGrid):
        strict_convexity_probe(gf, quad_grid, ORIGIN, *ENDS, delta=2.0, eps_res=5)
    with pytest.raises(ConfigError):
        strict_convexity_probe(gf, quad_grid, ORIGIN, *ENDS, theta_res=10)


def test_tangent_support_of_quadratic(quad_grid):
    y0, z0 = tangent_support(family("bilinear"), quad_grid, np.array([0.2, -0.1]))
    np.testing.assert_allclose(y0, [0.2, -0.1], atol=1e-8)
    assert z0 == pytest.approx(0.025, abs=1e-8)


def test_c1_check_verdicts():
    gf = builtin("bilinear", x_box=WIDE, y_box=[[-4, 4], [-4, 4]])
    ax = grid_axes(WIDE, 48, cell_centered=True)
    smooth = c1_check(gf, GridPotential.from_function(preset("quadratic"), ax), dual_resolution=48)
    assert smooth["verdict"] == "C1_PLAUSIBLE" and smooth["n_witnesses"] == 0
    kink = c1_check(gf, GridPotential.from_function(preset("kink"), ax), dual_resolution=48)
    assert kink["verdict"] == "NOT_C1" and kink["max_diameter"] > 0.4


def test_set_diameter():
    assert set_diameter(np.zeros((1, 2))) == 0.0
    pts = np.column_stack([np.linspace(0, 3, 100), np.zeros(100)])
    assert set_diameter(pts) == pytest.approx(3.0)


def test_suite_rows_name_failed_hypotheses():
    gf = builtin("bilinear", x_box=WIDE, y_box=[[-4, 4], [-4, 4]])
    ax = grid_axes(WIDE, 48, cell_centered=True)
    fx = Fixture("kink", gf, GridPotential.from_function(preset("kink"), ax),
                 [[-0.1, -0.5], [0.1, -0.5], [0.1, 0.5], [-0.1, 0.5]], 0.1, 2.0)
    rep = theorem_consistency_suite([fx], dual_resolution=32)
    row = rep["fixtures"][0]
    r1, r2 = row["implications"]
    assert "lower_bound" in r1["failed_hypotheses"] and not r1["applies"]
    assert r2["failed_hypotheses"] and not r2["violated"]
    assert rep["violations"] == 0
    json.loads(dumps(rep))


def test_default_fixture_set_spans_families():
    fams = {f.gf.name for f in default_fixtures()}
    assert len(default_fixtures()) >= 6
    assert {"bilinear", "quad-cost", "log-cost"} <= fams
