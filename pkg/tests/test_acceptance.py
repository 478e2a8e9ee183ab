"""End-to-end acceptance checks; each test records one PASS/FAIL line."""

import time

import numpy as np
import pytest

from gje import GridPotential, builtin, grid_axes, preset
from gje.conditions import scan_conditions, scan_points
from gje.duality import dual_g, solve_YZ
from gje.genfun import FAMILIES
from gje.height import check_diffseg_bounds, height_trace
from gje.mate import check_E_is_DpY, dy_consistency
from gje.measure import gma_measure_nonsmooth, gma_measure_smooth
from gje.probe import c1_check, strict_convexity_probe, theorem_consistency_suite
from gje.reports import dumps
from gje.segments import g_segment

from conftest import BOX, WIDE, family, height_triples, interior_sample, kink_mask, record

UNIT = [[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]]
BAND = [[-0.1, -0.5], [0.1, -0.5], [0.1, 0.5], [-0.1, 0.5]]


@pytest.fixture(scope="module")
def wide_bilinear():
    return builtin("bilinear", x_box=WIDE, y_box=[[-4, 4], [-4, 4]])


def cc_grid(f):
    return GridPotential.from_function(f, grid_axes(WIDE, 96, cell_centered=True))


@pytest.mark.parametrize("name", FAMILIES)
def test_criterion_01_dual_involution(name):
    gf = family(name)
    rng = np.random.default_rng(101)
    samples = [interior_sample(gf, rng) for _ in range(1000)]
    t0 = time.perf_counter()
    worst = 0.0
    for x, y, z in samples:
        u = float(gf.value(x, y, z))
        w = dual_g(gf, x, y, u)
        worst = max(worst, abs(w - z), abs(float(gf.value(x, y, w)) - u))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-10 and elapsed < 5.0
    record(f"01 [{name}]", ok, f"dual involution worst {worst:.2e} over 1000 samples in {elapsed:.2f} s")
    assert ok


def test_criterion_02_contact_closed_forms():
    rng = np.random.default_rng(102)
    bil, qc = family("bilinear"), family("quad-cost")
    wb = wq = 0.0
    for _ in range(1000):
        x = rng.uniform(-0.8, 0.8, 2)
        p = rng.uniform(-1.5, 1.5, 2)
        u = rng.uniform(-1.0, 1.0)
        s = solve_YZ(bil, x, u, p)
        wb = max(wb, np.max(np.abs(s.y - p)), abs(s.z - (x @ p - u)))
        s = solve_YZ(qc, x, -0.1, p)
        wq = max(wq, np.max(np.abs(s.y - (x + p))))
    ok = wb < 1e-12 and wq < 1e-10
    record("02", ok, f"bilinear Y/Z error {wb:.2e}, quad-cost Y error {wq:.2e} over 1000 samples")
    assert ok


def test_criterion_03_jacobian_identities():
    ax = grid_axes(BOX, 65)
    u = GridPotential.from_function(
        lambda p: 0.3 * np.sum(p**2, axis=1) + 0.1 * p[:, 0] ** 3 + 0.05 * p[:, 0] * p[:, 1], ax)
    rng = np.random.default_rng(103)
    pts = rng.uniform(-0.7, 0.7, (40, 2))
    dy = max(dy_consistency(family(n), u, pts)[0] for n in ("quad-cost", "sqrt-cost"))
    worst = 0.0
    for name in FAMILIES:
        gf = family(name)
        g = gf.gamma
        for _ in range(40):
            x = g.x_lo + (g.x_hi - g.x_lo) * (0.2 + 0.6 * rng.random(2))
            y = g.y_lo + (g.y_hi - g.y_lo) * (0.3 + 0.4 * rng.random(2))
            lo, hi = g.z_interval(x, y)
            z = lo + (hi - lo) * 0.5 if np.isfinite(hi - lo) else 0.0
            z = min(max(z, max(lo, -2.0)), min(hi, 2.0))
            d = gf.derivs(x, y, z, 1)
            worst = max(worst, check_E_is_DpY(gf, x, d["g"], d["g_x"], seed=(y, z)))
    ok = dy < 1e-3 and worst < 1e-5
    record("03", ok, f"DY relative error {dy:.2e} on a 65x65 grid, E^-1 vs DpY {worst:.2e} on 200 samples")
    assert ok


def test_criterion_04_height_inequality():
    total = good = kept = kept_good = 0
    for name, gf, u, sup, a, b, kink in height_triples(20):
        seg = g_segment(gf, a, b, *sup, resolution=65)
        tr = height_trace(gf, u, seg, support=sup)
        m = tr.inequality_margin()
        ok_m = m >= -1e-4
        keep = kink_mask(seg, kink)[tr.interior]
        total += m.size
        good += int(ok_m.sum())
        kept += int(keep.sum())
        kept_good += int(ok_m[keep].sum())
    frac, frac_kept = good / total, kept_good / kept
    ok = frac >= 0.99 and frac_kept == 1.0
    record("04", ok, f"h'' >= rhs at {frac:.2%} of {total} samples, {frac_kept:.2%} away from kinks")
    assert ok


def test_criterion_05_derivative_sandwich():
    fixtures = [f for f in height_triples(20) if f[-1] is None]
    assert len(fixtures) == 10
    pairs = viol = 0
    holds = True
    for name, gf, u, sup, a, b, _ in fixtures:
        seg = g_segment(gf, a, b, *sup, resolution=65)
        tr = height_trace(gf, u, seg, support=sup)
        r = check_diffseg_bounds(tr.theta, tr.h, tr.K_lemma, len(tr.theta) // 2,
                                 hprime=tr.h_prime, hsecond=tr.h_second, tol=1e-8)
        pairs += r.diffint_pairs
        viol += r.diffint_violations
        holds &= r.holds
    ok = holds and viol == 0
    record("05", ok, f"sandwich holds on 10 fixtures, {viol} pairwise violations of {pairs}")
    assert ok


@pytest.mark.parametrize("name", ["bilinear", "quad-cost"])
def test_criterion_06_condition_scans(name):
    gf = family(name)
    pts = scan_points(gf, 4)[:1000]
    t0 = time.perf_counter()
    rep = scan_conditions(gf, points=pts, directions=20, seed=6)
    elapsed = time.perf_counter() - t0
    ok = (len(pts) == 1000 and rep.n_pairs >= 20 and rep.n_skipped == 0
          and abs(rep.worst_A3w) <= 1e-6 and abs(rep.worst_A4w) <= 1e-6 and elapsed < 30)
    record(f"06 [{name}]", ok, f"worst A3w {rep.worst_A3w:.1e}, A4w {rep.worst_A4w:.1e}, "
                               f"{len(pts)} points x {rep.n_pairs} pairs in {elapsed:.1f} s")
    assert ok


def test_criterion_07_measure(wide_bilinear):
    smooth, box = [], []
    for a in (0.5, 1.0, 2.0):
        u = cc_grid(preset("quadratic", a=a))
        smooth.append(gma_measure_smooth(wide_bilinear, u, UNIT).ratio / a**2 - 1)
        box.append(gma_measure_nonsmooth(wide_bilinear, u, UNIT, dual_resolution=256).ratio / a**2 - 1)
    band = gma_measure_nonsmooth(wide_bilinear, cc_grid(preset("kink")), BAND,
                                 resolutions=[64, 128, 256])
    seq = [m / band.area_E for m in band.details["mu_sequence"]]
    trend = all(b <= a + 1e-12 for a, b in zip(seq, seq[1:]))
    ok = (max(map(abs, smooth)) < 0.02 and max(map(abs, box)) < 0.05 and seq[-1] < 0.05 and trend)
    record("07", ok, f"smooth error {max(map(abs, smooth)):.1e}, box error {max(map(abs, box)):.1e}, "
                     f"kink band ratios {', '.join(f'{s:.3g}' for s in seq)}")
    assert ok


def test_criterion_08_probe(quad_grid):
    gf = family("bilinear")
    ends = ([-0.5, 0.0], [0.5, 0.0])
    t0 = time.perf_counter()
    strict = strict_convexity_probe(gf, quad_grid, (np.zeros(2), 0.0), *ends, c=1.0)
    flat_u = GridPotential.from_function(lambda p: 0.5 * p[:, 1] ** 2, grid_axes(BOX, 65))
    flat = strict_convexity_probe(gf, flat_u, (np.zeros(2), 0.0), *ends)
    elapsed = time.perf_counter() - t0
    cof = all(r.cofactor["failed"] == 0 and r.cofactor["checked"] > 0 for r in (strict, flat))
    ok = (strict.verdict == "STRICT" and strict.H >= strict.implied_H_lower > 0
          and flat.H < 1e-8 and flat.verdict == "DEGENERATE" and cof and elapsed < 60)
    record("08", ok, f"quadratic {strict.verdict} H={strict.H:.3g} >= {strict.implied_H_lower:.3g}, "
                     f"flat {flat.verdict} H={flat.H:.1e}, cofactor ok={cof}, {elapsed:.1f} s")
    assert ok


def test_criterion_09_c1_check(wide_bilinear):
    smooth = c1_check(wide_bilinear, cc_grid(preset("quadratic")), dual_resolution=128)
    kink = c1_check(wide_bilinear, cc_grid(preset("kink")), dual_resolution=128)
    ok = (smooth["verdict"] == "C1_PLAUSIBLE" and smooth["n_witnesses"] == 0
          and kink["verdict"] == "NOT_C1" and kink["max_diameter"] > 0.4)
    record("09", ok, f"quadratic {smooth['verdict']} ({smooth['n_witnesses']} witnesses), "
                     f"kink {kink['verdict']} max diameter {kink['max_diameter']:.3g}")
    assert ok


@pytest.fixture(scope="module")
def suite_runs():
    out = []
    for _ in range(2):
        t0 = time.perf_counter()
        rep = theorem_consistency_suite(seed=7)
        out.append((rep, time.perf_counter() - t0))
    return out


def test_criterion_10_suite(suite_runs):
    rep, elapsed = suite_runs[0]
    named = all(imp["failed_hypotheses"] for row in rep["fixtures"] for imp in row["implications"]
                if not imp["applies"])
    ok = rep["n_fixtures"] >= 6 and rep["violations"] == 0 and named and elapsed < 300
    record("10", ok, f"{rep['n_fixtures']} fixtures, {rep['violations']} violations, "
                     f"failed hypotheses named={named}, {elapsed:.0f} s")
    assert ok


def test_criterion_11_determinism(suite_runs):
    first, second = (dumps(r) for r, _ in suite_runs)
    ok = first == second
    record("11", ok, f"two suite runs with seed 7 give identical JSON ({len(first)} bytes)")
    assert ok
