"""Quantitative strict g-convexity probe in 2D and the C^1 check through the
dual transform, plus a harness running both against measure and condition
verdicts on a set of fixtures.

Probe chain (theta in [-1, 1] parametrises the base g-segment):

1. h_sigma = u - g(., y0, z0) - sigma along the base segment; H = -min h_sigma.
2. Offset g-segments join x_{-1/2} + eps*eta to x_{1/2} + eps*eta, eps in [0, delta].
3. On theta in [-1/4, 1/4] (half-length L = 1/2) the integrals
   I = int int tr(D^2u - A),  int b with b = (D^2u - A)[x', x'],
   and the cofactor bound a_eta >= det(D^2u - A) |x'|^2 / b give
   I >= (c_det L^2 / (C_tr C_b)) log((delta + H) / H),
   hence H >= delta / (exp(C_tr I C_b / (L^2 c_det)) - 1).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.spatial import ConvexHull
from scipy.spatial.distance import pdist

from .duality import default_dual_box, dual_grid, g_star_transform, solve_YZ
from .errors import ConfigError, GJEError, HypothesisFails, SegmentExitsDomain, SegmentExitsGrid
from .genfun import matrix_E_from
from .kernels import polygon_area
from .segments import g_segment

DEGENERATE_H = 1e-8
L_HALF = 0.5


@dataclass
class ProbeReport:
    support: tuple
    x_m1: list
    x_1: list
    sigma: float
    H: float
    theta_min: float
    max_h_sigma: float
    delta: float
    integral_I: float
    W: float
    jensen_bound: float
    implied_H_lower: float
    verdict: str
    constants: list
    cofactor: dict
    lipschitz: dict
    n_non_elliptic: int
    contradiction: bool
    reason: str
    resolutions: dict
    traces: dict = field(default_factory=dict, repr=False)

    def constant(self, name):
        for c in self.constants:
            if c["name"] == name:
                return c["value"]
        raise KeyError(name)

    def to_dict(self):
        d = {k: v for k, v in self.__dict__.items() if k != "traces"}
        d["support"] = {"y0": np.asarray(self.support[0]).tolist(), "z0": float(self.support[1])}
        return d


def tangent_support(gf, u, x):
    """(y0, z0) = (Y, Z)(x, u(x), Du(x)) from the potential's spline."""
    x = np.asarray(x, float)
    st = solve_YZ(gf, x, u(x), u.gradient(x))
    return st.y, st.z


def _rot90(v):
    return np.array([-v[1], v[0]])


def _trapz(y, x):
    return float(trapezoid(y, x))


def strict_convexity_probe(gf, u, support, x_m1, x_1, sigma=None, delta=None, c=None,
                           theta_res=129, eps_res=33, slack=0.05, lip_cap=10.0,
                           support_tol=1e-8):
    """Run the quantitative strict-convexity chain for one support and segment."""
    if gf.dim != 2:
        raise ConfigError("the probe is two-dimensional")
    if theta_res % 4 != 1 or theta_res < 9:
        raise ConfigError("theta_res must be 1 mod 4 and at least 9")
    y0, z0 = np.asarray(support[0], float), float(support[1])
    x_m1 = np.asarray(x_m1, float)
    x_1 = np.asarray(x_1, float)

    gap_grid = u.values.ravel() - gf.value(u.points(), y0[None, :], z0)
    if gap_grid.min() < -support_tol * max(1.0, np.abs(u.values).max()):
        k = int(np.argmin(gap_grid))
        raise HypothesisFails("u is not above the support on the grid",
                              witness={"x": u.points()[k].tolist(), "gap": float(gap_grid[k])})
    gaps = [float(u(x) - gf.value(x, y0, z0)) for x in (x_m1, x_1)]
    if sigma is None:
        sigma = max(gaps)
    if sigma < max(gaps) - support_tol:
        raise HypothesisFails("sigma is below an endpoint gap", witness={"gaps": gaps, "sigma": sigma})

    # (a) base segment and H
    base = _segment_in_grid(gf, u, x_m1, x_1, y0, z0, theta_res, eps=0.0)
    theta = -1.0 + 2.0 * base.theta
    h = u(base.x) - gf.value(base.x, y0[None, :], z0) - sigma
    kmin = int(np.argmin(h))
    H = max(0.0, -float(h[kmin]))
    q1, q3 = (theta_res - 1) // 4, 3 * (theta_res - 1) // 4
    mid_x = base.x[q1:q3 + 1]
    if delta is None:
        lo, hi = u.bounds[:, 0], u.bounds[:, 1]
        dist = np.minimum(mid_x - lo, hi - mid_x).min()
        delta = 0.5 * float(dist)
    if not delta > 0:
        raise ConfigError("delta must be positive")

    # (b) offset segments
    t_m, t_p = base.xdot[q1], base.xdot[q3]
    eta_m = _rot90(t_m / np.linalg.norm(t_m))
    eta_p = _rot90(t_p / np.linalg.norm(t_p))
    eps_grid = np.linspace(0.0, delta, eps_res)
    n_off = (theta_res - 1) // 2 + 1            # same theta step as the base segment
    theta_off = np.linspace(-0.5, 0.5, n_off)
    inner = np.abs(theta_off) <= 0.25 + 1e-12
    th_in = theta_off[inner]

    trace = np.zeros(eps_res)
    a_eta_int = np.zeros(eps_res)
    harm = np.zeros(eps_res)
    b_int = np.zeros(eps_res)
    C_tr = 0.0
    C_diff = 0.0
    C_lip = 0.0
    min_det = np.inf
    min_abs_detE = np.inf
    jac_max = 0.0
    n_nonell = 0
    cof_checked = cof_fail = 0
    prev_off = None
    for k, eps in enumerate(eps_grid):
        seg = _segment_in_grid(gf, u, base.x[q1] + eps * eta_m, base.x[q3] + eps * eta_p,
                               y0, z0, n_off, eps=eps)
        xs = seg.x
        xd = seg.xdot                 # d/dtheta equals d/ds on a unit-length range
        if eps > 0:
            C_lip = max(C_lip, float(np.max(np.linalg.norm(xs - mid_x, axis=1)) / eps))
        if prev_off is not None:
            de = eps - eps_grid[k - 1]
            dxe = (xs - prev_off) / de
            jac = np.abs(xd[:, 0] * dxe[:, 1] - xd[:, 1] * dxe[:, 0])
            jac_max = max(jac_max, float(jac.max()))
        prev_off = xs
        grads = u.gradient(xs)
        hs = u(xs) - gf.value(xs, y0[None, :], z0) - sigma
        dh = np.array([float((p - gf.derivs(x, y0, z0, 1)["g_x"]) @ v)
                       for x, p, v in zip(xs, grads, xd)])
        C_diff = max(C_diff, float(np.max(np.abs(dh[inner]))) / (eps + H) if eps + H > 0 else np.inf)

        pts = xs[inner]
        vels = xd[inner]
        hess = u.hessian(pts)
        tr_k, aeta_k, b_k, inv_k = [], [], [], []
        seed = (y0, z0)
        for x, v, Hs in zip(pts, vels, hess):
            st = solve_YZ(gf, x, u(x), u.gradient(x), seed=seed)
            seed = (st.y, st.z)
            d = gf.derivs(st.x, st.y, st.z, 2)
            M = Hs - 0.5 * (d["g_xx"] + d["g_xx"].T)
            min_abs_detE = min(min_abs_detE, abs(float(np.linalg.det(matrix_E_from(d)))))
            speed2 = float(v @ v)
            xi = v / np.sqrt(speed2)
            eta = _rot90(xi)
            a_xi = float(xi @ M @ xi)
            a_eta = float(eta @ M @ eta)
            det = float(np.linalg.det(M))
            min_det = min(min_det, det)
            C_tr = max(C_tr, 1.0 / speed2)
            if a_xi <= 0 or a_eta <= 0 or det <= 0:
                n_nonell += 1
            else:
                cof_checked += 1
                if a_xi * a_eta < det * (1 - 1e-12) - 1e-14:
                    cof_fail += 1
            tr_k.append(float(np.trace(M)))
            aeta_k.append(a_eta / speed2)
            b_k.append(a_xi * speed2)
            inv_k.append(speed2 / a_eta if a_eta > 0 else np.inf)
        trace[k] = _trapz(tr_k, th_in)
        a_eta_int[k] = _trapz(aeta_k, th_in)
        b_int[k] = _trapz(b_k, th_in)
        inv = _trapz(inv_k, th_in)
        harm[k] = 1.0 / inv if np.isfinite(inv) and inv > 0 else 0.0

    I = _trapz(trace, eps_grid)
    W = _trapz(a_eta_int, eps_grid)
    jensen = L_HALF**2 * _trapz(harm, eps_grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        C_b = float(np.max(b_int / (eps_grid + H))) if H > 0 else (
            float(np.max(b_int[1:] / eps_grid[1:])) if b_int[0] <= 0 else np.inf)
    if c is not None:
        c_det = float(c) * min_abs_detE
        c_src = "c * min |det E| over samples"
    else:
        c_det = max(0.0, float(min_det))
        c_src = "min det(D^2u - A) over samples"
    implied = _implied_H(delta, I, C_tr, C_b, c_det)

    if H < DEGENERATE_H:
        verdict, reason = "DEGENERATE", "u coincides with the support along the segment"
    elif n_nonell:
        verdict, reason = "INCONCLUSIVE", f"{n_nonell} non-elliptic samples"
    elif implied > 0 and H >= implied * (1 - slack):
        verdict, reason = "STRICT", "measured H is above the implied lower bound"
    else:
        verdict, reason = "INCONCLUSIVE", "implied lower bound is zero or exceeds H"
    contradiction = bool(H < DEGENERATE_H and implied > 0)
    if contradiction:
        reason += "; the integral bound forces H > 0, contradicting H = 0"

    constants = [
        {"name": "C_tr", "value": C_tr, "formula": "max over samples of 1 / |x'|^2"},
        {"name": "C_b", "value": C_b, "formula": "max over eps of int b dtheta / (eps + H)"},
        {"name": "C_diff", "value": C_diff, "formula": "max |dh/dtheta| / (eps + H) on [-1/4, 1/4]"},
        {"name": "C_lip", "value": C_lip, "formula": "max |x_theta^eps - x_theta| / eps"},
        {"name": "c_det", "value": c_det, "formula": c_src},
        {"name": "min_det_D2u_minus_A", "value": float(min_det), "formula": "min over samples"},
        {"name": "min_abs_detE", "value": float(min_abs_detE), "formula": "min over samples"},
        {"name": "jacobian_max", "value": jac_max,
         "formula": "max |det d(x)/d(theta, eps)| of the offset family"},
        {"name": "L", "value": L_HALF, "formula": "half-length of [-1/4, 1/4]"},
    ]
    return ProbeReport(
        support=(y0, z0), x_m1=x_m1.tolist(), x_1=x_1.tolist(), sigma=float(sigma), H=H,
        theta_min=float(theta[kmin]), max_h_sigma=float(h.max()), delta=float(delta),
        integral_I=I, W=W, jensen_bound=jensen, implied_H_lower=implied, verdict=verdict,
        constants=constants,
        cofactor={"checked": cof_checked, "failed": cof_fail},
        lipschitz={"C_lip": C_lip, "cap": lip_cap, "capped": bool(C_lip > lip_cap)},
        n_non_elliptic=n_nonell, contradiction=contradiction, reason=reason,
        resolutions={"theta": theta_res, "eps": eps_res},
        traces={"theta": theta, "h_sigma": h, "eps": eps_grid, "b_int": b_int, "trace": trace})


def _implied_H(delta, I, C_tr, C_b, c_det):
    """Solve int_0^delta dE / (E + H) = C_tr I C_b / (L^2 c_det) for H."""
    if c_det <= 0 or not np.isfinite(C_b) or not np.isfinite(I):
        return 0.0
    expo = C_tr * I * C_b / (L_HALF**2 * c_det)
    if expo > 700:
        return 0.0
    if expo <= 0:
        return np.inf
    return float(delta / np.expm1(expo))


def _segment_in_grid(gf, u, a, b, y0, z0, res, eps):
    try:
        seg = g_segment(gf, a, b, y0, z0, res, box_check=False)
    except SegmentExitsDomain as exc:
        raise SegmentExitsGrid(str(exc), exc.theta, exc.point) from None
    inside = u.contains(seg.x)
    if not inside.all():
        k = int(np.argmin(inside))
        raise SegmentExitsGrid(f"segment leaves the grid (eps={eps:.6g})",
                               float(seg.theta[k]), {"eps": float(eps), "x": seg.x[k].tolist()})
    return seg


# ---------------------------------------------------------------------------
# C^1 check


def set_diameter(pts):
    pts = np.asarray(pts, float)
    if len(pts) < 2:
        return 0.0
    if len(pts) > 64:
        try:
            pts = pts[ConvexHull(pts).vertices]
        except Exception:  # collinear sets have no 2D hull
            lo, hi = pts.min(axis=0), pts.max(axis=0)
            return float(np.linalg.norm(hi - lo))
    return float(pdist(pts).max())


def c1_check(gf, u, dual_resolution=128, dual_box=None, separation=None, max_witnesses=20):
    """Look for dual points whose argmax sets contain two separated points."""
    if dual_box is None:
        dual_box = default_dual_box(gf, u)
    dual_box = np.asarray(dual_box, float)
    axes = dual_grid(dual_box, dual_resolution, "nodes")
    T = g_star_transform(gf, u, axes)
    if separation is None:
        separation = 4.0 * float(np.linalg.norm(u.spacing))
    counts = T.counts()
    ys = T.y_points
    wit = []
    for j in np.nonzero(counts > 1)[0]:
        diam = set_diameter(T.argmax(j))
        if diam > separation:
            wit.append((diam, j))
    wit.sort(key=lambda t: (-t[0], t[1]))
    witnesses = []
    for diam, j in wit[:max_witnesses]:
        pts = T.argmax(j)
        witnesses.append({"y": ys[j].tolist(), "v": float(T.values[j]), "diameter": diam,
                          "n_contacts": int(len(pts)),
                          "contact_extremes": [pts.min(axis=0).tolist(), pts.max(axis=0).tolist()]})
    return {"verdict": "NOT_C1" if wit else "C1_PLAUSIBLE", "n_witnesses": len(wit),
            "max_diameter": max((d for d, _ in wit), default=0.0), "separation": separation,
            "witnesses": witnesses, "dual_box": dual_box.tolist(),
            "dual_resolution": dual_resolution, "invalid_dual_points": T.n_invalid}


# ---------------------------------------------------------------------------
# theorem-shape consistency harness


@dataclass
class Fixture:
    name: str
    gf: object
    u: object
    region: list
    c: float
    C: float
    probe_half_length: float = 0.5
    semi: object = None

    def describe(self):
        return {"name": self.name, "family": self.gf.name, "region": self.region,
                "c": self.c, "C": self.C}


def _box_polygon(box):
    (a, b), (c, d) = box
    return np.array([[a, c], [b, c], [b, d], [a, d]], float)


def _image_polygon(gf, u, shrink=0.8, per_side=4):
    """Convex hull of Y_u at points on the boundary of the shrunk grid box."""
    lo, hi = u.bounds[:, 0], u.bounds[:, 1]
    c = 0.5 * (lo + hi)
    r = 0.5 * (hi - lo) * shrink
    t = np.linspace(-1, 1, per_side + 1)
    pts = np.concatenate([np.column_stack([t, -np.ones_like(t)]), np.column_stack([np.ones_like(t), t]),
                          np.column_stack([-t, np.ones_like(t)]), np.column_stack([-np.ones_like(t), -t])])
    pts = c + pts * r
    grads = u.gradient(pts)
    ys = []
    for x, p in zip(pts, grads):
        try:
            ys.append(solve_YZ(gf, x, u(x), p).y)
        except GJEError:
            continue
    ys = np.array(ys)
    if len(ys) < 3:
        return None
    try:
        hull = ConvexHull(ys)
    except Exception:  # degenerate (collinear or repeated) images
        return None
    return ys[hull.vertices]


def _sample_contacts(gf, u, n=3):
    lo, hi = u.bounds[:, 0], u.bounds[:, 1]
    pts = lo + (hi - lo) * np.array([[0.3, 0.3], [0.5, 0.5], [0.7, 0.6]])[:n]
    ys, zs, xs, us = [], [], [], []
    for x in pts:
        try:
            st = solve_YZ(gf, x, u(x), u.gradient(x))
        except GJEError:
            continue
        ys.append(st.y)
        zs.append(st.z)
        xs.append(x)
        us.append(float(u(x)))
    return np.array(ys), np.array(zs), np.array(xs), np.array(us)


def _conditions_for(gf, cache, seed):
    from .conditions import scan_conditions
    key = id(gf)
    if key not in cache:
        cache[key] = scan_conditions(gf, resolution=3, directions=8, n_tuples=32, seed=seed)
    return cache[key]


def run_fixture(fx, seed=0, dual_resolution=128, cond_cache=None):
    from .measure import alexandrov_verdict, coverage_check, gma_measure_nonsmooth
    from .segments import is_g_convex_set

    cond_cache = {} if cond_cache is None else cond_cache
    gf, u = fx.gf, fx.u
    row = {"fixture": fx.describe()}

    meas = gma_measure_nonsmooth(gf, fx.semi if fx.semi is not None else u, fx.region,
                                 dual_resolution=dual_resolution,
                                 resolutions=[dual_resolution // 2, dual_resolution])
    av = alexandrov_verdict(meas, c=fx.c, C=fx.C)
    row["measure"] = {"ratio": meas.ratio, "mu_sequence": meas.details["mu_sequence"],
                      "lower": av["lower_bound"], "upper": av["upper_bound"]}

    cond = _conditions_for(gf, cond_cache, seed)
    row["conditions"] = {"A3w": "PASS" if cond.a3w_pass else "FAIL",
                         "A4w": "PASS" if cond.a4w_pass else "FAIL",
                         "worst_A3w": cond.worst_A3w, "worst_A4w": cond.worst_A4w}

    ys, zs, xs, us = _sample_contacts(gf, u)
    dom = _box_polygon(u.bounds)
    if len(ys):
        conv = is_g_convex_set(gf, dom, ys, zs, resolution=17, n_interior=2, seed=seed)
        row["domain_convexity"] = conv.to_dict()
    else:
        row["domain_convexity"] = {"verdict": "FAIL", "witness": {"reason": "no contact states"}}

    centre = u.bounds.mean(axis=1)
    r = fx.probe_half_length * 0.5 * float(np.min(u.bounds[:, 1] - u.bounds[:, 0]))
    e1 = np.array([1.0, 0.0])
    try:
        sup = tangent_support(gf, u, centre)
        rep = strict_convexity_probe(gf, u, sup, centre - r * e1, centre + r * e1, c=None)
        row["probe"] = {"verdict": rep.verdict, "H": rep.H, "implied_H_lower": rep.implied_H_lower,
                        "reason": rep.reason}
    except GJEError as exc:
        row["probe"] = {"verdict": "INCONCLUSIVE", "reason": f"{type(exc).__name__}: {exc}"}

    target = _image_polygon(gf, u)
    if target is None or polygon_area(target) < 1e-9:
        row["coverage"] = {"verdict": "FAIL", "reason": "degenerate Y_u image"}
        row["dual_convexity"] = {"verdict": "FAIL", "reason": "degenerate target"}
    else:
        row["coverage"] = coverage_check(gf, u, target, dual_resolution=48)
        if len(xs):
            dconv = is_g_convex_set(gf.dual(), target, xs, us, resolution=17, n_interior=2,
                                    seed=seed)
            row["dual_convexity"] = dconv.to_dict()
        else:
            row["dual_convexity"] = {"verdict": "FAIL", "reason": "no dual samples"}

    row["c1"] = {k: v for k, v in c1_check(gf, u, dual_resolution=64).items()
                 if k in ("verdict", "n_witnesses", "max_diameter")}
    row.update(_implications(row))
    return row


def _implications(row):
    failed1 = []
    if row["measure"]["lower"] != "PASS":
        failed1.append("lower_bound")
    if row["conditions"]["A3w"] != "PASS":
        failed1.append("A3w")
    if row["conditions"]["A4w"] != "PASS":
        failed1.append("A4w")
    if row["domain_convexity"]["verdict"] != "PASS":
        failed1.append("domain_g_convex")
    r1 = {"rule": "lower bound + A3w + A4w + g-convex domain => probe STRICT",
          "applies": not failed1, "failed_hypotheses": failed1}
    r1["violated"] = bool(r1["applies"] and row["probe"]["verdict"] != "STRICT")

    failed2 = []
    if row["measure"]["upper"] != "PASS":
        failed2.append("upper_bound")
    if row["coverage"]["verdict"] != "PASS":
        failed2.append("second_boundary_value_coverage")
    if row["dual_convexity"]["verdict"] != "PASS":
        failed2.append("dual_g_convex")
    r2 = {"rule": "upper bound + coverage + dual g-convexity => not NOT_C1",
          "applies": not failed2, "failed_hypotheses": failed2}
    r2["violated"] = bool(r2["applies"] and row["c1"]["verdict"] == "NOT_C1")
    return {"implications": [r1, r2], "violations": int(r1["violated"]) + int(r2["violated"])}


def theorem_consistency_suite(fixtures=None, seed=0, dual_resolution=128):
    """Run every fixture and tabulate implication violations."""
    if fixtures is None:
        fixtures = default_fixtures()
    cache = {}
    rows = [run_fixture(fx, seed=seed, dual_resolution=dual_resolution, cond_cache=cache)
            for fx in fixtures]
    total = sum(r["violations"] for r in rows)
    return {"fixtures": rows, "n_fixtures": len(rows), "violations": total,
            "verdict": "PASS" if total == 0 else "FAIL", "seed": seed}


def default_fixtures():
    """Committed fixture set spanning the bilinear, quad-cost and log-cost families."""
    from .genfun import builtin
    from .potentials import GridPotential, SemiDiscretePotential, grid_axes, preset

    box = [[-1.5, 1.5], [-1.5, 1.5]]
    ax = grid_axes(box, 96, cell_centered=True)
    E = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    bil = builtin("bilinear", x_box=box, y_box=[[-4, 4], [-4, 4]])
    quad = builtin("quad-cost", x_box=box, y_box=[[-4, 4], [-4, 4]])
    out = [
        Fixture("bilinear-quadratic", bil, GridPotential.from_function(preset("quadratic"), ax),
                E, 0.5, 2.0),
        Fixture("bilinear-kink", bil, GridPotential.from_function(preset("kink"), ax),
                [[-0.1, -0.5], [0.1, -0.5], [0.1, 0.5], [-0.1, 0.5]], 0.1, 2.0),
        Fixture("bilinear-quadratic-a2", bil,
                GridPotential.from_function(preset("quadratic", a=2.0), ax), E, 0.5, 3.0),
        Fixture("quad-cost-quadratic", quad, GridPotential.from_function(preset("quadratic"), ax),
                E, 1.0, 5.0),
    ]
    semi = SemiDiscretePotential(quad, [[0.6, 0.0], [-0.6, 0.1]], [0.0, 0.05])
    out.append(Fixture("quad-cost-two-supports", quad, semi.to_grid(ax), E, 0.1, 2.0, semi=semi))

    lbox = [[-0.5, 0.5], [-0.5, 0.5]]
    logc = builtin("log-cost", x_box=lbox, y_box=[[1.5, 3.5], [-1.0, 1.0]])
    f = preset("support", logc, y0=[2.5, 0.0], z0=0.0, perturb=0.05)
    lax = grid_axes(lbox, 64, cell_centered=True)
    out.append(Fixture("log-cost-perturbed-support", logc, GridPotential.from_function(f, lax),
                       [[-0.2, -0.2], [0.2, -0.2], [0.2, 0.2], [-0.2, 0.2]], 0.01, 100.0))
    return out
