"""g-Monge-Ampere measure of polygons and Alexandrov-bound verdicts.

Two estimates of mu(E) = |Y_u(E)|:

* ``jacobian-quadrature``: midpoint rule for the integral of det DY over E,
  each grid cell weighted by its clipped overlap with E;
* ``dual-box-counting``: area of the dual cells whose g*-transform argmax set
  meets E.
"""

from dataclasses import dataclass, field

import numpy as np

from .duality import default_dual_box, dual_grid, g_star_transform, padded_box, solve_YZ
from .errors import EmptyAdmissibleSet, GJEError
from .kernels import cell_polygon_areas, points_in_polygon, polygon_area
from .mate import mate_coefficients
from .potentials import GridPotential, SemiDiscretePotential, grid_axes

ELLIPTIC_TOL = 1e-8
MAX_SKIPPED_FRACTION = 0.5


@dataclass
class MeasureReport:
    region: list
    area_E: float
    mu_E: float
    method: str
    details: dict = field(default_factory=dict)

    @property
    def ratio(self):
        return self.mu_E / self.area_E if self.area_E > 0 else float("nan")

    def to_dict(self):
        return {"region": self.region, "area_E": self.area_E, "mu_E": self.mu_E,
                "ratio": self.ratio, "method": self.method, **self.details}


def _region(E):
    poly = np.asarray(E, float)
    if poly.ndim != 2 or poly.shape[1] != 2 or len(poly) < 3:
        raise ValueError("region must be a polygon given as at least 3 (x, y) vertices")
    return poly


def gma_measure_smooth(gf, u, E, seed_support=None):
    """Midpoint-rule integral of det DY = det E^{-1} det(D^2u - A) over E.

    Cells are those of the potential's node grid; negative determinants are
    clipped to 0 and counted, and non-ellipticity of D^2u - A is reported.
    """
    poly = _region(E)
    areas = cell_polygon_areas(poly, u.axes[0], u.axes[1])
    ii, jj = np.nonzero(areas > 0)
    c0 = 0.5 * (u.axes[0][:-1] + u.axes[0][1:])
    c1 = 0.5 * (u.axes[1][:-1] + u.axes[1][1:])
    pts = np.column_stack([c0[ii], c1[jj]])
    w = areas[ii, jj]
    vals = u(pts)
    grads = u.gradient(pts)
    hess = u.hessian(pts)
    mu = 0.0
    n_neg = 0
    n_fail = 0
    min_eig = np.inf
    prev = seed_support
    for x, uu, p, H, wk in zip(pts, vals, grads, hess, w):
        try:
            mc = mate_coefficients(gf, x, uu, p, seed=prev)
        except GJEError:
            try:
                mc = mate_coefficients(gf, x, uu, p)
            except GJEError:
                n_fail += 1
                continue
        prev = (mc.contact.y, mc.contact.z)
        M = H - mc.A
        min_eig = min(min_eig, float(np.linalg.eigvalsh(M)[0]))
        det = float(np.linalg.det(mc.E_inv @ M))
        if det < 0:
            n_neg += 1
            det = 0.0
        mu += wk * det
    covered = float(w.sum())
    details = {"cells": int(len(w)), "negative_cells": n_neg, "failed_cells": n_fail,
               "covered_area": covered, "min_eig_D2u_minus_A": float(min_eig),
               "g_convex": bool(min_eig >= -ELLIPTIC_TOL * max(1.0, np.max(np.abs(hess))))}
    if not details["g_convex"]:
        details["warning"] = "D^2u - A is not positive semidefinite on E"
    return MeasureReport(poly.tolist(), polygon_area(poly), float(mu), "jacobian-quadrature", details)


def _x_grid(gf, u, x_axes, resolution):
    if isinstance(u, GridPotential):
        return u
    if x_axes is None:
        x_axes = grid_axes(gf.gamma.x_box, resolution)
    return GridPotential((x_axes[0], x_axes[1]), np.asarray(u(_mesh(x_axes)), float).reshape(
        len(x_axes[0]), len(x_axes[1])))


def _mesh(axes):
    X0, X1 = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([X0.ravel(), X1.ravel()])


def marked_cells(transform, in_E):
    """Boolean per dual cell: does its argmax set contain a point of E?"""
    hits = in_E[transform.indices].astype(np.int64)
    csum = np.concatenate([[0], np.cumsum(hits)])
    return (csum[transform.offsets[1:]] - csum[transform.offsets[:-1]]) > 0


def gma_measure_nonsmooth(gf, u, E, dual_resolution=256, dual_box=None, resolutions=None,
                          x_axes=None, x_resolution=129, max_skipped=MAX_SKIPPED_FRACTION):
    """Box-counting estimate of |Y_u(E)| through the g*-transform.

    ``resolutions`` lists the dual resolutions to run (default: half and
    full ``dual_resolution``); the finest one gives ``mu_E``.
    """
    poly = _region(E)
    ug = _x_grid(gf, u, x_axes, x_resolution)
    semi = isinstance(u, SemiDiscretePotential)
    if dual_box is None:
        dual_box = padded_box(u.ys) if semi else default_dual_box(gf, ug)
    dual_box = np.asarray(dual_box, float)
    if resolutions is None:
        resolutions = [max(2, dual_resolution // 2), dual_resolution]
    in_E = points_in_polygon(ug.points(), poly)
    seq = []
    skipped_frac = 0.0
    for res in resolutions:
        axes = dual_grid(dual_box, res, "cells")
        T = g_star_transform(gf, ug, axes)
        skipped_frac = float(T.skipped.sum()) / (len(T.x_points) * len(T.values))
        if skipped_frac > max_skipped:
            raise EmptyAdmissibleSet(f"{skipped_frac:.1%} of (x, y) pairs were inadmissible")
        cell = np.prod((dual_box[:, 1] - dual_box[:, 0]) / res)
        seq.append(float(marked_cells(T, in_E).sum() * cell))
    details = {"dual_box": dual_box.tolist(), "resolutions": list(map(int, resolutions)),
               "mu_sequence": seq, "skipped_fraction": skipped_frac,
               "x_nodes_in_E": int(in_E.sum()), "atomic": False}
    if semi:
        inside = ug.points()[in_E]
        atoms = sorted({int(i) for a in u.active(inside) for i in a}) if len(inside) else []
        details["atomic"] = True
        details["atoms"] = [u.ys[i].tolist() for i in atoms]
    return MeasureReport(poly.tolist(), polygon_area(poly), seq[-1], "dual-box-counting", details)


def alexandrov_verdict(reports, c=None, C=None):
    """PASS/FAIL of mu(E) >= c|E| and mu(E) <= C|E| for each measured region."""
    if isinstance(reports, MeasureReport):
        reports = [reports]
    rows = []
    lower_ok = upper_ok = True
    lower_w = upper_w = None
    for rep in reports:
        row = {"region": rep.region, "mu_E": rep.mu_E, "area_E": rep.area_E,
               "ratio": rep.ratio, "method": rep.method}
        if c is not None:
            row["lower"] = "PASS" if rep.ratio >= c else "FAIL"
            row["lower_margin"] = rep.ratio - c
            if rep.ratio < c and lower_ok:
                lower_ok, lower_w = False, rep.region
        if C is not None:
            row["upper"] = "PASS" if rep.ratio <= C else "FAIL"
            row["upper_margin"] = C - rep.ratio
            if rep.ratio > C and upper_ok:
                upper_ok, upper_w = False, rep.region
        rows.append(row)
    out = {"regions": rows, "c": c, "C": C}
    if c is not None:
        out["lower_bound"] = "PASS" if lower_ok else "FAIL"
        out["lower_witness"] = lower_w
    if C is not None:
        out["upper_bound"] = "PASS" if upper_ok else "FAIL"
        out["upper_witness"] = upper_w
    failed = (c is not None and not lower_ok) or (C is not None and not upper_ok)
    out["verdict"] = "FAIL" if failed else "PASS"
    return out


def coverage_check(gf, u, target, dual_resolution=64, threshold=0.95):
    """Verdict for Y_u(Omega) = Omega*: the argmax of nearly every target cell
    must be an interior grid point."""
    poly = _region(target)
    box = np.column_stack([poly.min(axis=0), poly.max(axis=0)])
    axes = dual_grid(box, dual_resolution, "cells")
    T = g_star_transform(gf, u, axes)
    cells_in = points_in_polygon(T.y_points, poly)
    n0, n1 = u.shape
    ii, jj = np.unravel_index(np.arange(n0 * n1), (n0, n1))
    interior = (ii > 0) & (ii < n0 - 1) & (jj > 0) & (jj < n1 - 1)
    # a cell is covered when every argmax point is interior
    bad = (~interior[T.indices]).astype(np.int64)
    csum = np.concatenate([[0], np.cumsum(bad)])
    n_bad = csum[T.offsets[1:]] - csum[T.offsets[:-1]]
    covered = (n_bad == 0) & T.valid & cells_in
    frac = float(covered.sum()) / max(int(cells_in.sum()), 1)
    return {"verdict": "PASS" if frac >= threshold else "FAIL", "covered_fraction": frac,
            "threshold": threshold, "target": poly.tolist(), "dual_resolution": dual_resolution}


def dual_lower_bound_check(gf, u, A, C, dual_resolution=96, x_resolution=128, tol=0.05):
    """|X_v(A)| >= |A| / C for the transform v, measured with the dual object."""
    box = default_dual_box(gf, u)
    axes = dual_grid(box, dual_resolution, "nodes")
    v = g_star_transform(gf, u, axes).potential(name="v")
    dual = gf.dual()
    x_box = np.asarray(u.bounds, float)
    rep = gma_measure_nonsmooth(dual, v, A, dual_resolution=x_resolution, dual_box=x_box,
                                resolutions=[x_resolution])
    bound = 1.0 / C
    return {"verdict": "PASS" if rep.ratio >= bound * (1 - tol) else "FAIL",
            "ratio": rep.ratio, "bound": bound, "report": rep.to_dict()}


def contact_y_points(gf, u, pts):
    """Y_u at points (smooth potentials), used to sample Y_u(Omega) x Z_u(Omega)."""
    ys, zs = [], []
    for x in np.atleast_2d(pts):
        st = solve_YZ(gf, x, u(x), u.gradient(x))
        ys.append(st.y)
        zs.append(st.z)
    return np.array(ys), np.array(zs)
