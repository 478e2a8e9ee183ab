"""g-segments, their velocities, and sampled g-convexity tests for polygons.

Along a g-segment with respect to (y0, z0) the vector q(x) = g_y/g_z(x, y0, z0)
interpolates linearly between its endpoint values. Its x-Jacobian is
E^T / g_z, which gives the velocity x' = g_z E^{-T} (q1 - q0).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NoConvergence, SegmentExitsDomain, SingularMatrix
from .genfun import matrix_E_from
from .kernels import points_in_polygon

SEG_TOL = 1e-12
MAX_SUBDIV = 6


def q_of(gf, x, y0, z0):
    d = gf.derivs(x, y0, z0, 1)
    return d["g_y"] / d["g_z"]


def _q_and_jac(gf, x, y0, z0):
    d = gf.derivs(x, y0, z0, 2)
    E = matrix_E_from(d)
    return d["g_y"] / d["g_z"], E.T / d["g_z"], d, E


def segment_velocity(gf, p, q):
    """x' = g_z E^{-T} q at a FiberPoint."""
    d = p.derivs(2)
    E = matrix_E_from(d)
    if abs(np.linalg.det(E)) <= gf.det_floor:
        raise SingularMatrix("E is singular at the segment point")
    return d["g_z"] * np.linalg.solve(E.T, np.asarray(q, float))


@dataclass
class GSegment:
    """Samples of a g-segment at parameters ``theta`` (uniform on [0, 1])."""

    gf: object
    y0: np.ndarray
    z0: float
    q0: np.ndarray
    q1: np.ndarray
    theta: np.ndarray
    x: np.ndarray
    xdot: np.ndarray
    residuals: np.ndarray = field(repr=False)

    @property
    def q(self):
        return self.q1 - self.q0

    @property
    def max_residual(self):
        return float(np.max(self.residuals))

    def samples(self):
        return list(zip(self.theta, self.x, self.xdot))

    def to_rows(self):
        rows = []
        for t, x, v in zip(self.theta, self.x, self.xdot):
            rows.append([float(t), *map(float, x), *map(float, v)])
        return rows

    def header(self):
        n = len(self.y0)
        return ["theta"] + [f"x{i}" for i in range(n)] + [f"xdot{i}" for i in range(n)]


def _check_point(gf, x, y0, z0, theta, box_check):
    if box_check and not gf.gamma.contains_x(x, tol=1e-12):
        raise SegmentExitsDomain(f"segment leaves the x-box at theta={theta:.6g}", theta, x.tolist())
    lo, hi = gf.gamma.z_interval(x, y0)
    if not lo <= z0 <= hi:
        raise SegmentExitsDomain(f"z0 leaves the fibre at theta={theta:.6g}", theta, x.tolist())


def _newton_to(gf, x, target, y0, z0, theta, box_check, max_iter=30):
    for _ in range(max_iter):
        _check_point(gf, x, y0, z0, theta, box_check)
        q, J, _, _ = _q_and_jac(gf, x, y0, z0)
        r = q - target
        if np.max(np.abs(r)) < SEG_TOL:
            return x, float(np.max(np.abs(r)))
        try:
            x = x - np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            raise NoConvergence("singular segment Jacobian") from None
    _check_point(gf, x, y0, z0, theta, box_check)
    r = float(np.max(np.abs(q_of(gf, x, y0, z0) - target)))
    if r < 1e-10:
        return x, r
    raise NoConvergence(f"segment Newton stalled at theta={theta:.6g} (residual {r:.2e})")


def g_segment(gf, x_start, x_end, y0, z0, resolution=129, box_check=True):
    """Sample the g-segment from ``x_start`` (theta=0) to ``x_end`` (theta=1).

    Each sample is found by Newton continuation from the previous one with a
    tangent predictor; a failed step is retried on up to ``MAX_SUBDIV``
    halvings of the theta step.
    """
    x_start = np.asarray(x_start, float)
    x_end = np.asarray(x_end, float)
    y0 = np.asarray(y0, float)
    z0 = float(z0)
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    _check_point(gf, x_start, y0, z0, 0.0, box_check)
    _check_point(gf, x_end, y0, z0, 1.0, box_check)
    q0 = q_of(gf, x_start, y0, z0)
    q1 = q_of(gf, x_end, y0, z0)
    dq = q1 - q0
    thetas = np.linspace(0.0, 1.0, resolution)

    def vel(x):
        _, J, _, E = _q_and_jac(gf, x, y0, z0)
        if abs(np.linalg.det(E)) <= gf.det_floor:
            raise SingularMatrix("E is singular along the segment")
        return np.linalg.solve(J, dq)

    xs = [x_start.copy()]
    vs = [vel(x_start)]
    res = [0.0]
    x = x_start.copy()
    for k in range(1, resolution):
        t_prev, t_next = thetas[k - 1], thetas[k]
        x = _advance(gf, x, vs[-1], t_prev, t_next, q0, dq, y0, z0, vel, box_check)
        if k == resolution - 1 and np.linalg.norm(x - x_end) < 1e-9:
            x = x_end.copy()
        xs.append(x.copy())
        vs.append(vel(x))
        res.append(float(np.max(np.abs(q_of(gf, x, y0, z0) - (q0 + t_next * dq)))))
    return GSegment(gf, y0, z0, q0, q1, thetas, np.array(xs), np.array(vs), np.array(res))


def point_at(gf, seg, theta, guess, max_iter=8):
    """The point of ``seg`` at parameter ``theta``, refined to rounding level.

    Newton is iterated past ``SEG_TOL`` until the residual stops decreasing,
    which is what fine-step differences of quantities along the segment need.
    """
    target = seg.q0 + theta * seg.q
    x = np.asarray(guess, float)
    best_x, best = x, np.inf
    for _ in range(max_iter):
        q, J, _, _ = _q_and_jac(gf, x, seg.y0, seg.z0)
        r = q - target
        rn = float(np.max(np.abs(r)))
        if rn >= best:
            break
        best_x, best = x, rn
        if rn == 0.0:
            break
        x = x - np.linalg.solve(J, r)
    if best > 1e-10:
        raise NoConvergence(f"segment point at theta={theta:.6g} did not converge")
    return best_x


def _advance(gf, x, v, t_prev, t_next, q0, dq, y0, z0, vel, box_check):
    for level in range(MAX_SUBDIV + 1):
        n_sub = 2 ** level
        ts = np.linspace(t_prev, t_next, n_sub + 1)
        xc, vc = x.copy(), v.copy()
        try:
            for a, b in zip(ts[:-1], ts[1:]):
                guess = xc + (b - a) * vc
                xc, _ = _newton_to(gf, guess, q0 + b * dq, y0, z0, b, box_check)
                vc = vel(xc)
            return xc
        except NoConvergence:
            continue
    raise NoConvergence(f"segment continuation failed between theta={t_prev:.6g} and {t_next:.6g}")


@dataclass
class ConvexityVerdict:
    verdict: str
    checked: int
    witness: dict = None

    def to_dict(self):
        return {"verdict": self.verdict, "checked": self.checked, "witness": self.witness}


def _interior_samples(poly, count, rng):
    lo, hi = poly.min(axis=0), poly.max(axis=0)
    out = []
    tries = 0
    while len(out) < count and tries < 100 * count:
        batch = lo + rng.random((4 * count, 2)) * (hi - lo)
        inside = points_in_polygon(batch, poly)
        out.extend(batch[inside].tolist())
        tries += 4 * count
    return np.array(out[:count], float).reshape(-1, 2)


def is_g_convex_set(gf, region, y_set, z_set, resolution=33, n_interior=6, seed=0, tol=1e-9):
    """Sampled g-convexity of a polygon with respect to every (y, z) in y_set x z_set.

    Endpoint pairs are all vertex pairs plus pairs among ``n_interior`` random
    interior points; the first segment sample outside the polygon is returned
    as the witness.
    """
    poly = np.asarray(region, float)
    rng = np.random.default_rng(seed)
    pts = np.concatenate([poly, _interior_samples(poly, n_interior, rng)]) if n_interior else poly
    y_set = np.atleast_2d(np.asarray(y_set, float))
    z_set = np.atleast_1d(np.asarray(z_set, float))
    checked = 0
    for y in y_set:
        for z in z_set:
            for i in range(len(pts)):
                for j in range(i + 1, len(pts)):
                    checked += 1
                    w = {"x0": pts[i].tolist(), "x1": pts[j].tolist(), "y": y.tolist(), "z": float(z)}
                    try:
                        seg = g_segment(gf, pts[i], pts[j], y, z, resolution, box_check=False)
                    except SegmentExitsDomain as exc:
                        return ConvexityVerdict("FAIL", checked,
                                                {**w, "theta": exc.theta, "point": exc.point,
                                                 "reason": str(exc)})
                    except (NoConvergence, SingularMatrix) as exc:
                        return ConvexityVerdict("FAIL", checked, {**w, "reason": str(exc)})
                    inside = points_in_polygon(seg.x, poly, tol=tol)
                    if not inside.all():
                        k = int(np.argmin(inside))
                        return ConvexityVerdict("FAIL", checked,
                                                {**w, "theta": float(seg.theta[k]),
                                                 "point": seg.x[k].tolist(),
                                                 "reason": "segment leaves the region"})
    return ConvexityVerdict("PASS", checked)
