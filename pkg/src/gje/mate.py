"""Monge-Ampere-type structure: the matrix E, the coefficients A and B, and DY."""

from dataclasses import dataclass

import numpy as np

from .duality import solve_YZ
from .errors import GJEError, SingularMatrix
from .genfun import EPS, matrix_E_from


def matrix_E(gf, p):
    """E_ij = g_{x_i y_j} - g_{x_i z} g_{y_j} / g_z at a FiberPoint."""
    E = matrix_E_from(p.derivs(2))
    det = float(np.linalg.det(E))
    if abs(det) <= gf.det_floor:
        raise SingularMatrix(f"|det E| = {abs(det):.3e} is below the floor {gf.det_floor:.1e}")
    return E


@dataclass(frozen=True)
class MateCoefficients:
    E: np.ndarray
    E_inv: np.ndarray
    detE: float
    A: np.ndarray
    contact: object

    def B(self, psi=None):
        """B = det E * psi(x, u, p); psi defaults to 1."""
        if psi is None:
            return self.detE
        c = self.contact
        return self.detE * float(psi(c.x, c.u, c.p))


def _symmetric(M):
    return 0.5 * (M + M.T)


def mate_coefficients(gf, x, u, p, seed=None):
    st = solve_YZ(gf, x, u, p, seed=seed)
    fp = gf.fiber_point(st.x, st.y, st.z)
    d = fp.derivs(2)
    E = matrix_E(gf, fp)
    return MateCoefficients(E, np.linalg.inv(E), float(np.linalg.det(E)),
                            _symmetric(d["g_xx"]), st)


def coeff_A(gf, x, u, p, seed=None):
    """A(x, u, p) = g_xx at the contact state (Y, Z)(x, u, p)."""
    return coeff_A_state(gf, x, u, p, seed)[0]


def coeff_A_state(gf, x, u, p, seed=None):
    st = solve_YZ(gf, x, u, p, seed=seed)
    d = gf.derivs(st.x, st.y, st.z, 2)
    return _symmetric(d["g_xx"]), st


def DY_from_hessian(gf, x, u, p, hess_u, seed=None):
    """Return ``(DY, det DY)`` with DY = E^{-1}(D^2u - A)."""
    mc = mate_coefficients(gf, x, u, p, seed=seed)
    DY = mc.E_inv @ (np.asarray(hess_u, float) - mc.A)
    return DY, float(np.linalg.det(DY))


def check_E_is_DpY(gf, x, u, p, seed=None):
    """Max-norm gap between E^{-1} and a central-difference Jacobian of p -> Y."""
    x = np.asarray(x, float)
    p = np.asarray(p, float)
    mc = mate_coefficients(gf, x, u, p, seed=seed)
    st = mc.contact
    n = gf.dim
    h = EPS ** (1 / 3) * (1 + np.linalg.norm(p))
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        yp = solve_YZ(gf, x, u, p + e, seed=(st.y, st.z)).y
        ym = solve_YZ(gf, x, u, p - e, seed=(st.y, st.z)).y
        J[:, j] = (yp - ym) / (2 * h)
    return float(np.max(np.abs(J - mc.E_inv)))


def contact_field(gf, u, pts):
    """Contact states at points of a grid potential (u and Du from its spline)."""
    pts = np.atleast_2d(np.asarray(pts, float))
    vals = u(pts)
    grads = u.gradient(pts)
    out = []
    prev = None
    for x, uu, p in zip(pts, vals, grads):
        st = solve_YZ(gf, x, uu, p, seed=prev) if prev is None else _solve_seeded(gf, x, uu, p, prev)
        out.append(st)
        prev = (st.y, st.z)
    return out


def _solve_seeded(gf, x, u, p, seed):
    # a neighbour's solution is usually an excellent seed; fall back to the
    # default seed when it is not
    try:
        return solve_YZ(gf, x, u, p, seed=seed)
    except GJEError:
        return solve_YZ(gf, x, u, p)


def dy_consistency(gf, u, pts, step=1e-5):
    """Compare a central-difference Jacobian of x -> Y(x, u(x), Du(x)) with
    E^{-1}(D^2u - A) at each point; returns (max relative error, per-point errors).
    """
    pts = np.atleast_2d(np.asarray(pts, float))
    n = gf.dim
    errs = []
    for x in pts:
        DY, _ = DY_from_hessian(gf, x, u(x), u.gradient(x), u.hessian(x))
        st0 = solve_YZ(gf, x, u(x), u.gradient(x))
        J = np.empty((n, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = step
            xp, xm = x + e, x - e
            yp = solve_YZ(gf, xp, u(xp), u.gradient(xp), seed=(st0.y, st0.z)).y
            ym = solve_YZ(gf, xm, u(xm), u.gradient(xm), seed=(st0.y, st0.z)).y
            J[:, j] = (yp - ym) / (2 * step)
        errs.append(float(np.max(np.abs(J - DY)) / max(np.max(np.abs(DY)), 1e-12)))
    errs = np.array(errs)
    return float(errs.max()), errs
