"""Numerical checks of the A3w and A4w conditions on the coefficient A.

D_p A and D_p^2 A come from central differences of ``coeff_A`` in p with
step ``EPS**(1/4) * (1 + |p|)``; D_u A from a central difference in u.
"""

from dataclasses import dataclass, field

import numpy as np

from .duality import solve_YZ
from .errors import GJEError
from .genfun import EPS, sample_gamma
from .mate import coeff_A_state

A3W_TOL = 1e-6


def _p_step(p):
    return EPS ** 0.25 * (1.0 + np.linalg.norm(p))


def _A(gf, x, u, p, seed):
    return coeff_A_state(gf, x, u, p, seed=seed)[0]


def _base(gf, x, u, p, seed):
    A0, st = coeff_A_state(gf, x, u, p, seed=seed)
    return A0, (st.y, st.z)


def dp_A(gf, x, u, p, seed=None):
    """First p-derivatives: ``T[i, j, k] = D_{p_k} A_ij``."""
    x = np.asarray(x, float)
    p = np.asarray(p, float)
    n = gf.dim
    _, s = _base(gf, x, u, p, seed)
    h = EPS ** (1 / 3) * (1.0 + np.linalg.norm(p))
    T = np.empty((n, n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        T[:, :, k] = (_A(gf, x, u, p + e, s) - _A(gf, x, u, p - e, s)) / (2 * h)
    return T


def d2p_A(gf, x, u, p, seed=None):
    """Second p-derivatives: ``T[i, j, k, l] = D_{p_k p_l} A_ij``."""
    x = np.asarray(x, float)
    p = np.asarray(p, float)
    n = gf.dim
    A0, s = _base(gf, x, u, p, seed)
    h = _p_step(p)
    T = np.empty((n, n, n, n))
    for k in range(n):
        ek = np.zeros(n)
        ek[k] = h
        T[:, :, k, k] = (_A(gf, x, u, p + ek, s) - 2 * A0 + _A(gf, x, u, p - ek, s)) / h**2
        for l in range(k + 1, n):
            el = np.zeros(n)
            el[l] = h
            val = (_A(gf, x, u, p + ek + el, s) - _A(gf, x, u, p + ek - el, s)
                   - _A(gf, x, u, p - ek + el, s) + _A(gf, x, u, p - ek - el, s)) / (4 * h * h)
            T[:, :, k, l] = val
            T[:, :, l, k] = val
    return T


def du_A(gf, x, u, p, seed=None):
    """D_u A_ij by a central difference in u."""
    x = np.asarray(x, float)
    p = np.asarray(p, float)
    _, s = _base(gf, x, u, p, seed)
    h = EPS ** (1 / 3) * (1.0 + abs(u))
    return (_A(gf, x, u + h, p, s) - _A(gf, x, u - h, p, s)) / (2 * h)


def contract4(T, xi, eta):
    return float(np.einsum("ijkl,i,j,k,l->", T, xi, xi, eta, eta))


def orthogonalise(xi, eta):
    """Unit xi and the unit part of eta orthogonal to it."""
    xi = np.asarray(xi, float)
    eta = np.asarray(eta, float)
    xi = xi / np.linalg.norm(xi)
    eta = eta - (xi @ eta) * xi
    nrm = np.linalg.norm(eta)
    if nrm < 1e-14:
        raise ValueError("eta is parallel to xi")
    return xi, eta / nrm


def a3w_form(gf, x, u, p, xi, eta, project=True, seed=None):
    """D_{p_k p_l} A_ij xi_i xi_j eta_k eta_l.

    With ``project`` the pair is first made orthonormal; without it the raw
    quartic form is returned.
    """
    if project:
        xi, eta = orthogonalise(xi, eta)
    return contract4(d2p_A(gf, x, u, p, seed), np.asarray(xi, float), np.asarray(eta, float))


def a3w_relaxed_check(gf, x, u, p, xi, eta, K, seed=None):
    """Return ``(lhs, rhs)`` with lhs the raw form and rhs = -K|xi||eta||xi.eta|."""
    xi = np.asarray(xi, float)
    eta = np.asarray(eta, float)
    lhs = a3w_form(gf, x, u, p, xi, eta, project=False, seed=seed)
    rhs = -K * np.linalg.norm(xi) * np.linalg.norm(eta) * abs(xi @ eta)
    return lhs, float(rhs)


def a4w_form(gf, x, u, p, xi, seed=None):
    """D_u A_ij xi_i xi_j."""
    xi = np.asarray(xi, float)
    return float(xi @ du_A(gf, x, u, p, seed) @ xi)


def direction_pairs(n, count, rng):
    """``count`` random orthonormal pairs plus axis and diagonal pairs."""
    pairs = []
    for _ in range(count):
        Q, _ = np.linalg.qr(rng.standard_normal((n, 2)))
        pairs.append((Q[:, 0], Q[:, 1]))
    e = np.eye(n)
    pairs.append((e[0], e[1 % n]))
    pairs.append((e[1 % n], e[0]))
    if n >= 2:
        d1 = (e[0] + e[1]) / np.sqrt(2)
        d2 = (e[1] - e[0]) / np.sqrt(2)
        pairs.append((d1, d2))
        pairs.append((d2, d1))
    return pairs


def unit_tuples(n, count, rng):
    v = rng.standard_normal((count, 4, n))
    v /= np.linalg.norm(v, axis=2, keepdims=True)
    axes = np.array([[np.eye(n)[i], np.eye(n)[i], np.eye(n)[j], np.eye(n)[j]]
                     for i in range(n) for j in range(n)])
    return np.concatenate([v, axes])


def tensor_sup(T, tuples):
    """Max |T(a, b, c, d)| over the given unit 4-tuples."""
    vals = np.einsum("ijkl,ti,tj,tk,tl->t", T, tuples[:, 0], tuples[:, 1], tuples[:, 2], tuples[:, 3])
    return float(np.max(np.abs(vals)))


@dataclass
class ConditionReport:
    worst_A3w: float
    worst_A4w: float
    K_a3: float
    max_d2pA: float
    witnesses: list
    n_points: int
    n_skipped: int
    n_pairs: int
    seed: int
    tol: float = A3W_TOL
    skipped_reasons: dict = field(default_factory=dict)

    @property
    def a3w_pass(self):
        return self.worst_A3w >= -self.tol

    @property
    def a4w_pass(self):
        return self.worst_A4w >= -self.tol

    @property
    def passed(self):
        return self.a3w_pass and self.a4w_pass

    def to_dict(self):
        return {
            "worst_A3w": self.worst_A3w, "worst_A4w": self.worst_A4w,
            "K_a3": self.K_a3, "max_abs_d2pA": self.max_d2pA,
            "witnesses": self.witnesses, "n_points": self.n_points,
            "n_skipped": self.n_skipped, "skipped_reasons": self.skipped_reasons,
            "directions_per_point": self.n_pairs, "seed": self.seed, "tol": self.tol,
            "A3w": "PASS" if self.a3w_pass else "FAIL",
            "A4w": "PASS" if self.a4w_pass else "FAIL",
            "verdict": "PASS" if self.passed else "FAIL",
        }


def scan_points(gf, resolution):
    """(x, u, p, seed) samples: interior Gamma grid mapped through (x, g, g_x)."""
    out = []
    for x, y, z in sample_gamma(gf, resolution, closed=False):
        if z is None:
            continue
        d = gf.derivs(x, y, z, 1)
        out.append((x, d["g"], d["g_x"], (y, z)))
    return out


def scan_conditions(gf, resolution=4, directions=16, n_tuples=64, seed=0, points=None,
                    tol=A3W_TOL):
    """Scan A3w/A4w over sampled (x, u, p) with random orthogonal direction pairs.

    K_a3 = 3 * sup |D_p^2 A| over unit 4-tuples: the factor 3 is what the
    decomposition eta = eta_perp + (xi.eta) xi costs in the relaxed bound.
    """
    rng = np.random.default_rng(seed)
    pts = scan_points(gf, resolution) if points is None else points
    n = gf.dim
    worst3, worst4 = np.inf, np.inf
    w3 = w4 = None
    max_T = 0.0
    skipped = 0
    reasons = {}
    n_pairs = 0
    for x, u, p, s in pts:
        try:
            T = d2p_A(gf, x, u, p, seed=s)
            DuA = du_A(gf, x, u, p, seed=s)
        except GJEError as exc:
            skipped += 1
            reasons[type(exc).__name__] = reasons.get(type(exc).__name__, 0) + 1
            continue
        pairs = direction_pairs(n, directions, rng)
        n_pairs = len(pairs)
        for xi, eta in pairs:
            v3 = contract4(T, xi, eta)
            if v3 < worst3:
                worst3 = v3
                w3 = {"kind": "A3w", "x": x.tolist(), "u": float(u), "p": p.tolist(),
                      "xi": xi.tolist(), "eta": eta.tolist(), "value": v3}
            v4 = float(xi @ DuA @ xi)
            if v4 < worst4:
                worst4 = v4
                w4 = {"kind": "A4w", "x": x.tolist(), "u": float(u), "p": p.tolist(),
                      "xi": xi.tolist(), "value": v4}
        max_T = max(max_T, tensor_sup(T, unit_tuples(n, n_tuples, rng)))
    witnesses = [w for w in (w3, w4) if w is not None]
    return ConditionReport(float(worst3), float(worst4), 3.0 * max_T, max_T, witnesses,
                           len(pts), skipped, n_pairs, seed, tol, reasons)
