"""Height of a potential above a g-support along a g-segment.

For h(theta) = u(x_theta) - g(x_theta, y0, z0), writing u0, p0 for the support
values g, g_x at x_theta and u1, p1 for u, Du there, the exact second
derivative is

    h'' = [D^2u - A(x, u0, p0) - D_pA(x, u0, p0).(p1 - p0)][x', x'] + c h',
    c   = 2 g_xz . x' / g_z,

and Taylor expansion of A in (u, p) turns it into the lower bound assembled
by :func:`lemma_rhs`:

    [D^2u - A(x, u1, p1)][x', x'] + D_uA(x, u_tau, p1)[x', x'] h
      + 1/2 D_p^2A(x, u0, p_t)[x', x', Dh, Dh] - K |h'|.
"""

from dataclasses import dataclass, field

import numpy as np

from .conditions import d2p_A, du_A
from .duality import solve_YZ
from .errors import GJEError, HypothesisFails
from .segments import point_at

CHORD_PARAMS = (0.0, 0.5, 1.0)
# fine-step differences use a spatial step of this fraction of a grid cell, so
# the stencil resolves the piecewise-cubic interpolant of the potential
FD_CELL_FRACTION = 1e-3


def theta_derivatives(f, dt):
    """First and second derivatives of uniform samples.

    Fourth-order central differences in the interior, second-order one-sided
    formulas at the two samples nearest each end.
    """
    f = np.asarray(f, float)
    n = len(f)
    d1 = np.gradient(f, dt, edge_order=2)
    d2 = np.empty(n)
    d2[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / dt**2
    if n >= 4:
        d2[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / dt**2
        d2[-1] = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / dt**2
    else:
        d2[0], d2[-1] = d2[1], d2[-2]
    if n >= 5:
        s = slice(2, n - 2)
        d1[s] = (-f[4:] + 8 * f[3:-1] - 8 * f[1:-3] + f[:-4]) / (12 * dt)
        d2[s] = (-f[4:] + 16 * f[3:-1] - 30 * f[2:-2] + 16 * f[1:-3] - f[:-4]) / (12 * dt**2)
    return d1, d2


def kappa(gf, x, y0, z0, xdot):
    """The coefficient c = 2 g_xz . x' / g_z multiplying h' in h''."""
    d = gf.derivs(x, y0, z0, 2)
    return 2.0 * float(d["g_xz"] @ xdot) / d["g_z"]


def _solve(gf, x, u, p, seeds):
    for s in seeds:
        try:
            return solve_YZ(gf, x, u, p, seed=s)
        except GJEError:
            continue
    return solve_YZ(gf, x, u, p)


@dataclass
class LemmaRHS:
    lower: float
    mid: float
    parts: dict


def lemma_rhs(gf, contact, support, xdot, hprime, hess_u, K=None):
    """Assemble the lower bound for h'' at one segment point.

    ``contact`` is the ContactState of u at x_theta, ``support`` the pair
    (y0, z0). The unknown mean-value points are bracketed over chord
    parameters {0, 1/2, 1}: ``lower`` takes the minimum of each Taylor term,
    ``mid`` evaluates both at 1/2. ``K`` defaults to the local |c|.
    """
    x = np.asarray(contact.x, float)
    xdot = np.asarray(xdot, float)
    y0, z0 = np.asarray(support[0], float), float(support[1])
    u1, p1 = float(contact.u), np.asarray(contact.p, float)
    d0 = gf.derivs(x, y0, z0, 2)
    u0, p0 = d0["g"], d0["g_x"]
    Dh = p1 - p0
    hval = u1 - u0
    d1 = gf.derivs(x, contact.y, contact.z, 2)
    A1 = 0.5 * (d1["g_xx"] + d1["g_xx"].T)
    term_main = float(xdot @ (np.asarray(hess_u, float) - A1) @ xdot)

    seeds = [(contact.y, contact.z), (y0, z0)]
    au = {}
    for tau in CHORD_PARAMS:
        if abs(hval) < 1e-14:
            au[tau] = 0.0
            continue
        ut = u0 + tau * hval
        st = _solve(gf, x, ut, p1, seeds)
        au[tau] = float(xdot @ du_A(gf, x, ut, p1, seed=(st.y, st.z)) @ xdot) * hval
    dp2 = {}
    for t in CHORD_PARAMS:
        if np.max(np.abs(Dh)) < 1e-14:
            dp2[t] = 0.0
            continue
        pt = p0 + t * Dh
        st = _solve(gf, x, u0, pt, [(y0, z0), (contact.y, contact.z)])
        T = d2p_A(gf, x, u0, pt, seed=(st.y, st.z))
        dp2[t] = 0.5 * float(np.einsum("ijkl,i,j,k,l->", T, xdot, xdot, Dh, Dh))
    if K is None:
        K = abs(2.0 * float(d0["g_xz"] @ xdot) / d0["g_z"])
    k_term = -K * abs(hprime)
    lower = term_main + min(au.values()) + min(dp2.values()) + k_term
    mid = term_main + au[0.5] + dp2[0.5] + k_term
    parts = {"main": term_main, "A_u": au, "D2pA": dp2, "K_term": k_term, "K": K,
             "h": hval, "Dh": Dh.tolist()}
    return LemmaRHS(lower, mid, parts)


@dataclass
class HeightTrace:
    segment: object
    support: tuple
    sigma: float
    theta: np.ndarray
    h: np.ndarray
    h_prime: np.ndarray
    h_second: np.ndarray
    h_prime_exact: np.ndarray
    rhs_lower: np.ndarray
    rhs_mid: np.ndarray
    K_lemma: float
    kappa: np.ndarray
    failures: list = field(default_factory=list)

    @property
    def interior(self):
        """Mask of samples away from the ends (where one-sided FD is used)."""
        m = np.ones(len(self.theta), dtype=bool)
        m[:2] = False
        m[-2:] = False
        return m

    def rows(self):
        return [[float(t), float(a), float(b), float(c), float(d)] for t, a, b, c, d in
                zip(self.theta, self.h, self.h_prime, self.h_second, self.rhs_lower)]

    def inequality_margin(self):
        """h'' - rhs_lower at interior samples (NaN where the rhs failed)."""
        return (self.h_second - self.rhs_lower)[self.interior]

    def to_dict(self):
        return {"support": {"y0": np.asarray(self.support[0]).tolist(), "z0": float(self.support[1])},
                "sigma": self.sigma, "K_lemma": self.K_lemma,
                "min_h": float(np.min(self.h)), "max_h": float(np.max(self.h)),
                "n_samples": len(self.theta), "failures": self.failures}


def fine_step(u, seg):
    """Theta step whose spatial length is ``FD_CELL_FRACTION`` of a grid cell."""
    speed = float(np.max(np.linalg.norm(seg.xdot, axis=1)))
    return FD_CELL_FRACTION * float(np.min(u.spacing)) / max(speed, 1e-300)


def fine_derivatives(gf, u, seg, y0, z0, step):
    """h' and h'' at every sample by three-point differences with a small theta step.

    Offset points are re-solved on the segment (one-sided at the two ends).
    """
    n = len(seg.theta)
    hp = np.empty(n)
    hs = np.empty(n)

    def h_at(theta, guess):
        x = point_at(gf, seg, theta, guess)
        return float(u(x)) - float(gf.value(x, y0, z0))

    for k, (t, x, v) in enumerate(zip(seg.theta, seg.x, seg.xdot)):
        if k == 0:
            offs = (0.0, step, 2 * step)
        elif k == n - 1:
            offs = (-2 * step, -step, 0.0)
        else:
            offs = (-step, 0.0, step)
        f = [h_at(t + o, x + o * v) for o in offs]
        hs[k] = (f[0] - 2 * f[1] + f[2]) / step**2
        if k == 0:
            hp[k] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * step)
        elif k == n - 1:
            hp[k] = (f[0] - 4 * f[1] + 3 * f[2]) / (2 * step)
        else:
            hp[k] = (f[2] - f[0]) / (2 * step)
    return hp, hs


def height_trace(gf, u, seg, sigma=0.0, support=None, with_rhs=True, fd="fine"):
    """Sample h_sigma = u - g(., y0, z0) - sigma along ``seg`` with derivatives and the lower bound.

    ``fd="fine"`` differentiates with a step much smaller than a grid cell;
    ``fd="samples"`` uses the sample spacing (fourth-order stencils).
    """
    if support is None:
        support = (seg.y0, seg.z0)
    y0, z0 = np.asarray(support[0], float), float(support[1])
    xs = seg.x
    if not np.all(u.contains(xs, tol=1e-12)):
        raise GJEError("segment leaves the potential's grid")
    uv = u(xs)
    gv = gf.value(xs, y0[None, :], z0)
    h = uv - gv - sigma
    if fd == "fine":
        hp, hs = fine_derivatives(gf, u, seg, y0, z0, fine_step(u, seg))
    elif fd == "samples":
        hp, hs = theta_derivatives(h, seg.theta[1] - seg.theta[0])
    else:
        raise ValueError(f"unknown fd mode {fd!r}")
    grads = u.gradient(xs)
    hess = u.hessian(xs)
    kap = np.array([kappa(gf, x, y0, z0, v) for x, v in zip(xs, seg.xdot)])
    K = float(np.max(np.abs(kap)))
    hp_exact = np.array([float((p - gf.derivs(x, y0, z0, 1)["g_x"]) @ v)
                         for x, p, v in zip(xs, grads, seg.xdot)])
    lower = np.full(len(xs), np.nan)
    mid = np.full(len(xs), np.nan)
    failures = []
    if with_rhs:
        prev = (y0, z0)
        for k, (x, uu, p, H, v) in enumerate(zip(xs, uv, grads, hess, seg.xdot)):
            try:
                st = _solve(gf, x, uu, p, [prev, (y0, z0)])
                prev = (st.y, st.z)
                r = lemma_rhs(gf, st, (y0, z0), v, hp_exact[k], H, K=K)
            except GJEError as exc:
                failures.append({"index": k, "theta": float(seg.theta[k]), "error": str(exc)})
                continue
            lower[k], mid[k] = r.lower, r.mid
    return HeightTrace(seg, (y0, z0), float(sigma), seg.theta, h, hp, hs, hp_exact,
                       lower, mid, K, kap, failures)


# ---------------------------------------------------------------------------
# derivative sandwich from h'' >= -K|h'|


@dataclass
class DiffsegBounds:
    lower: float
    value: float
    upper: float
    C0: float
    C1: float
    holds: bool
    zero_branch: dict
    diffint_pairs: int
    diffint_violations: int
    diffint_worst: float

    def to_dict(self):
        return dict(self.__dict__)


def _coef(K, length):
    """2K / (1 - exp(-K L)), with the K -> 0 limit 2 / L."""
    if length <= 0:
        return np.inf
    if K * length < 1e-12:
        return 2.0 / length
    return 2.0 * K / (-np.expm1(-K * length))


def check_diffseg_bounds(theta, h, K, t, hprime=None, hsecond=None, tol=1e-8, hyp_tol=1e-6):
    """Check -C0 sup_[a,t]|h| <= h'(t) <= C1 sup_[t,b]|h| for sampled h.

    ``t`` is an interior sample index. Derivatives default to finite
    differences of ``h``. The hypothesis h'' >= -K|h'| is verified at
    interior samples first; a violation raises HypothesisFails.
    """
    theta = np.asarray(theta, float)
    h = np.asarray(h, float)
    if hprime is None or hsecond is None:
        d1, d2 = theta_derivatives(h, theta[1] - theta[0])
        hprime = d1 if hprime is None else hprime
        hsecond = d2 if hsecond is None else hsecond
    hprime = np.asarray(hprime, float)
    hsecond = np.asarray(hsecond, float)
    t = int(t)
    if not 0 < t < len(theta) - 1:
        raise ValueError("t must be an interior sample index")
    inner = slice(1, len(theta) - 1)
    gap = hsecond[inner] + K * np.abs(hprime[inner])
    scale = 1.0 + np.abs(hsecond[inner])
    if np.any(gap < -hyp_tol * scale):
        k = int(np.argmin(gap / scale)) + 1
        raise HypothesisFails("h'' >= -K|h'| fails", witness={
            "index": k, "theta": float(theta[k]), "h_second": float(hsecond[k]),
            "h_prime": float(hprime[k]), "K": float(K)})
    a, b = theta[0], theta[-1]
    C1 = _coef(K, b - theta[t])
    C0 = _coef(K, theta[t] - a)
    upper = C1 * float(np.max(np.abs(h[t:])))
    lower = -C0 * float(np.max(np.abs(h[: t + 1])))
    value = float(hprime[t])
    holds = lower - tol <= value <= upper + tol

    # if h' vanishes inside (a, b) the proof concludes h'(a) <= 0
    zeros = np.nonzero(np.abs(hprime[inner]) <= tol)[0]
    sign_change = np.nonzero(np.sign(hprime[1:-2]) * np.sign(hprime[2:-1]) < 0)[0]
    has_zero = bool(len(zeros) or len(sign_change))
    zero_branch = {"taken": has_zero,
                   "h_prime_a": float(hprime[0]),
                   "h_prime_a_nonpositive": bool(hprime[0] <= tol) if has_zero else None}

    pairs, viol, worst = diffint_check(theta, hprime, K, tol)
    return DiffsegBounds(lower, value, upper, C0, C1, holds, zero_branch, pairs, viol, worst)


def diffint_check(theta, hprime, K, tol=1e-8):
    """Pairwise h'(t1) <= exp(K (t2 - t1)) h'(t2) inside positive-h' stretches.

    Returns (pairs checked, violations, worst excess).
    """
    pos = hprime > 0
    pairs = viol = 0
    worst = 0.0
    i = 0
    n = len(theta)
    while i < n:
        if not pos[i]:
            i += 1
            continue
        j = i
        while j < n and pos[j]:
            j += 1
        th = theta[i:j]
        hp = hprime[i:j]
        if len(th) > 1:
            dt = th[None, :] - th[:, None]
            excess = hp[:, None] - np.exp(K * dt) * hp[None, :]
            mask = np.triu(np.ones_like(dt, dtype=bool), 1)
            ex = excess[mask]
            pairs += int(mask.sum())
            viol += int(np.sum(ex > tol))
            worst = max(worst, float(ex.max()))
        i = j
    return pairs, viol, worst
