"""Implicit maps Y, Z, the dual generating function g*, the maps X, U, and
the g*-transform of grid potentials.

The dual function object of ``gf`` is another :class:`GeneratingFunction`
``D(a, b, u) = g*(b, a, u)`` with ``a`` ranging over the y-box and ``b`` over
the x-box, so that every primal routine (Newton solves, segments, transforms)
applied to ``D`` yields its dual counterpart.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.stats import qmc

from .errors import EmptyAdmissibleSet, LeftDomain, NoConvergence, OutOfRange, StencilExitsDomain
from .genfun import EPS, DomainBox, GeneratingFunction, split_jet
from .kernels import gstar_transform as _gstar_kernel
from .potentials import TIE_ABS, TIE_REL, GridPotential

TOL_NEWTON = 1e-10
MAX_NEWTON = 50
MAX_HALVINGS = 20


@dataclass(frozen=True)
class ContactState:
    """(x, u, p) together with the solved (y, z) = (Y, Z)(x, u, p)."""

    x: np.ndarray
    u: float
    p: np.ndarray
    y: np.ndarray
    z: float
    residual: float = 0.0
    iterations: int = 0

    def to_dict(self):
        return {"x": self.x.tolist(), "u": self.u, "p": self.p.tolist(),
                "y": self.y.tolist(), "z": self.z, "residual": self.residual,
                "iterations": self.iterations}


@dataclass(frozen=True)
class DualContactState:
    """(y, z, q) together with the solved (x, u) = (X, U)(y, z, q)."""

    y: np.ndarray
    z: float
    q: np.ndarray
    x: np.ndarray
    u: float
    residual: float = 0.0
    iterations: int = 0

    def to_dict(self):
        return {"y": self.y.tolist(), "z": self.z, "q": self.q.tolist(),
                "x": self.x.tolist(), "u": self.u, "residual": self.residual,
                "iterations": self.iterations}


# ---------------------------------------------------------------------------
# Y, Z by damped Newton


def _yz_residual(gf, x, u, p, y, z):
    d = gf.derivs(x, y, z, 2)
    F = np.concatenate([[d["g"] - u], d["g_x"] - p])
    return F, d


def _yz_jacobian(d, n):
    J = np.empty((n + 1, n + 1))
    J[0, :n] = d["g_y"]
    J[0, n] = d["g_z"]
    J[1:, :n] = d["g_xy"]
    J[1:, n] = d["g_xz"]
    return J


def _default_seed(gf, x):
    y = gf.gamma.y_center()
    lo, hi = gf.gamma.z_interval(x, y)
    return y, 0.5 * (lo + hi)


def solve_YZ(gf, x, u, p, seed=None, tol=TOL_NEWTON, max_iter=MAX_NEWTON):
    """Solve g(x, y, z) = u and g_x(x, y, z) = p for (y, z) by damped Newton.

    ``seed`` may be a FiberPoint or a ``(y, z)`` pair; the default is the
    centre of the y-box and the midpoint of the z-interval there.
    """
    x = np.asarray(x, float)
    p = np.asarray(p, float)
    u = float(u)
    n = gf.dim
    if seed is None:
        y, z = _default_seed(gf, x)
    elif hasattr(seed, "y"):
        y, z = seed.y, seed.z
    else:
        y, z = seed
    y = np.array(y, float)
    z = float(z)
    if not gf.gamma.contains(x, y, z):
        raise LeftDomain(f"seed ({y}, {z}) is not inside Gamma")

    F, d = _yz_residual(gf, x, u, p, y, z)
    res = float(np.max(np.abs(F)))
    for it in range(1, max_iter + 1):
        try:
            step = np.linalg.solve(_yz_jacobian(d, n), -F)
        except np.linalg.LinAlgError:
            raise NoConvergence("singular Newton matrix in the Y/Z solve") from None
        if res < tol:
            # one extra step past tolerance keeps downstream finite
            # differences of (Y, Z) smooth
            y_new, z_new = y + step[:n], z + step[n]
            if gf.gamma.contains(x, y_new, z_new):
                F_new, _ = _yz_residual(gf, x, u, p, y_new, z_new)
                res_new = float(np.max(np.abs(F_new)))
                if res_new <= res:
                    y, z, res = y_new, z_new, res_new
            return ContactState(x, u, p, y, z, res, it)
        t = 1.0
        inside = False
        for _ in range(MAX_HALVINGS + 1):
            y_new = y + t * step[:n]
            z_new = z + t * step[n]
            if gf.gamma.contains(x, y_new, z_new):
                inside = True
                F_new, d_new = _yz_residual(gf, x, u, p, y_new, z_new)
                res_new = float(np.max(np.abs(F_new)))
                if res_new < res:
                    break
            t *= 0.5
        else:
            if not inside:
                raise LeftDomain(f"Newton iterate left Gamma at x={x.tolist()}, u={u}, p={p.tolist()}")
            raise NoConvergence(f"Newton stalled at residual {res:.3e}")
        y, z, F, d, res = y_new, z_new, F_new, d_new, res_new
    if res < tol:
        return ContactState(x, u, p, y, z, res, max_iter)
    raise NoConvergence(f"Y/Z Newton did not converge in {max_iter} iterations (residual {res:.3e})")


def lhs_seeds(gf, x, n_seeds=8, seed=0):
    """Latin-hypercube seeds (y, z) spread over the y-box and z-interval."""
    g = gf.gamma
    n = gf.dim
    sampler = qmc.LatinHypercube(d=n + 1, seed=seed)
    pts = sampler.random(n_seeds)
    out = []
    for row in pts:
        y = g.y_lo + row[:n] * (g.y_hi - g.y_lo)
        lo, hi = g.z_interval(x, y)
        # stay off the fibre ends so the seed is strictly inside Gamma
        frac = 0.02 + 0.96 * row[n]
        out.append((y, lo + frac * (hi - lo)))
    return out


def solve_YZ_multistart(gf, x, u, p, n_seeds=8, seed=0, tol=TOL_NEWTON):
    """Run :func:`solve_YZ` from Latin-hypercube seeds.

    Returns ``(solutions, seeds)``: the converged ``(y, z)`` pairs and the
    seeds used (as lists), failed starts being dropped.
    """
    seeds = lhs_seeds(gf, np.asarray(x, float), n_seeds, seed)
    sols = []
    for y0, z0 in seeds:
        try:
            st = solve_YZ(gf, x, u, p, seed=(y0, z0), tol=tol)
        except (NoConvergence, LeftDomain, StencilExitsDomain):
            continue
        sols.append((st.y, st.z))
    return sols, [[y0.tolist(), float(z0)] for y0, z0 in seeds]


# ---------------------------------------------------------------------------
# g* by monotone root finding


def dual_g(gf, x, y, u, tol=1e-12):
    """The unique z in the closed fibre with g(x, y, z) = u."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    u = float(u)
    closed = gf.dual_closed_form(x, y, u)
    lo, hi = gf.gamma.z_interval(x, y)
    f_lo = float(gf.value(x, y, lo)) - u
    f_hi = float(gf.value(x, y, hi)) - u
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if not (f_lo > 0 > f_hi):
        raise OutOfRange(f"u={u} is outside the range [{f_hi + u}, {f_lo + u}] of g(x, y, .)")
    if closed is not None and np.isfinite(closed) and lo <= closed <= hi:
        z = float(closed)
    else:
        z = brentq(lambda t: float(gf.value(x, y, t)) - u, lo, hi, xtol=1e-15, rtol=4 * EPS,
                   maxiter=200)
    # Newton polish; keep a step only if it reduces the residual
    r = abs(float(gf.value(x, y, z)) - u)
    for _ in range(3):
        if r <= tol * 1e-2:
            break
        gz = _gz(gf, x, y, z)
        z_new = min(hi, max(lo, z - (float(gf.value(x, y, z)) - u) / gz))
        r_new = abs(float(gf.value(x, y, z_new)) - u)
        if r_new >= r:
            break
        z, r = z_new, r_new
    return z


def _gz(gf, x, y, z):
    if gf.analytic:
        return float(gf.jet(x, y, z, 1)[1][-1])
    lo, hi = gf.gamma.z_interval(x, y)
    h = EPS ** (1 / 3) * max(1.0, abs(z))
    a, b = max(lo, z - h), min(hi, z + h)
    return float((gf.value(x, y, b) - gf.value(x, y, a)) / (b - a))


def _bounds_array(bound, x, y):
    try:
        out = np.asarray(bound(x, y), float)
        return np.broadcast_to(out, np.broadcast_shapes(x.shape[:-1], y.shape[:-1]))
    except (TypeError, ValueError):
        xb, yb = np.broadcast_arrays(x, y)
        out = np.empty(xb.shape[:-1])
        for i in np.ndindex(out.shape):
            out[i] = bound(xb[i], yb[i])
        return out


def dual_g_array(gf, x, y, u, iters=200):
    """Vectorised g*(x, y, u) over broadcast arrays; NaN where out of range."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    u = np.asarray(u, float)
    shape = np.broadcast_shapes(x.shape[:-1], y.shape[:-1], u.shape)
    lo = np.broadcast_to(_bounds_array(gf.gamma.z_lo, x, y), shape)
    hi = np.broadcast_to(_bounds_array(gf.gamma.z_hi, x, y), shape)
    ub = np.broadcast_to(u, shape)
    tol_lo = 1e-12 * (1 + np.abs(lo))
    tol_hi = 1e-12 * (1 + np.abs(hi))
    closed = gf.dual_closed_form(x, y, u)
    if closed is not None:
        z = np.broadcast_to(np.asarray(closed, float), shape)
        with np.errstate(invalid="ignore"):
            ok = (z >= lo - tol_lo) & (z <= hi + tol_hi)
        return np.where(ok, z, np.nan)
    xb = np.broadcast_to(x, shape + x.shape[-1:])
    yb = np.broadcast_to(y, shape + y.shape[-1:])
    f_lo = gf.value(xb, yb, lo) - ub
    f_hi = gf.value(xb, yb, hi) - ub
    ok = (f_lo >= 0) & (f_hi <= 0)
    a, b = lo.copy(), hi.copy()
    for _ in range(iters):
        mid = 0.5 * (a + b)
        fm = gf.value(xb, yb, mid) - ub
        a = np.where(fm > 0, mid, a)
        b = np.where(fm > 0, b, mid)
        if np.all(b - a <= 1e-15 * (1 + np.abs(a))):
            break
    return np.where(ok, 0.5 * (a + b), np.nan)


def dual_gradient(gf, x, y, u):
    """(g*_x, g*_y, g*_u) at (x, y, u) by implicit differentiation."""
    z = dual_g(gf, x, y, u)
    d = gf.derivs(x, y, z, 1)
    return -d["g_x"] / d["g_z"], -d["g_y"] / d["g_z"], 1.0 / d["g_z"]


# ---------------------------------------------------------------------------
# dual function objects


class _DualBound:
    """z-bound of the dual object: g(b, a, base z-bound) at the swapped point."""

    def __init__(self, base, which):
        self.base = base
        self.which = which

    def __call__(self, a, b):
        g = self.base.gamma
        bound = g.z_hi if self.which == "lo" else g.z_lo
        return self.base.value(b, a, bound(b, a))


def _dual_gamma(base):
    g = base.gamma
    return DomainBox(g.y_lo, g.y_hi, g.x_lo, g.x_hi,
                     _DualBound(base, "lo"), _DualBound(base, "hi"))


def _swap_perm(n):
    return np.concatenate([np.arange(n, 2 * n), np.arange(n), [2 * n]])


def _permute(T, perm):
    for ax in range(T.ndim):
        T = np.take(T, perm, axis=ax)
    return T


class _DualBase(GeneratingFunction):
    def __init__(self, base):
        super().__init__(base.dim, _dual_gamma(base), name=f"dual({base.name})",
                         params=base.params, det_floor=base.det_floor)
        self.base = base
        self._perm = _swap_perm(base.dim)

    @property
    def kernel_spec(self):
        spec = self.base.kernel_spec
        if spec is None:
            return None
        code, eps, primal, swap = spec
        return (code, eps, not primal, not swap)

    @property
    def kernel_zbox(self):
        return self.base.kernel_zbox

    def dual(self):
        return self.base

    def dual_closed_form(self, a, b, w):
        return self.base.value(b, a, w)

    def describe(self):
        return {"family": self.name, "base": self.base.describe()}


class SwappedFamily(_DualBase):
    """Dual of a z-linear family c(x, y) - z: exactly c(b, a) - u."""

    z_linear = True

    def value(self, a, b, u):
        return self.base.value(b, a, u)

    def _jet(self, a, b, u, order):
        jet = self.base.jet(b, a, u, order)
        return [jet[0]] + [_permute(T, self._perm) for T in jet[1:]]


class DualFamily(_DualBase):
    """Generic dual: values by root finding, derivatives by implicit
    differentiation up to order 2 and finite differences of the Hessian above.
    """

    def value(self, a, b, u):
        a = np.asarray(a, float)
        b = np.asarray(b, float)
        u = np.asarray(u, float)
        if a.ndim == 1 and b.ndim == 1 and u.ndim == 0:
            return dual_g(self.base, b, a, float(u))
        return dual_g_array(self.base, b, a, u)

    def _base_jet2(self, w):
        """Jet up to order 2 of phi(x, y, u) = g*(x, y, u) in base ordering."""
        n = self.dim
        x, y, u = w[:n], w[n:2 * n], w[2 * n]
        z = dual_g(self.base, x, y, u)
        J = self.base.jet(x, y, z, 2)
        m = 2 * n + 1
        Fz = float(J[1][2 * n])
        Pv = np.concatenate([J[1][:2 * n], [-1.0]])
        Pvv = np.zeros((m, m))
        Pvv[:2 * n, :2 * n] = J[2][:2 * n, :2 * n]
        Pvz = np.concatenate([J[2][:2 * n, 2 * n], [0.0]])
        Fzz = float(J[2][2 * n, 2 * n])
        phi_v = -Pv / Fz
        phi_vv = -(Pvv + np.outer(Pvz, phi_v) + np.outer(phi_v, Pvz)
                   + Fzz * np.outer(phi_v, phi_v)) / Fz
        return [np.array(z), phi_v, phi_vv]

    def _jet(self, a, b, u, order):
        n = self.dim
        w0 = np.concatenate([b, a, [u]])
        jet = self._base_jet2(w0)[: order + 1]
        if order >= 3:
            jet.extend(self._fd_higher(a, b, u, w0, order))
        return [jet[0]] + [_permute(T, self._perm) for T in jet[1:]]

    def _fd_higher(self, a, b, u, w0, order):
        n = self.dim
        m = 2 * n + 1
        lo, hi = self.gamma.z_interval(a, b)
        widths = np.concatenate([self.base.gamma.x_hi - self.base.gamma.x_lo,
                                 self.base.gamma.y_hi - self.base.gamma.y_lo, [hi - lo]])
        scale = np.clip(widths, 1e-3, 1.0)
        base_pt = lambda w: (w[n:2 * n], w[:n], w[2 * n])  # noqa: E731  (a, b, u) of D

        def hess(w):
            aa, bb, uu = base_pt(w)
            if not self.gamma.contains(aa, bb, uu, closed=True):
                raise StencilExitsDomain(f"FD stencil point {w} outside the dual domain")
            return self._base_jet2(w)[2]

        out = []
        # third order: central difference of the Hessian
        h = EPS ** (1 / 3) * scale
        T3 = np.zeros((m,) * 3)
        cache = {}
        for k in range(m):
            e = np.zeros(m)
            e[k] = h[k]
            cache[k] = (hess(w0 + e), hess(w0 - e))
            T3[:, :, k] = (cache[k][0] - cache[k][1]) / (2 * h[k])
        T3 = _symmetrise(T3)
        out.append(T3)
        if order >= 4:
            h4 = EPS ** (1 / 4) * scale
            H0 = hess(w0)
            T4 = np.zeros((m,) * 4)
            for k in range(m):
                for l in range(k, m):
                    ek = np.zeros(m)
                    el = np.zeros(m)
                    ek[k] = h4[k]
                    el[l] = h4[l]
                    if k == l:
                        val = (hess(w0 + ek) - 2 * H0 + hess(w0 - ek)) / h4[k] ** 2
                    else:
                        val = (hess(w0 + ek + el) - hess(w0 + ek - el)
                               - hess(w0 - ek + el) + hess(w0 - ek - el)) / (4 * h4[k] * h4[l])
                    T4[:, :, k, l] = val
                    T4[:, :, l, k] = val
            out.append(_symmetrise(T4))
        return out


def _symmetrise(T):
    from itertools import permutations
    perms = list(permutations(range(T.ndim)))
    return sum(np.transpose(T, p) for p in perms) / len(perms)


def dual_generating_function(gf):
    """Function object of g* with the roles of (x, u) and (y, z) swapped."""
    if isinstance(gf, _DualBase):
        return gf.base
    if gf.z_linear:
        return SwappedFamily(gf)
    return DualFamily(gf)


def solve_XU(gf, y, z, q, seed=None, tol=TOL_NEWTON, max_iter=MAX_NEWTON):
    """Solve g*(x, y, u) = z and g*_y(x, y, u) = q for (x, u)."""
    st = solve_YZ(gf.dual(), y, z, q, seed=seed, tol=tol, max_iter=max_iter)
    return DualContactState(st.x, st.u, st.p, st.y, st.z, st.residual, st.iterations)


# ---------------------------------------------------------------------------
# transforms


@dataclass
class DualTransform:
    """Result of a g*-transform on a tensor y-grid.

    ``values[j]`` is NaN where no x was admissible. Argmax sets are stored in
    CSR form over the flattened y-grid: ``indices[offsets[j]:offsets[j+1]]``
    index ``x_points``.
    """

    axes: tuple
    values: np.ndarray
    offsets: np.ndarray
    indices: np.ndarray
    skipped: np.ndarray
    x_points: np.ndarray

    @property
    def y_points(self):
        grids = np.meshgrid(*self.axes, indexing="ij")
        return np.column_stack([g.ravel() for g in grids])

    @property
    def valid(self):
        return np.isfinite(self.values)

    @property
    def n_invalid(self):
        return int(np.sum(~self.valid))

    def argmax(self, j):
        j = int(j)
        return self.x_points[self.indices[self.offsets[j]:self.offsets[j + 1]]]

    def counts(self):
        return np.diff(self.offsets)

    def potential(self, name="transform"):
        if self.n_invalid:
            raise EmptyAdmissibleSet(f"{self.n_invalid} dual grid points had no admissible x")
        return GridPotential(self.axes, self.values.reshape([len(a) for a in self.axes]), name=name)


def _as_points(u, x_points):
    if x_points is not None:
        xs = np.asarray(x_points, float)
        return xs, np.asarray(u(xs), float)
    return u.points(), u.values.ravel()


def g_star_transform(gf, u, y_axes, x_points=None, tie_abs=TIE_ABS, tie_rel=TIE_REL):
    """v(y) = max over grid x of g*(x, y, u(x)) with argmax sets.

    ``u`` is a GridPotential (its nodes are the x-grid) or any callable when
    ``x_points`` is given.
    """
    xs, us = _as_points(u, x_points)
    y_axes = tuple(np.asarray(a, float) for a in y_axes)
    grids = np.meshgrid(*y_axes, indexing="ij")
    ys = np.column_stack([g.ravel() for g in grids])
    spec, zbox = gf.kernel_spec, gf.kernel_zbox
    if spec is not None and zbox is not None:
        v, offsets, indices, skipped = _gstar_kernel(spec, zbox, xs, us, ys, tie_abs, tie_rel)
    else:
        v, offsets, indices, skipped = _gstar_generic(gf, xs, us, ys, tie_abs, tie_rel)
    return DualTransform(y_axes, v, offsets, indices, skipped, xs)


def _gstar_generic(gf, xs, us, ys, tie_abs, tie_rel):
    m = len(ys)
    v = np.full(m, np.nan)
    skipped = np.zeros(m, dtype=np.int64)
    counts = np.zeros(m, dtype=np.int64)
    chunks = []
    for j, y in enumerate(ys):
        z = dual_g_array(gf, xs, y[None, :], us)
        bad = np.isnan(z)
        skipped[j] = int(bad.sum())
        if bad.all():
            chunks.append(np.zeros(0, np.int64))
            continue
        best = float(np.nanmax(z))
        v[j] = best
        idx = np.nonzero(~bad & (z >= best - (tie_abs + tie_rel * abs(best))))[0]
        counts[j] = len(idx)
        chunks.append(idx)
    offsets = np.zeros(m + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    indices = np.concatenate(chunks).astype(np.int64) if chunks else np.zeros(0, np.int64)
    return v, offsets, indices, skipped


def g_transform(gf, v, x_axes, y_points=None, **kw):
    """u(x) = max over grid y of g(x, y, v(y)): the g*-transform of the dual object."""
    return g_star_transform(gf.dual(), v, x_axes, x_points=y_points, **kw)


def default_dual_box(gf, u, pad=0.05, max_per_axis=65):
    """Bounding box of Y_u over (a strided subset of) the grid, padded symmetrically.

    Each side is padded by the larger of ``pad`` times its own width and
    ``pad`` times the widest side, so degenerate (flat) images still get a box.
    """
    idx = [np.unique(np.linspace(0, len(a) - 1, min(len(a), max_per_axis)).round().astype(int))
           for a in u.axes]
    grads = u.fd_gradient()
    ys = []
    prev = None
    for i in idx[0]:
        for j in idx[1]:
            x = np.array([u.axes[0][i], u.axes[1][j]])
            try:
                st = solve_YZ(gf, x, u.values[i, j], grads[i, j], seed=prev)
            except (NoConvergence, LeftDomain, StencilExitsDomain):
                try:
                    st = solve_YZ(gf, x, u.values[i, j], grads[i, j])
                except (NoConvergence, LeftDomain, StencilExitsDomain):
                    continue
            prev = (st.y, st.z)
            ys.append(st.y)
    if not ys:
        raise EmptyAdmissibleSet("no grid point had a solvable contact state")
    return padded_box(np.array(ys), pad)


def padded_box(pts, pad=0.05):
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    width = hi - lo
    padding = np.maximum(pad * width, pad * max(width.max(), 1e-6))
    return np.column_stack([lo - padding, hi + padding])


def dual_grid(box, resolution, kind="cells"):
    """Axes for a dual grid: cell centres (box counting) or nodes (C^1 scans)."""
    box = np.asarray(box, float)
    res = int(resolution)
    if kind == "cells":
        return tuple(lo + (np.arange(res) + 0.5) * (hi - lo) / res for lo, hi in box)
    if kind == "nodes":
        return tuple(np.linspace(lo, hi, res + 1) for lo, hi in box)
    raise ValueError(f"unknown dual grid kind {kind!r}")


def contact_state(gf, x, u, p, seed=None):
    """Convenience wrapper returning the contact state and its derivative blocks."""
    st = solve_YZ(gf, x, u, p, seed=seed)
    return st, split_jet(gf.jet(st.x, st.y, st.z, 2), gf.dim)
