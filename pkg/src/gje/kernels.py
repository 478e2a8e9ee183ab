"""Hot inner loops, each with a numba kernel and a numpy fallback.

The public functions dispatch on :func:`gje._accel.numba_enabled` at call
time. Closed-form kernels exist only for the built-in families; a family is
described to them by its ``kernel_spec`` tuple ``(code, eps, primal, swap)``:

* ``code``: 0 bilinear, 1 quad-cost, 2 log-cost, 3 sqrt-cost,
  4 perturbed-bilinear;
* ``primal``: evaluate the family F itself instead of its dual F*;
* ``swap``: feed the two point arguments to F (or F*) in reverse order.

With ``(zlo, zhi)`` the constant z-box of F, an evaluation is admissible when
the F-level z value (the input if primal, the output otherwise) is inside it.
"""

import math

import numpy as np

from ._accel import numba_enabled, optional_njit, prange

# ---------------------------------------------------------------------------
# scalar closed forms (numba)


@optional_njit
def _phi0(code, r):
    if code == 1:
        return -r
    if code == 2:
        if r <= 0.0:
            return np.nan
        return -0.5 * math.log(2.0 * r)
    return -math.sqrt(1.0 + 2.0 * r)


@optional_njit
def _kernel_eval(code, eps, primal, xs, i, ys, j, u, zlo, zhi):
    """Kernel value at (xs[i], ys[j], u), or NaN when inadmissible.

    Both closed-form families are symmetric in their point arguments, so the
    ``swap`` flag never changes a value and is not needed here.
    """
    n = xs.shape[1]
    if primal and (u < zlo or u > zhi):
        return np.nan
    if code == 0 or code == 4:
        s = 0.0
        for k in range(n):
            s += xs[i, k] * ys[j, k]
        if code == 0:
            out = s - u
        elif primal:
            out = s - u + 0.5 * eps * u * u
        else:
            t = s - u
            disc = 1.0 - 2.0 * eps * t
            if disc < 0.0:
                return np.nan
            out = 2.0 * t / (1.0 + math.sqrt(disc))
    else:
        r = 0.0
        for k in range(n):
            d = xs[i, k] - ys[j, k]
            r += d * d
        out = _phi0(code, 0.5 * r) - u
    if not primal and (out < zlo or out > zhi or out != out):
        return np.nan
    return out


@optional_njit
def _row_values(code, eps, primal, xs, us, ys, j, zlo, zhi, vals):
    """Kernel values for every x against ys[j]; the family branch is hoisted
    out of the inner loop so each case compiles to a tight loop."""
    n_x, n = xs.shape
    if code == 0 or code == 4:
        for i in range(n_x):
            s = 0.0
            for k in range(n):
                s += xs[i, k] * ys[j, k]
            vals[i] = s
        if code == 0:
            for i in range(n_x):
                vals[i] -= us[i]
        elif primal:
            for i in range(n_x):
                vals[i] += -us[i] + 0.5 * eps * us[i] * us[i]
        else:
            for i in range(n_x):
                t = vals[i] - us[i]
                disc = 1.0 - 2.0 * eps * t
                vals[i] = 2.0 * t / (1.0 + math.sqrt(disc)) if disc >= 0.0 else np.nan
    else:
        for i in range(n_x):
            r = 0.0
            for k in range(n):
                d = xs[i, k] - ys[j, k]
                r += d * d
            vals[i] = _phi0(code, 0.5 * r) - us[i]
    if primal:
        for i in range(n_x):
            if us[i] < zlo or us[i] > zhi:
                vals[i] = np.nan
    else:
        for i in range(n_x):
            if not (vals[i] >= zlo and vals[i] <= zhi):
                vals[i] = np.nan


# Argmax sets are usually tiny; the first pass stores up to CAP indices per
# row and only overflowing rows are re-scanned.
CAP = 16


@optional_njit(parallel=True)
def _gstar_pass1(code, eps, primal, zlo, zhi, xs, us, ys, tie_abs, tie_rel,
                 v, counts, skipped, first):
    n_x = xs.shape[0]
    for j in prange(ys.shape[0]):
        vals = np.empty(n_x)
        _row_values(code, eps, primal, xs, us, ys, j, zlo, zhi, vals)
        best = -np.inf
        nskip = 0
        for i in range(n_x):
            val = vals[i]
            if val != val:
                nskip += 1
            elif val > best:
                best = val
        skipped[j] = nskip
        if best == -np.inf:
            v[j] = np.nan
            counts[j] = 0
            continue
        v[j] = best
        thr = best - (tie_abs + tie_rel * abs(best))
        c = 0
        for i in range(n_x):
            if vals[i] >= thr:
                if c < first.shape[1]:
                    first[j, c] = i
                c += 1
        counts[j] = c


@optional_njit(parallel=True)
def _gstar_pass2(code, eps, primal, zlo, zhi, xs, us, ys, tie_abs, tie_rel,
                 v, counts, first, offsets, indices):
    n_x = xs.shape[0]
    cap = first.shape[1]
    for j in prange(ys.shape[0]):
        pos = offsets[j]
        if counts[j] <= cap:
            for c in range(counts[j]):
                indices[pos + c] = first[j, c]
            continue
        thr = v[j] - (tie_abs + tie_rel * abs(v[j]))
        vals = np.empty(n_x)
        _row_values(code, eps, primal, xs, us, ys, j, zlo, zhi, vals)
        for i in range(n_x):
            val = vals[i]
            if val == val and val >= thr:
                indices[pos] = i
                pos += 1


# ---------------------------------------------------------------------------
# vectorised closed forms (numpy)


def eval_numpy(spec, zbox, a, b, u):
    """Broadcast version of ``_kernel_eval`` (NaN where inadmissible)."""
    code, eps, primal, _ = spec
    zlo, zhi = zbox
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    u = np.asarray(u, float)
    with np.errstate(invalid="ignore", divide="ignore"):
        if code in (0, 4):
            s = np.sum(a * b, axis=-1)
            if code == 0:
                out = s - u
            elif primal:
                out = s - u + 0.5 * eps * u * u
            else:
                t = s - u
                disc = 1.0 - 2.0 * eps * t
                out = np.where(disc >= 0, 2.0 * t / (1.0 + np.sqrt(np.maximum(disc, 0))), np.nan)
        else:
            d = a - b
            r = 0.5 * np.sum(d * d, axis=-1)
            if code == 1:
                c = -r
            elif code == 2:
                c = np.where(r > 0, -0.5 * np.log(2.0 * np.where(r > 0, r, 1.0)), np.nan)
            else:
                c = -np.sqrt(1.0 + 2.0 * r)
            out = c - u
        if primal:
            out = np.where((u >= zlo) & (u <= zhi), out, np.nan)
        else:
            out = np.where((out >= zlo) & (out <= zhi), out, np.nan)
    return out


def _gstar_numpy(spec, zbox, xs, us, ys, tie_abs, tie_rel, chunk_elems=2_000_000):
    n_x, m = xs.shape[0], ys.shape[0]
    v = np.full(m, np.nan)
    skipped = np.zeros(m, dtype=np.int64)
    rows, cols = [], []
    step = max(1, chunk_elems // max(n_x, 1))
    for start in range(0, m, step):
        yb = ys[start:start + step]
        vals = eval_numpy(spec, zbox, xs[None, :, :], yb[:, None, :], us[None, :])
        bad = np.isnan(vals)
        skipped[start:start + len(yb)] = bad.sum(axis=1)
        filled = np.where(bad, -np.inf, vals)
        best = filled.max(axis=1)
        ok = np.isfinite(best)
        v[start:start + len(yb)] = np.where(ok, best, np.nan)
        thr = best - (tie_abs + tie_rel * np.abs(np.where(ok, best, 0.0)))
        r, c = np.nonzero((filled >= thr[:, None]) & ok[:, None] & ~bad)
        rows.append(r + start)
        cols.append(c)
    rows = np.concatenate(rows) if rows else np.zeros(0, np.int64)
    cols = np.concatenate(cols) if cols else np.zeros(0, np.int64)
    counts = np.bincount(rows, minlength=m).astype(np.int64)
    offsets = np.zeros(m + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return v, offsets, cols.astype(np.int64), skipped


def gstar_transform(spec, zbox, xs, us, ys, tie_abs=1e-9, tie_rel=1e-6, use_numba=None):
    """Max over xs of the kernel value at each y, with CSR-packed tie sets.

    Returns ``(v, offsets, indices, skipped)``: ``indices[offsets[j]:offsets[j+1]]``
    are the x indices within the tie tolerance of ``v[j]``.
    """
    xs = np.ascontiguousarray(xs, dtype=float)
    us = np.ascontiguousarray(us, dtype=float)
    ys = np.ascontiguousarray(ys, dtype=float)
    if use_numba is None:
        use_numba = numba_enabled()
    if not use_numba:
        return _gstar_numpy(spec, zbox, xs, us, ys, tie_abs, tie_rel)
    code, eps, primal, _ = spec
    m = ys.shape[0]
    v = np.empty(m)
    counts = np.empty(m, dtype=np.int64)
    skipped = np.empty(m, dtype=np.int64)
    first = np.empty((m, CAP), dtype=np.int64)
    args = (int(code), float(eps), bool(primal), float(zbox[0]), float(zbox[1]), xs, us, ys,
            float(tie_abs), float(tie_rel))
    _gstar_pass1(*args, v, counts, skipped, first)
    offsets = np.zeros(m + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    indices = np.empty(offsets[-1], dtype=np.int64)
    _gstar_pass2(*args, v, counts, first, offsets, indices)
    return v, offsets, indices, skipped


# ---------------------------------------------------------------------------
# semi-discrete maximum u(x) = max_k g(x, y_k, z_k)


@optional_njit(parallel=True)
def _semidiscrete_numba(code, eps, primal, zlo, zhi, xs, ys, zs, tie, out, arg, nact):
    for i in prange(xs.shape[0]):
        best = -np.inf
        besti = -1
        for k in range(ys.shape[0]):
            val = _kernel_eval(code, eps, primal, xs, i, ys, k, zs[k], zlo, zhi)
            if val == val and val > best:
                best = val
                besti = k
        out[i] = best
        arg[i] = besti
        c = 0
        for k in range(ys.shape[0]):
            val = _kernel_eval(code, eps, primal, xs, i, ys, k, zs[k], zlo, zhi)
            if val == val and val >= best - tie:
                c += 1
        nact[i] = c


def semidiscrete_max(spec, zbox, xs, ys, zs, tie=1e-9, use_numba=None):
    """Return ``(u, argmax, n_active)`` for the max of finitely many supports."""
    xs = np.ascontiguousarray(xs, dtype=float)
    ys = np.ascontiguousarray(ys, dtype=float)
    zs = np.ascontiguousarray(zs, dtype=float)
    if use_numba is None:
        use_numba = numba_enabled()
    if use_numba:
        n = xs.shape[0]
        out = np.empty(n)
        arg = np.empty(n, dtype=np.int64)
        nact = np.empty(n, dtype=np.int64)
        code, eps, primal, _ = spec
        _semidiscrete_numba(int(code), float(eps), bool(primal),
                            float(zbox[0]), float(zbox[1]), xs, ys, zs, float(tie), out, arg, nact)
        return out, arg, nact
    vals = eval_numpy(spec, zbox, xs[:, None, :], ys[None, :, :], zs[None, :])
    filled = np.where(np.isnan(vals), -np.inf, vals)
    out = filled.max(axis=1)
    arg = filled.argmax(axis=1).astype(np.int64)
    nact = (filled >= out[:, None] - tie).sum(axis=1).astype(np.int64)
    return out, arg, nact


# ---------------------------------------------------------------------------
# polygons


@optional_njit(parallel=True)
def _pip_numba(pts, poly, tol, out):
    m = poly.shape[0]
    for p in prange(pts.shape[0]):
        px = pts[p, 0]
        py = pts[p, 1]
        inside = False
        on_edge = False
        for e in range(m):
            ax = poly[e, 0]
            ay = poly[e, 1]
            bx = poly[(e + 1) % m, 0]
            by = poly[(e + 1) % m, 1]
            # distance to the edge, for the closed-boundary rule
            dx = bx - ax
            dy = by - ay
            L2 = dx * dx + dy * dy
            t = 0.0
            if L2 > 0:
                t = ((px - ax) * dx + (py - ay) * dy) / L2
                t = min(1.0, max(0.0, t))
            qx = ax + t * dx - px
            qy = ay + t * dy - py
            if qx * qx + qy * qy <= tol * tol:
                on_edge = True
            if (ay > py) != (by > py):
                xint = ax + (py - ay) * dx / dy
                if px < xint:
                    inside = not inside
        out[p] = inside or on_edge


def _pip_numpy(pts, poly, tol):
    px, py = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    on_edge = np.zeros(len(pts), dtype=bool)
    m = len(poly)
    for e in range(m):
        ax, ay = poly[e]
        bx, by = poly[(e + 1) % m]
        dx, dy = bx - ax, by - ay
        L2 = dx * dx + dy * dy
        if L2 > 0:
            t = np.clip(((px - ax) * dx + (py - ay) * dy) / L2, 0.0, 1.0)
        else:
            t = np.zeros_like(px)
        on_edge |= (ax + t * dx - px) ** 2 + (ay + t * dy - py) ** 2 <= tol * tol
        crosses = (ay > py) != (by > py)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            xint = ax + (py - ay) * dx / dy
        inside ^= crosses & (px < xint)
    return inside | on_edge


def points_in_polygon(pts, poly, tol=1e-12, use_numba=None):
    """Even-odd point-in-polygon test; points within ``tol`` of an edge count as inside."""
    pts = np.ascontiguousarray(np.atleast_2d(pts), dtype=float)
    poly = np.ascontiguousarray(poly, dtype=float)
    if use_numba is None:
        use_numba = numba_enabled()
    if use_numba:
        out = np.empty(len(pts), dtype=np.bool_)
        _pip_numba(pts, poly, float(tol), out)
        return out
    return _pip_numpy(pts, poly, tol)


@optional_njit
def _polygon_area(px, py, k):
    a = 0.0
    for i in range(k):
        j = (i + 1) % k
        a += px[i] * py[j] - px[j] * py[i]
    return 0.5 * abs(a)


@optional_njit
def _clip_rect_area(poly, x0, x1, y0, y1):
    """Area of polygon intersected with [x0,x1]x[y0,y1] (Sutherland-Hodgman)."""
    cap = 2 * poly.shape[0] + 8
    inx = np.empty(cap)
    iny = np.empty(cap)
    outx = np.empty(cap)
    outy = np.empty(cap)
    k = poly.shape[0]
    for i in range(k):
        inx[i] = poly[i, 0]
        iny[i] = poly[i, 1]
    for side in range(4):
        if k == 0:
            return 0.0
        nk = 0
        for i in range(k):
            sx = inx[i - 1] if i > 0 else inx[k - 1]
            sy = iny[i - 1] if i > 0 else iny[k - 1]
            ex = inx[i]
            ey = iny[i]
            if side == 0:
                ins_e = ex >= x0
                ins_s = sx >= x0
            elif side == 1:
                ins_e = ex <= x1
                ins_s = sx <= x1
            elif side == 2:
                ins_e = ey >= y0
                ins_s = sy >= y0
            else:
                ins_e = ey <= y1
                ins_s = sy <= y1
            if ins_e != ins_s:
                if side == 0 or side == 1:
                    xc = x0 if side == 0 else x1
                    t = (xc - sx) / (ex - sx)
                    outx[nk] = xc
                    outy[nk] = sy + t * (ey - sy)
                else:
                    yc = y0 if side == 2 else y1
                    t = (yc - sy) / (ey - sy)
                    outx[nk] = sx + t * (ex - sx)
                    outy[nk] = yc
                nk += 1
            if ins_e:
                outx[nk] = ex
                outy[nk] = ey
                nk += 1
        k = nk
        for i in range(k):
            inx[i] = outx[i]
            iny[i] = outy[i]
    if k < 3:
        return 0.0
    return _polygon_area(inx, iny, k)


@optional_njit(parallel=True)
def _cell_areas_numba(poly, e0, e1, out):
    n0 = e0.shape[0] - 1
    n1 = e1.shape[0] - 1
    for i in prange(n0):
        for j in range(n1):
            out[i, j] = _clip_rect_area(poly, e0[i], e0[i + 1], e1[j], e1[j + 1])


def _cell_areas_python(poly, e0, e1):
    out = np.zeros((len(e0) - 1, len(e1) - 1))
    clip = getattr(_clip_rect_area, "py_func", _clip_rect_area)
    pxmin, pymin = poly.min(axis=0)
    pxmax, pymax = poly.max(axis=0)
    for i in range(len(e0) - 1):
        if e0[i + 1] < pxmin or e0[i] > pxmax:
            continue
        for j in range(len(e1) - 1):
            if e1[j + 1] < pymin or e1[j] > pymax:
                continue
            out[i, j] = clip(poly, e0[i], e0[i + 1], e1[j], e1[j + 1])
    return out


def cell_polygon_areas(poly, edges0, edges1, use_numba=None):
    """Areas of every rectangular cell of a tensor grid intersected with ``poly``."""
    poly = np.ascontiguousarray(poly, dtype=float)
    e0 = np.ascontiguousarray(edges0, dtype=float)
    e1 = np.ascontiguousarray(edges1, dtype=float)
    if use_numba is None:
        use_numba = numba_enabled()
    if use_numba:
        out = np.zeros((len(e0) - 1, len(e1) - 1))
        _cell_areas_numba(poly, e0, e1, out)
        return out
    return _cell_areas_python(poly, e0, e1)


def polygon_area(poly):
    poly = np.asarray(poly, dtype=float)
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))
