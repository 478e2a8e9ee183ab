"""Potentials u(x): bicubic grid potentials and finite maxima of g-supports."""

import csv
import io
import json

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .errors import ConfigError, GJEError
from .kernels import semidiscrete_max

TIE_ABS = 1e-9
TIE_REL = 1e-6


def tie_tolerance(v):
    """Argmax tie tolerance shared by transforms and active-support sets."""
    return TIE_ABS + TIE_REL * np.abs(v)


def grid_axes(box, n, cell_centered=False):
    """Axes for an ``n``-per-axis grid on ``box = [[lo, hi], [lo, hi]]``."""
    box = np.asarray(box, float)
    if np.ndim(n) == 0:
        n = (int(n), int(n))
    axes = []
    for (lo, hi), k in zip(box, n):
        if cell_centered:
            axes.append(lo + (np.arange(k) + 0.5) * (hi - lo) / k)
        else:
            axes.append(np.linspace(lo, hi, k))
    return tuple(axes)


class GridPotential:
    """Scalar function on a rectangular 2D grid, ``values[i, j] = u(a0[i], a1[j])``.

    Point evaluation and derivatives come from a bicubic interpolating spline;
    ``fd_gradient``/``fd_hessian`` give the plain node-based finite differences.
    """

    def __init__(self, axes, values, name="grid"):
        if len(axes) != 2:
            raise ConfigError("grid potentials are two-dimensional")
        self.axes = tuple(np.asarray(a, float) for a in axes)
        self.values = np.asarray(values, float)
        self.name = name
        if self.values.shape != tuple(len(a) for a in self.axes):
            raise ConfigError(f"values shape {self.values.shape} does not match axes")
        for a in self.axes:
            if len(a) < 4 or np.any(np.diff(a) <= 0):
                raise ConfigError("each axis needs at least 4 strictly increasing nodes")
        self._spline = None

    @classmethod
    def from_function(cls, f, axes, name="grid"):
        a0, a1 = (np.asarray(a, float) for a in axes)
        X0, X1 = np.meshgrid(a0, a1, indexing="ij")
        pts = np.column_stack([X0.ravel(), X1.ravel()])
        return cls((a0, a1), np.asarray(f(pts), float).reshape(X0.shape), name=name)

    @property
    def dim(self):
        return 2

    @property
    def shape(self):
        return self.values.shape

    @property
    def bounds(self):
        return np.array([[a[0], a[-1]] for a in self.axes])

    @property
    def spacing(self):
        return np.array([np.max(np.diff(a)) for a in self.axes])

    def points(self):
        X0, X1 = np.meshgrid(*self.axes, indexing="ij")
        return np.column_stack([X0.ravel(), X1.ravel()])

    @property
    def spline(self):
        if self._spline is None:
            if not np.all(np.isfinite(self.values)):
                raise GJEError("cannot interpolate a potential with non-finite values")
            self._spline = RectBivariateSpline(*self.axes, self.values, kx=3, ky=3, s=0)
        return self._spline

    def contains(self, pts, tol=1e-12):
        pts = np.atleast_2d(pts)
        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        return np.all((pts >= lo - tol) & (pts <= hi + tol), axis=1)

    def _eval(self, pts, dx, dy):
        pts = np.asarray(pts, float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        out = self.spline.ev(pts[:, 0], pts[:, 1], dx=dx, dy=dy)
        return float(out[0]) if single else out

    def __call__(self, pts):
        return self._eval(pts, 0, 0)

    def gradient(self, pts):
        pts = np.asarray(pts, float)
        g = np.stack([np.atleast_1d(self._eval(pts, 1, 0)),
                      np.atleast_1d(self._eval(pts, 0, 1))], axis=-1)
        return g[0] if pts.ndim == 1 else g

    def hessian(self, pts):
        pts = np.asarray(pts, float)
        uxx = np.atleast_1d(self._eval(pts, 2, 0))
        uxy = np.atleast_1d(self._eval(pts, 1, 1))
        uyy = np.atleast_1d(self._eval(pts, 0, 2))
        H = np.stack([np.stack([uxx, uxy], -1), np.stack([uxy, uyy], -1)], -2)
        return H[0] if pts.ndim == 1 else H

    def fd_gradient(self):
        return np.stack(np.gradient(self.values, *self.axes, edge_order=2), axis=-1)

    def fd_hessian(self):
        g0, g1 = np.gradient(self.values, *self.axes, edge_order=2)
        h00, h01 = np.gradient(g0, *self.axes, edge_order=2)
        h10, h11 = np.gradient(g1, *self.axes, edge_order=2)
        off = 0.5 * (h01 + h10)
        return np.stack([np.stack([h00, off], -1), np.stack([off, h11], -1)], -2)

    def shifted(self, c):
        return GridPotential(self.axes, self.values + c, name=self.name)

    # -- serialisation ------------------------------------------------------

    def to_dict(self):
        return {"axes": [a.tolist() for a in self.axes], "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, d, name="grid"):
        try:
            return cls(d["axes"], d["values"], name=name)
        except KeyError as exc:
            raise ConfigError(f"grid potential JSON is missing {exc}") from None

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text, name="grid"):
        return cls.from_dict(json.loads(text), name=name)

    def to_csv(self):
        """Two header rows carry the axes; the remaining rows are ``values``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["axis0"] + [repr(float(v)) for v in self.axes[0]])
        w.writerow(["axis1"] + [repr(float(v)) for v in self.axes[1]])
        for row in self.values:
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, name="grid"):
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if len(rows) < 3 or rows[0][0] != "axis0" or rows[1][0] != "axis1":
            raise ConfigError("grid CSV must start with 'axis0' and 'axis1' header rows")
        a0 = [float(v) for v in rows[0][1:]]
        a1 = [float(v) for v in rows[1][1:]]
        vals = [[float(v) for v in r] for r in rows[2:]]
        return cls((a0, a1), vals, name=name)


class SemiDiscretePotential:
    """u(x) = max_i g(x, y_i, z_i) for finitely many g-supports."""

    def __init__(self, gf, ys, zs):
        self.gf = gf
        self.ys = np.atleast_2d(np.asarray(ys, float))
        self.zs = np.atleast_1d(np.asarray(zs, float))
        if len(self.ys) == 0 or len(self.ys) != len(self.zs):
            raise ConfigError("need a non-empty list of supports with matching y and z")
        if self.ys.shape[1] != gf.dim:
            raise ConfigError("support points have the wrong dimension")

    @property
    def supports(self):
        return list(zip(self.ys, self.zs))

    def _values(self, pts):
        pts = np.atleast_2d(np.asarray(pts, float))
        spec = self.gf.kernel_spec
        zbox = self.gf.kernel_zbox
        if spec is not None and zbox is not None:
            code, eps, primal, swap = spec
            # the kernel evaluates duals; flipping ``primal`` evaluates gf itself
            u, _, _ = semidiscrete_max((code, eps, not primal, swap), zbox, pts, self.ys, self.zs,
                                       tie=TIE_ABS)
            return u
        return self.all_values(pts).max(axis=1)

    def __call__(self, pts):
        single = np.ndim(pts) == 1
        u = self._values(pts)
        return float(u[0]) if single else u

    def all_values(self, pts):
        pts = np.atleast_2d(np.asarray(pts, float))
        return self.gf.value(pts[:, None, :], self.ys[None, :, :], self.zs[None, :])

    def active(self, pts):
        """Indices of the supports attaining the max (within the tie tolerance)."""
        vals = self.all_values(pts)
        best = vals.max(axis=1)
        mask = vals >= (best - tie_tolerance(best))[:, None]
        return [np.nonzero(r)[0] for r in mask]

    def to_grid(self, axes, name="semi-discrete"):
        return GridPotential.from_function(self._values, axes, name=name)

    def to_dict(self):
        return {"supports": [{"y": y.tolist(), "z": float(z)} for y, z in self.supports]}


# ---------------------------------------------------------------------------
# analytic presets


def preset(name, gf=None, **kw):
    """Analytic potentials used by fixtures and configs.

    * ``quadratic``: a|x - c|^2 / 2 + b (keys ``a``, ``center``, ``offset``)
    * ``kink``: |x_1| scaled by ``a``
    * ``support``: g(x, y0, z0) + perturb |x|^2 (keys ``y0``, ``z0``,
      ``perturb``; needs ``gf``)
    * ``max-supports``: SemiDiscretePotential (keys ``ys``, ``zs``; needs ``gf``)
    """
    if name == "quadratic":
        a = float(kw.get("a", 1.0))
        c = np.asarray(kw.get("center", [0.0, 0.0]), float)
        b = float(kw.get("offset", 0.0))
        return lambda p: 0.5 * a * np.sum((np.atleast_2d(p) - c) ** 2, axis=1) + b
    if name == "kink":
        a = float(kw.get("a", 1.0))
        return lambda p: a * np.abs(np.atleast_2d(p)[:, 0])
    if name in ("support", "max-supports") and gf is None:
        raise ConfigError(f"preset {name!r} needs a generating function")
    if name == "support":
        y0 = np.asarray(kw["y0"], float)
        z0 = float(kw["z0"])
        b = float(kw.get("perturb", 0.0))
        return lambda p: (gf.value(np.atleast_2d(p), y0[None, :], z0)
                          + b * np.sum(np.atleast_2d(p) ** 2, axis=1))
    if name == "max-supports":
        return SemiDiscretePotential(gf, kw["ys"], kw["zs"])
    raise ConfigError(f"unknown potential preset {name!r}")
