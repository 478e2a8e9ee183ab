"""Generating functions g(x, y, z), their derivative jets, and A0-A2 checks.

Variables are packed as ``w = (x_1..x_n, y_1..y_n, z)`` so a derivative of
total order k is an entry of a symmetric tensor of shape ``(2n+1,)*k``. A
*jet* is the list ``[g, Dg, D^2 g, ...]`` of those tensors at one point.
"""

from dataclasses import dataclass, field
from itertools import combinations_with_replacement, permutations, product
import math

import numpy as np

from .errors import StencilExitsDomain, LeftDomain, GJEError

EPS = np.finfo(float).eps
MAX_ORDER = 4


class ConstantBound:
    """z-bound that does not depend on (x, y)."""

    def __init__(self, value):
        self.value = float(value)

    def __call__(self, x, y):
        return self.value

    def __repr__(self):
        return f"ConstantBound({self.value!r})"


@dataclass(frozen=True)
class DomainBox:
    """Box-shaped Gamma: x-box times y-box with per-(x, y) open z-intervals."""

    x_lo: np.ndarray
    x_hi: np.ndarray
    y_lo: np.ndarray
    y_hi: np.ndarray
    z_lo: object
    z_hi: object

    @classmethod
    def from_bounds(cls, x_box, y_box, z_box):
        x_box = np.asarray(x_box, dtype=float)
        y_box = np.asarray(y_box, dtype=float)
        if x_box.shape != y_box.shape or x_box.ndim != 2 or x_box.shape[1] != 2:
            raise ValueError("x_box and y_box must both be (n, 2) arrays of [lo, hi]")
        if np.any(x_box[:, 0] >= x_box[:, 1]) or np.any(y_box[:, 0] >= y_box[:, 1]):
            raise ValueError("box bounds must satisfy lo < hi")
        lo, hi = map(float, z_box)
        if not lo < hi:
            raise ValueError("z_box must satisfy lo < hi")
        return cls(x_box[:, 0].copy(), x_box[:, 1].copy(),
                   y_box[:, 0].copy(), y_box[:, 1].copy(),
                   ConstantBound(lo), ConstantBound(hi))

    @property
    def dim(self):
        return len(self.x_lo)

    @property
    def x_box(self):
        return np.column_stack([self.x_lo, self.x_hi])

    @property
    def y_box(self):
        return np.column_stack([self.y_lo, self.y_hi])

    @property
    def constant_z(self):
        if isinstance(self.z_lo, ConstantBound) and isinstance(self.z_hi, ConstantBound):
            return self.z_lo.value, self.z_hi.value
        return None

    def z_interval(self, x, y):
        return float(self.z_lo(x, y)), float(self.z_hi(x, y))

    def x_center(self):
        return 0.5 * (self.x_lo + self.x_hi)

    def y_center(self):
        return 0.5 * (self.y_lo + self.y_hi)

    def contains_x(self, x, tol=1e-12):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.x_lo - tol) and np.all(x <= self.x_hi + tol))

    def contains_y(self, y, tol=1e-12):
        y = np.asarray(y, dtype=float)
        return bool(np.all(y >= self.y_lo - tol) and np.all(y <= self.y_hi + tol))

    def contains(self, x, y, z, closed=False, tol=1e-12):
        if not (self.contains_x(x, tol) and self.contains_y(y, tol)):
            return False
        lo, hi = self.z_interval(x, y)
        if closed:
            return lo - tol <= z <= hi + tol
        return lo < z < hi

    def swapped(self, z_lo, z_hi):
        return DomainBox(self.y_lo, self.y_hi, self.x_lo, self.x_hi, z_lo, z_hi)

    def to_dict(self):
        out = {"x_box": self.x_box.tolist(), "y_box": self.y_box.tolist()}
        cz = self.constant_z
        if cz is not None:
            out["z_box"] = list(cz)
        return out


def split_jet(jet, n):
    """Name the blocks of a jet computed at a point of R^n x R^n x R.

    Returns a dict with keys ``g, g_x, g_y, g_z`` and, when present,
    ``g_xx, g_xy, g_xz, g_yy, g_yz, g_zz``.
    """
    sx, sy, iz = slice(0, n), slice(n, 2 * n), 2 * n
    out = {"g": float(jet[0])}
    if len(jet) > 1:
        d1 = jet[1]
        out.update(g_x=d1[sx], g_y=d1[sy], g_z=float(d1[iz]))
    if len(jet) > 2:
        d2 = jet[2]
        out.update(g_xx=d2[sx, sx], g_xy=d2[sx, sy], g_xz=d2[sx, iz],
                   g_yy=d2[sy, sy], g_yz=d2[sy, iz], g_zz=float(d2[iz, iz]))
    return out


class GeneratingFunction:
    """Evaluator of g on Gamma together with partial derivatives up to order 4.

    Subclasses either implement ``_jet`` analytically or set
    ``analytic = False`` and let the finite-difference engine synthesise it
    from ``value``. Instances are immutable after construction.
    """

    analytic = True
    # (family code, epsilon, evaluate_primal, swap) for the compiled kernels,
    # or None when no closed-form dual exists.
    kernel_spec = None
    z_linear = False

    def __init__(self, dim, gamma, name="custom", params=(), det_floor=1e-8):
        if dim < 1:
            raise ValueError("dim must be positive")
        if gamma.dim != dim:
            raise ValueError("domain dimension does not match dim")
        self.dim = int(dim)
        self.gamma = gamma
        self.name = name
        self.params = tuple(float(p) for p in params)
        self.det_floor = float(det_floor)

    def __repr__(self):
        return f"{type(self).__name__}(name={self.name!r}, dim={self.dim}, params={self.params})"

    @property
    def nvars(self):
        return 2 * self.dim + 1

    @property
    def kernel_zbox(self):
        """Constant z-box of the family the compiled kernels evaluate, if any."""
        if self.kernel_spec is None:
            return None
        return self.gamma.constant_z

    def value(self, x, y, z):
        raise NotImplementedError

    def _jet(self, x, y, z, order):
        raise NotImplementedError

    def jet(self, x, y, z, order=2):
        if order > MAX_ORDER:
            raise ValueError(f"derivative order {order} exceeds {MAX_ORDER}")
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.analytic:
            return self._jet(x, y, float(z), order)
        return fd_jet(self, x, y, float(z), order)

    def partial(self, x, y, z, idx):
        idx = parse_multi_index(idx, self.dim)
        jet = self.jet(x, y, z, len(idx))
        return float(jet[len(idx)][idx]) if idx else float(jet[0])

    def derivs(self, x, y, z, order=2):
        return split_jet(self.jet(x, y, z, order), self.dim)

    def fiber_point(self, x, y, z):
        return FiberPoint(self, np.asarray(x, float), np.asarray(y, float), float(z))

    def dual(self):
        from .duality import dual_generating_function
        return dual_generating_function(self)

    def dual_closed_form(self, x, y, u):
        """Closed-form g*(x, y, u) where available, else None."""
        return None

    def describe(self):
        return {"family": self.name, "params": list(self.params), "dim": self.dim,
                **self.gamma.to_dict()}


@dataclass
class FiberPoint:
    """A point (x, y, z) of Gamma with a lazily extended derivative cache."""

    gf: GeneratingFunction
    x: np.ndarray
    y: np.ndarray
    z: float
    _jet: list = field(default=None, repr=False)

    def __post_init__(self):
        if not self.gf.gamma.contains(self.x, self.y, self.z):
            raise LeftDomain(f"({self.x}, {self.y}, {self.z}) is not inside Gamma")

    def jet(self, order=2):
        if self._jet is None or len(self._jet) <= order:
            self._jet = self.gf.jet(self.x, self.y, self.z, order)
        return self._jet[: order + 1]

    def derivs(self, order=2):
        return split_jet(self.jet(order), self.gf.dim)


def parse_multi_index(spec, n):
    """Turn a derivative spec into a sorted tuple of packed variable indices.

    Accepts tuples of ints or strings such as ``"x0 y1 z"`` / ``"x0,x0"``.
    """
    if isinstance(spec, str):
        tokens = spec.replace(",", " ").split()
        idx = []
        for tok in tokens:
            kind = tok[0]
            if kind == "z" and len(tok) == 1:
                idx.append(2 * n)
                continue
            k = int(tok[1:])
            if not 0 <= k < n or kind not in "xy":
                raise ValueError(f"bad derivative token {tok!r}")
            idx.append(k if kind == "x" else n + k)
    else:
        idx = [int(i) for i in spec]
        if any(i < 0 or i > 2 * n for i in idx):
            raise ValueError(f"derivative index out of range in {spec!r}")
    if len(idx) > MAX_ORDER:
        raise ValueError(f"derivative order {len(idx)} exceeds {MAX_ORDER}")
    return tuple(sorted(idx))


def partial(gf, p, multi_index):
    idx = parse_multi_index(multi_index, gf.dim)
    jet = p.jet(len(idx))
    return float(jet[len(idx)][idx]) if idx else float(jet[0])


# ---------------------------------------------------------------------------
# finite-difference synthesis

def fd_steps(gf, x, y, z, order):
    """Per-variable central-difference steps for derivatives of a given order."""
    lo, hi = gf.gamma.z_interval(x, y)
    widths = np.concatenate([gf.gamma.x_hi - gf.gamma.x_lo,
                             gf.gamma.y_hi - gf.gamma.y_lo, [hi - lo]])
    # wide z-intervals would otherwise give steps far beyond the scale on
    # which g varies
    scale = np.clip(widths, 1e-3, 1.0)
    return EPS ** (1.0 / (order + 2)) * scale


def _nested_central(f, w0, idx, h, cache):
    k = len(idx)
    total = 0.0
    for signs in product((1.0, -1.0), repeat=k):
        off = np.zeros_like(w0)
        for s, i in zip(signs, idx):
            off[i] += s * h[i]
        key = tuple(np.round(off / np.maximum(h, 1e-300), 6))
        if key not in cache:
            cache[key] = f(w0 + off)
        total += np.prod(signs) * cache[key]
    return total / np.prod([2.0 * h[i] for i in idx])


def fd_jet(gf, x, y, z, order, scalar_fn=None):
    """Jet of ``gf`` (or of ``scalar_fn(w)``) by nested central differences."""
    n = gf.dim
    m = 2 * n + 1
    w0 = np.concatenate([x, y, [z]])

    def f(w):
        if scalar_fn is not None:
            return scalar_fn(w)
        return float(gf.value(w[:n], w[n:2 * n], w[2 * n]))

    def check(w):
        if not gf.gamma.contains(w[:n], w[n:2 * n], w[2 * n], closed=True):
            raise StencilExitsDomain(f"FD stencil point {w} outside Gamma")

    jet = [np.array(f(w0))]
    for k in range(1, order + 1):
        h = fd_steps(gf, x, y, z, k)
        cache = {}
        T = np.zeros((m,) * k)
        for idx in combinations_with_replacement(range(m), k):
            for signs in ((1.0,) * k, (-1.0,) * k):
                off = np.zeros(m)
                for s, i in zip(signs, idx):
                    off[i] += s * h[i]
                check(w0 + off)
            val = _nested_central(f, w0, idx, h, cache)
            for perm in set(permutations(idx)):
                T[perm] = val
        jet.append(T)
    return jet


# ---------------------------------------------------------------------------
# built-in families

def _embed(T, P):
    """Pull a tensor on d = x - y back to packed w-space via P (n x m)."""
    k = T.ndim
    if k == 0:
        return T
    letters = "abcd"[:k]
    outs = "ijkl"[:k]
    expr = letters + "," + ",".join(a + o for a, o in zip(letters, outs)) + "->" + outs
    return np.einsum(expr, T, *([P] * k))


def _radial_tensors(d, phi, order):
    """x-derivative tensors of f(d) = phi(|d|^2 / 2) up to ``order``."""
    n = len(d)
    eye = np.eye(n)
    out = [np.array(phi[0])]
    if order >= 1:
        out.append(phi[1] * d)
    if order >= 2:
        out.append(phi[2] * np.einsum("i,j->ij", d, d) + phi[1] * eye)
    if order >= 3:
        ddd = np.einsum("i,j,k->ijk", d, d, d)
        Id = (np.einsum("ij,k->ijk", eye, d) + np.einsum("ik,j->ijk", eye, d)
              + np.einsum("jk,i->ijk", eye, d))
        out.append(phi[3] * ddd + phi[2] * Id)
    if order >= 4:
        d4 = np.einsum("i,j,k,l->ijkl", d, d, d, d)
        Idd = (np.einsum("ij,k,l->ijkl", eye, d, d) + np.einsum("ik,j,l->ijkl", eye, d, d)
               + np.einsum("il,j,k->ijkl", eye, d, d) + np.einsum("jk,i,l->ijkl", eye, d, d)
               + np.einsum("jl,i,k->ijkl", eye, d, d) + np.einsum("kl,i,j->ijkl", eye, d, d))
        II = (np.einsum("ij,kl->ijkl", eye, eye) + np.einsum("ik,jl->ijkl", eye, eye)
              + np.einsum("il,jk->ijkl", eye, eye))
        out.append(phi[4] * d4 + phi[3] * Idd + phi[2] * II)
    return out


class RadialCost(GeneratingFunction):
    """g(x, y, z) = phi(|x - y|^2 / 2) - z."""

    z_linear = True
    code = -1

    def phi(self, r, order):
        raise NotImplementedError

    @property
    def kernel_spec(self):
        return (self.code, 0.0, False, False)

    def value(self, x, y, z):
        d = np.asarray(x, float) - np.asarray(y, float)
        r = 0.5 * np.sum(d * d, axis=-1)
        return self.phi(r, 0)[0] - np.asarray(z, float)

    def _jet(self, x, y, z, order):
        n = self.dim
        d = x - y
        r = 0.5 * float(d @ d)
        T = _radial_tensors(d, self.phi(r, order), order)
        P = np.zeros((n, 2 * n + 1))
        P[:, :n] = np.eye(n)
        P[:, n:2 * n] = -np.eye(n)
        jet = [np.array(float(T[0]) - z)]
        for k in range(1, order + 1):
            Tw = _embed(T[k], P)
            if k == 1:
                Tw = Tw.copy()
                Tw[2 * n] = -1.0
            jet.append(Tw)
        return jet

    def dual_closed_form(self, x, y, u):
        return self.value(x, y, 0.0) - np.asarray(u, float)


class QuadCost(RadialCost):
    code = 1

    def phi(self, r, order):
        return [-r, -1.0, 0.0, 0.0, 0.0][: order + 1]


class LogCost(RadialCost):
    code = 2

    def phi(self, r, order):
        r = np.asarray(r, float)
        return [-0.5 * np.log(2.0 * r), -0.5 / r, 0.5 / r**2, -1.0 / r**3, 3.0 / r**4][: order + 1]


class SqrtCost(RadialCost):
    code = 3

    def phi(self, r, order):
        s = 1.0 + 2.0 * np.asarray(r, float)
        return [-np.sqrt(s), -s**-0.5, s**-1.5, -3.0 * s**-2.5, 15.0 * s**-3.5][: order + 1]


class Bilinear(GeneratingFunction):
    """g(x, y, z) = x.y - z."""

    z_linear = True
    kernel_spec = (0, 0.0, False, False)

    def value(self, x, y, z):
        return np.sum(np.asarray(x, float) * np.asarray(y, float), axis=-1) - np.asarray(z, float)

    def _jet(self, x, y, z, order):
        n = self.dim
        m = 2 * n + 1
        jet = [np.array(float(x @ y) - z)]
        if order >= 1:
            jet.append(np.concatenate([y, x, [-1.0]]))
        if order >= 2:
            H = np.zeros((m, m))
            H[:n, n:2 * n] = np.eye(n)
            H[n:2 * n, :n] = np.eye(n)
            jet.append(H)
        for k in range(3, order + 1):
            jet.append(np.zeros((m,) * k))
        return jet

    def dual_closed_form(self, x, y, u):
        return self.value(x, y, 0.0) - np.asarray(u, float)


class PerturbedBilinear(GeneratingFunction):
    """g(x, y, z) = x.y - z + (eps/2) z^2 on z < 1/eps."""

    def __init__(self, dim, gamma, eps, **kw):
        super().__init__(dim, gamma, name="perturbed-bilinear", params=(eps,), **kw)
        self.eps = float(eps)

    @property
    def kernel_spec(self):
        return (4, self.eps, False, False)

    def value(self, x, y, z):
        z = np.asarray(z, float)
        return (np.sum(np.asarray(x, float) * np.asarray(y, float), axis=-1)
                - z + 0.5 * self.eps * z * z)

    def _jet(self, x, y, z, order):
        n = self.dim
        m = 2 * n + 1
        jet = [np.array(float(x @ y) - z + 0.5 * self.eps * z * z)]
        if order >= 1:
            jet.append(np.concatenate([y, x, [-1.0 + self.eps * z]]))
        if order >= 2:
            H = np.zeros((m, m))
            H[:n, n:2 * n] = np.eye(n)
            H[n:2 * n, :n] = np.eye(n)
            H[2 * n, 2 * n] = self.eps
            jet.append(H)
        for k in range(3, order + 1):
            jet.append(np.zeros((m,) * k))
        return jet

    def dual_closed_form(self, x, y, u):
        # root of (eps/2) z^2 - z + (x.y - u) = 0 on the branch g_z < 0
        s = np.sum(np.asarray(x, float) * np.asarray(y, float), axis=-1) - np.asarray(u, float)
        disc = 1.0 - 2.0 * self.eps * s
        with np.errstate(invalid="ignore"):
            return np.where(disc >= 0, 2.0 * s / (1.0 + np.sqrt(np.maximum(disc, 0.0))), np.nan)


class FunctionFamily(GeneratingFunction):
    """User-supplied g with derivatives synthesised by finite differences."""

    analytic = False

    def __init__(self, fn, dim, gamma, name="custom", **kw):
        super().__init__(dim, gamma, name=name, **kw)
        self.fn = fn

    def value(self, x, y, z):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        z = np.asarray(z, float)
        if x.ndim == 1 and y.ndim == 1 and z.ndim == 0:
            return float(self.fn(x, y, float(z)))
        xb, yb = np.broadcast_arrays(x, y)
        zb = np.broadcast_to(z, xb.shape[:-1])
        out = np.empty(xb.shape[:-1])
        for i in np.ndindex(out.shape):
            out[i] = self.fn(xb[i], yb[i], float(zb[i]))
        return out


FAMILIES = ("bilinear", "quad-cost", "log-cost", "sqrt-cost", "perturbed-bilinear")


def _box(spec, dim, default):
    if spec is None:
        spec = default
    arr = np.asarray(spec, dtype=float)
    if arr.shape == (2,):
        arr = np.tile(arr, (dim, 1))
    if arr.shape != (dim, 2):
        raise ValueError(f"box must have shape ({dim}, 2), got {arr.shape}")
    return arr


def builtin(name, params=(), dim=2, x_box=None, y_box=None, z_box=None, det_floor=1e-8):
    """Construct one of the built-in families.

    Families: ``bilinear`` (x.y - z), ``quad-cost`` (-|x-y|^2/2 - z),
    ``log-cost`` (-log|x-y| - z), ``sqrt-cost`` (-sqrt(1+|x-y|^2) - z) and
    ``perturbed-bilinear`` (x.y - z + eps z^2/2, params = [eps]).
    """
    params = tuple(params or ())
    if name not in FAMILIES:
        raise ValueError(f"unknown family {name!r}; expected one of {FAMILIES}")
    if name == "log-cost":
        xb = _box(x_box, dim, [-0.5, 0.5])
        default_y = np.tile([-1.0, 1.0], (dim, 1))
        default_y[0] = [1.5, 3.5]
        yb = _box(y_box, dim, default_y)
        gaps = np.maximum(0.0, np.maximum(yb[:, 0] - xb[:, 1], xb[:, 0] - yb[:, 1]))
        if not np.any(gaps > 0):
            raise ValueError("log-cost needs x- and y-boxes separated by a positive distance")
    else:
        xb = _box(x_box, dim, [-1.0, 1.0])
        yb = _box(y_box, dim, [-3.0, 3.0])
    zb = (-50.0, 50.0) if z_box is None else tuple(map(float, z_box))

    if name == "perturbed-bilinear":
        if len(params) != 1:
            raise ValueError("perturbed-bilinear takes exactly one parameter eps")
        eps = float(params[0])
        if eps < 0:
            raise ValueError("eps must be non-negative")
        if eps > 0:
            if z_box is None:
                zb = (max(zb[0], -0.5 / eps), min(zb[1], 0.5 / eps))
            if zb[1] >= 1.0 / eps:
                raise ValueError(f"z-box must stay below 1/eps = {1.0 / eps}")
        gamma = DomainBox.from_bounds(xb, yb, zb)
        gf = PerturbedBilinear(dim, gamma, eps, det_floor=det_floor)
        # A1: z -> g is strictly decreasing on the whole z-box, y = p
        if not -1.0 + eps * zb[1] < 0:
            raise ValueError("g_z must be negative on the z-box")
        return gf
    if params:
        raise ValueError(f"{name} takes no parameters")
    gamma = DomainBox.from_bounds(xb, yb, zb)
    cls = {"bilinear": Bilinear, "quad-cost": QuadCost, "log-cost": LogCost,
           "sqrt-cost": SqrtCost}[name]
    return cls(dim, gamma, name=name, det_floor=det_floor)


# ---------------------------------------------------------------------------
# validation of A0-A2

@dataclass
class ValidationReport:
    n_samples: int
    n_skipped: int
    worst_gz: float
    worst_gz_point: list
    worst_abs_detE: float
    worst_detE_point: list
    empty_intervals: int
    a1_checked: int
    a1_seeds: list
    a1_multi: list
    det_floor: float

    @property
    def a0_pass(self):
        return self.empty_intervals == 0

    @property
    def a1_pass(self):
        return not self.a1_multi

    @property
    def a2_pass(self):
        return self.worst_gz < 0 and self.worst_abs_detE > self.det_floor

    @property
    def passed(self):
        return self.a0_pass and self.a1_pass and self.a2_pass

    def to_dict(self):
        return {
            "n_samples": self.n_samples, "n_skipped": self.n_skipped,
            "worst_gz": self.worst_gz, "worst_gz_point": self.worst_gz_point,
            "worst_abs_detE": self.worst_abs_detE, "worst_detE_point": self.worst_detE_point,
            "det_floor": self.det_floor, "empty_intervals": self.empty_intervals,
            "a1_checked": self.a1_checked, "a1_seeds": self.a1_seeds,
            "a1_multi": self.a1_multi,
            "A0": "PASS" if self.a0_pass else "FAIL",
            "A1": "PASS" if self.a1_pass else "FAIL",
            "A2": "PASS" if self.a2_pass else "FAIL",
            "verdict": "PASS" if self.passed else "FAIL",
        }


def matrix_E_from(d):
    return d["g_xy"] - np.outer(d["g_xz"], d["g_y"]) / d["g_z"]


def sample_gamma(gf, resolution, closed=True):
    """Tensor-grid samples (x, y, z) of Gamma-bar (or its interior)."""
    res = int(resolution)
    if res < 1:
        raise ValueError("resolution must be positive")
    g = gf.gamma

    def axis(lo, hi):
        if res == 1:
            return np.array([0.5 * (lo + hi)])
        if closed:
            return np.linspace(lo, hi, res)
        return lo + (np.arange(res) + 0.5) * (hi - lo) / res

    xs = [axis(a, b) for a, b in zip(g.x_lo, g.x_hi)]
    ys = [axis(a, b) for a, b in zip(g.y_lo, g.y_hi)]
    for xt in product(*xs):
        x = np.array(xt)
        for yt in product(*ys):
            y = np.array(yt)
            lo, hi = g.z_interval(x, y)
            if not lo < hi:
                yield x, y, None
                continue
            for z in axis(lo, hi):
                yield x, y, float(z)


def validate_assumptions(gf, resolution=5, a1_points=8, a1_seeds=8, seed=0, tol=1e-6):
    """Spot-check A0 (non-empty fibres), A2 (g_z < 0, det E != 0) and A1.

    A1 is probed statistically: for ``a1_points`` random samples the pair
    (u, p) = (g, g_x) is inverted from ``a1_seeds`` Latin-hypercube seeds and
    distinct converged solutions are reported.
    """
    from .duality import solve_YZ_multistart

    worst_gz, worst_gz_pt = -np.inf, None
    worst_det, worst_det_pt = np.inf, None
    n_samples = n_skipped = empty = 0
    pool = []
    for x, y, z in sample_gamma(gf, resolution, closed=gf.analytic):
        if z is None:
            empty += 1
            continue
        n_samples += 1
        try:
            d = gf.derivs(x, y, z, 2)
        except StencilExitsDomain:
            n_skipped += 1
            continue
        pt = [x.tolist(), y.tolist(), z]
        if d["g_z"] > worst_gz:
            worst_gz, worst_gz_pt = d["g_z"], pt
        det = abs(float(np.linalg.det(matrix_E_from(d))))
        if det < worst_det:
            worst_det, worst_det_pt = det, pt
        if gf.gamma.contains(x, y, z):
            pool.append((x, y, z))

    rng = np.random.default_rng(seed)
    multi = []
    seeds_used = []
    checked = 0
    if pool and a1_points > 0:
        picks = rng.choice(len(pool), size=min(a1_points, len(pool)), replace=False)
        for k in sorted(picks.tolist()):
            x, y, z = pool[k]
            d = gf.derivs(x, y, z, 1)
            sols, seeds = solve_YZ_multistart(gf, x, d["g"], d["g_x"], n_seeds=a1_seeds,
                                              seed=int(rng.integers(2**31)))
            checked += 1
            seeds_used.append(seeds)
            basins = _distinct(sols, tol)
            if len(basins) > 1:
                multi.append({"x": x.tolist(), "u": d["g"], "p": d["g_x"].tolist(),
                              "solutions": [[b[0].tolist(), b[1]] for b in basins]})
    return ValidationReport(n_samples, n_skipped, float(worst_gz), worst_gz_pt,
                            float(worst_det), worst_det_pt, empty, checked,
                            seeds_used, multi, gf.det_floor)


def _distinct(sols, tol):
    out = []
    for y, z in sols:
        if not any(np.linalg.norm(y - y2) + abs(z - z2) <= tol * (1 + abs(z2)) for y2, z2 in out):
            out.append((y, z))
    return out
