"""Compare the numba kernels with their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--x-res 64] [--y-res 128] [--repeat 3]

Each kernel is run once to warm up (numba compiles on first use), then timed
``--repeat`` times on both paths; outputs are checked for agreement.
"""

import argparse
import time

import numpy as np

from gje import builtin
from gje.kernels import cell_polygon_areas, gstar_transform, points_in_polygon, semidiscrete_max


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-12, atol=1e-12, equal_nan=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--x-res", type=int, default=64)
    ap.add_argument("--y-res", type=int, default=128)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(0)

    g = np.linspace(-1, 1, args.x_res)
    X = np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)
    u = 0.5 * np.sum(X**2, axis=1)
    h = np.linspace(-1.2, 1.2, args.y_res)
    Y = np.stack(np.meshgrid(h, h, indexing="ij"), -1).reshape(-1, 2)
    poly = np.array([[-0.7, -0.6], [0.8, -0.3], [0.5, 0.9], [-0.4, 0.6]])
    pts = rng.uniform(-1, 1, (200_000, 2))
    edges = np.linspace(-1, 1, 257)
    ys_sd = rng.uniform(-1, 1, (64, 2))
    zs_sd = rng.uniform(0, 0.5, 64)

    cases = []
    for fam in ("bilinear", "quad-cost", "sqrt-cost"):
        gf = builtin(fam, x_box=[[-1, 1], [-1, 1]], y_box=[[-3, 3], [-3, 3]])
        spec, zb = gf.kernel_spec, gf.kernel_zbox
        cases.append((f"g*-transform {fam} {len(X)}x{len(Y)}",
                      lambda nb, s=spec, z=zb: gstar_transform(s, z, X, u, Y, use_numba=nb)))
    gf = builtin("quad-cost", x_box=[[-1, 1], [-1, 1]], y_box=[[-3, 3], [-3, 3]])
    cases.append((f"semi-discrete max {len(X)}x{len(ys_sd)}",
                  lambda nb: semidiscrete_max(gf.kernel_spec[:2] + (True, False), gf.kernel_zbox,
                                              X, ys_sd, zs_sd, use_numba=nb)))
    cases.append((f"points in polygon {len(pts)}",
                  lambda nb: points_in_polygon(pts, poly, use_numba=nb)))
    cases.append((f"cell clipping {len(edges) - 1}^2",
                  lambda nb: cell_polygon_areas(poly, edges, edges, use_numba=nb)))

    print(f"{'kernel':44s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s}  agree")
    for name, fn in cases:
        t_nb, out_nb = best_of(lambda: fn(True), args.repeat)
        t_np, out_np = best_of(lambda: fn(False), args.repeat)
        print(f"{name:44s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f}  {same(out_nb, out_np)}")


if __name__ == "__main__":
    main()
