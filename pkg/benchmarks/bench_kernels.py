"""Time the compiled kernels against the numpy/scipy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Inputs are sized like one wheel viewpoint: 3 profiles of ~400 points sampled
every 0.2 mm, and a 700-point ground-truth curve.
"""
import argparse
import timeit

import numpy as np

from revoprofile import _fallback

try:
    from revoprofile import _kernels as compiled
except ImportError:
    compiled = None


def cases(rng):
    t = np.linspace(0.0, 80.0, 401)
    uv = np.column_stack([t, 0.02 * (t - 40.0) ** 2 + 5.0 * np.sin(t / 7.0)])
    uv += rng.normal(0.0, 0.03, uv.shape)
    arc = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(uv, axis=0), axis=1))])
    other = uv + rng.normal(0.0, 0.05, uv.shape)
    x = np.linspace(0.0, 140.0, 701)
    gt = np.column_stack([x, 500.0 + 10.0 * np.sin(x / 9.0)])
    q = gt[::2] + rng.normal(0.0, 0.05, gt[::2].shape)
    return {
        "windowed_curvature": lambda m: m.windowed_curvature(uv, arc, 5.0),
        "mutual_nearest_pairs": lambda m: m.mutual_nearest_pairs(uv, other, 1.0),
        "polyline_distance": lambda m: m.polyline_distance(q, gt),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    impls = [("python", _fallback)] + ([("compiled", compiled)] if compiled else [])
    if compiled is None:
        print("compiled kernels not built; timing the fallback only")
    print(f"{'kernel':<22}" + "".join(f"{name:>14}" for name, _ in impls) + ("   speed-up" if compiled else ""))
    for kernel, call in cases(rng).items():
        times = []
        for _, mod in impls:
            timer = timeit.Timer(lambda: call(mod))
            n, _ = timer.autorange()
            times.append(min(timer.repeat(args.repeat, n)) / n)
        row = f"{kernel:<22}" + "".join(f"{1e3 * t:>11.3f} ms" for t in times)
        if compiled:
            row += f"   {times[0] / times[1]:8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
