"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--points 64] [--steps 20000] [--repeat 3]

Each kernel runs on both backends with the same inputs; outputs are checked
for bit equality before timings are reported.
"""

import argparse
import timeit

import numpy as np

from skewshift import _backend
from skewshift.phase import golden_mean

W = golden_mean().frac.frac


def cases(points, steps, size):
    rng = np.random.default_rng(1)
    xs, ys = rng.integers(0, 2**64 - 1, size=(2, points), dtype=np.uint64)
    scales = np.array([steps // 2, steps], dtype=np.int64)
    diag = rng.uniform(-1, 1, size)
    shifts = np.linspace(-3, 3, 257)
    ranks = np.arange(size, dtype=np.int64)
    work = points * steps
    return [
        ("potential_sequence", lambda k: k.potential_sequence(int(xs[0]), int(ys[0]), W, steps), steps, "step"),
        ("products", lambda k: k.products(xs, ys, W, 0.5, 0.0, scales, 2.0), work, "step"),
        ("products_dd", lambda k: k.products_dd(xs, ys, W, 0.5, 0.0, scales, 2.0), work, "step"),
        ("sturm_counts", lambda k: k.sturm_counts(diag, shifts), size * len(shifts), "pivot"),
        ("bisect", lambda k: k.bisect(diag, ranks, -3.0, 3.0, 1e-12), size, "eigenvalue"),
    ]


def same(a, b):
    if isinstance(a, tuple):
        return all(np.array_equal(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=64)
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--size", type=int, default=400, help="Hamiltonian size for the Sturm kernels")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    names = _backend.available()
    if "cython" not in names:
        print("compiled kernels not built; timing the fallback only")
    print(f"{'kernel':<20}" + "".join(f"{n + ' ns':>14}" for n in names) + f"{'speedup':>10}  identical")
    for label, fn, units, unit in cases(args.points, args.steps, args.size):
        times, outs = [], []
        for name in names:
            k = _backend.get(name)
            outs.append(fn(k))
            times.append(min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat)) / units * 1e9)
        speed = f"{times[-1] / times[0]:.1f}x" if len(times) > 1 else "-"
        ident = same(outs[0], outs[-1])
        print(f"{label:<20}" + "".join(f"{t:>14.2f}" for t in times) + f"{speed:>10}  {ident} (per {unit})")


if __name__ == "__main__":
    main()
