"""Time each kernel on the compiled and the NumPy backend.

Sizes follow a full-scale hindcast: about 26k training rows, 338 inputs,
4096 hidden neurons and seven channels.

    python3 benchmarks/bench_kernels.py [--quick] [--repeat N]
"""
import argparse
import timeit

import numpy as np

from elmcast.kernels import available_backends


def cases(quick):
    rng = np.random.default_rng(0)
    n, H = (2000, 512) if quick else (8192, 4096)
    L = 4000 if quick else 26_000
    act = rng.normal(size=(n, H))
    bias = rng.uniform(-1, 1, size=H)
    x, y = rng.normal(size=L), rng.normal(size=L)
    series = rng.normal(size=(L, 7))
    w = 48
    rows = L - w
    out = np.empty((rows, 7 * w + 2))
    col = rng.normal(size=L)
    missing = (rng.uniform(size=L) < 0.05).astype(np.uint8)
    missing[0] = missing[-1] = 0

    def bias_relu(k):
        a = act.copy()
        return lambda: k.bias_relu_inplace(a, bias)

    def hist(k):
        return lambda: k.joint_histogram(x, y, 32, x.min(), x.max(), y.min(), y.max())

    def windows(k):
        return lambda: k.lag_windows(series, w, rows, np.arange(7, dtype=np.intp), out)

    def fill(k):
        def run():
            c = col.copy()
            k.fill_linear(c, missing)
        return run

    return {
        f"bias_relu_inplace {n}x{H}": bias_relu,
        f"joint_histogram n={L} bins=32": hist,
        f"lag_windows {rows}x{7 * w}": windows,
        f"fill_linear n={L} 5% missing": fill,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="small sizes for a smoke run")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = available_backends()
    names = list(backends)
    print(f"{'kernel':<36}" + "".join(f"{n + ' ms':>14}" for n in names) + f"{'speedup':>10}")
    for label, make in cases(args.quick).items():
        best = {}
        for name in names:
            fn = make(backends[name])
            fn()  # warm up
            best[name] = min(timeit.repeat(fn, number=1, repeat=args.repeat)) * 1e3
        ratio = best["python"] / best["cython"] if "cython" in best else float("nan")
        print(f"{label:<36}" + "".join(f"{best[n]:>14.3f}" for n in names) + f"{ratio:>9.1f}x")


if __name__ == "__main__":
    main()
