"""Timing and agreement check for the compiled vs plain-numpy kernels.

Run with the compiled path available:

    WECFARM_NUMBA=1 python3 benchmarks/bench_kernels.py

Prints per-kernel timings for both backends plus the maximum deviation
between them. Compiled warm-up (first call) is excluded from timings.
"""

import time

import numpy as np

from wecfarm import kernels


def timeit(fn, *args, repeat=5):
    fn(*args)  # warm-up / jit compile
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def row(name, active, reference, deviation):
    speedup = reference / active if active > 0 else float("inf")
    print(f"{name:22s} {active * 1e3:9.3f} ms {reference * 1e3:9.3f} ms "
          f"{speedup:6.1f}x   {deviation:.2e}")


def main():
    rng = np.random.default_rng(7)
    print(f"active backend: {kernels.backend()}")
    print(f"{'kernel':22s} {'active':>12s} {'numpy':>12s} {'gain':>7s}   max|diff|")

    x = rng.uniform(0.05, 120.0, size=200_000)
    for name, fast, slow in (
        ("bessel j0", kernels.j0, kernels.j0_numpy),
        ("bessel j1", kernels.j1, kernels.j1_numpy),
        ("bessel y0", kernels.y0, kernels.y0_numpy),
    ):
        dev = float(np.max(np.abs(fast(x) - slow(x))))
        row(name, timeit(fast, x), timeit(slow, x), dev)

    a = rng.standard_normal((400, 5, 5)) + 1j * rng.standard_normal((400, 5, 5))
    a += 6.0 * np.eye(5)[None, :, :]
    b = rng.standard_normal((400, 5)) + 1j * rng.standard_normal((400, 5))
    dev = float(np.max(np.abs(kernels.solve_batch(a, b) - kernels.solve_batch_numpy(a, b))))
    row("solve batch 400x5", timeit(kernels.solve_batch, a, b),
        timeit(kernels.solve_batch_numpy, a, b), dev)

    sizes = [52, 96, 96, 200]
    w = [
        rng.standard_normal((sizes[0], sizes[1])) * 0.1,
        np.zeros(sizes[1]),
        rng.standard_normal((sizes[1], sizes[2])) * 0.1,
        np.zeros(sizes[2]),
        rng.standard_normal((sizes[2], sizes[3])) * 0.1,
        np.zeros(sizes[3]),
    ]
    xin = rng.standard_normal((1024, sizes[0]))
    dev = float(np.max(np.abs(kernels.mlp_forward(xin, w) - kernels.mlp_forward_numpy(xin, w))))
    row("mlp forward 1024", timeit(kernels.mlp_forward, xin, w),
        timeit(kernels.mlp_forward_numpy, xin, w), dev)

    yout = rng.standard_normal((1024, sizes[3]))
    batches = np.arange(1024, dtype=np.int64).reshape(16, 64)

    def train_fast():
        wc = [arr.copy() for arr in w]
        return kernels.mlp_train(xin, yout, wc, batches, 1e-3)

    def train_slow():
        wc = [arr.copy() for arr in w]
        return kernels.mlp_train_numpy(xin, yout, wc, batches, 1e-3)

    dev = abs(train_fast() - train_slow())
    row("mlp train 16 steps", timeit(train_fast), timeit(train_slow), dev)


if __name__ == "__main__":
    main()
