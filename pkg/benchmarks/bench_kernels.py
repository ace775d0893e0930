"""Timing harness for the two hot kernels: cubic Duhamel sums and block passes.

Each kernel ships as a pure-numpy implementation plus a numba twin compiled
at import time.  When the JIT backend is active both variants live in the
same process, so this script times them head to head and reports speedups.
Run with FDBO_DISABLE_NUMBA=1 to time the fallback path on its own.

Usage: python3 benchmarks/bench_kernels.py [--repeats K]
"""

import argparse
import time

import numpy as np

from fdbo import backend, kernels
from fdbo.blocks import BlockSpec, _cells


def best_of(fn, repeats):
    """Best wall time over `repeats` calls, in seconds."""
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def make_grid_sum_case(n=512, pairs=60, seed=0):
    rng = np.random.default_rng(seed)
    xi = np.fft.fftfreq(n, d=1.0 / n)
    pos = np.arange(1, pairs + 1, dtype=np.int64)
    idx = np.concatenate([pos, n - pos[::-1]])
    coeffs = np.zeros(n, dtype=complex)
    z = rng.normal(size=pairs) + 1j * rng.normal(size=pairs)
    coeffs[pos] = z
    coeffs[n - pos] = np.conj(z)
    return idx, coeffs, xi, 5e-3, 0.8, 1.7, n


def make_mesh_case(m=400):
    xi1, xi2 = np.meshgrid(
        np.linspace(-40.0, 40.0, m), np.linspace(-40.0, 40.0, m)
    )
    return 5.0, xi1.ravel(), xi2.ravel(), 1e-3, 1.0, 1.5


def make_block_case(r=8, seed=3):
    b = BlockSpec(N=(8, 8, 2), L=(64, 64, 4), H=32)
    geom = [_cells(float(b.N[i]), float(b.L[i]), r) for i in range(3)]
    (xc1, lc1, _), (xc2, lc2, _), (xc3, lc3, _) = geom
    hx = [float(b.N[i]) / r for i in range(3)]
    hl = [float(b.L[i]) / r for i in range(3)]
    rng = np.random.default_rng(seed)
    f1, f2, f3 = (rng.random((2 * r, 2 * r)) for _ in range(3))
    return (f1, f2, f3, xc1, xc2, xc3, lc1, lc2, lc3,
            *hx, *hl, float(b.H), r)


def run_case(name, np_fn, nb_fn, check, repeats):
    ref = np_fn()
    if nb_fn is not None:
        got = nb_fn()  # first call also compiles
        check(ref, got)
    t_np = best_of(np_fn, repeats)
    if nb_fn is None:
        print(f"{name:<28} numpy {t_np * 1e3:9.2f} ms")
        return
    t_nb = best_of(nb_fn, repeats)
    print(
        f"{name:<28} numpy {t_np * 1e3:9.2f} ms   "
        f"numba {t_nb * 1e3:9.2f} ms   x{t_np / t_nb:6.1f}"
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    print(f"numba backend: {'on' if backend.USE_NUMBA else 'off (numpy fallback)'}")
    print(f"repeats: {args.repeats} (best-of reported)\n")

    gs = make_grid_sum_case()
    run_case(
        "u3_grid_sum (512 grid)",
        lambda: kernels._u3_grid_np(*gs),
        (lambda: kernels._u3_grid_nb(*gs)) if backend.USE_NUMBA else None,
        lambda a, b: np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-14),
        args.repeats,
    )

    ms = make_mesh_case()
    run_case(
        "u3_mesh (400x400)",
        lambda: kernels._u3_mesh_np(*ms),
        (lambda: kernels._u3_mesh_nb(*ms)) if backend.USE_NUMBA else None,
        lambda a, b: np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-300),
        args.repeats,
    )

    bc = make_block_case()

    def bp(fn):
        out = np.zeros_like(bc[0])
        return fn(0, *bc, out)[0]

    run_case(
        "block_pass (r=8, mode 0)",
        lambda: bp(kernels._block_pass_np),
        (lambda: bp(kernels._block_pass_nb)) if backend.USE_NUMBA else None,
        lambda a, b: np.testing.assert_allclose(a, b, rtol=1e-10),
        args.repeats,
    )


if __name__ == "__main__":
    main()
