"""Compare the compiled grid kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--nr 256] [--nz 512] [--repeat 20]
"""

import argparse
import timeit

import numpy as np

from vortex_shock import _kernels_py

try:
    from vortex_shock import _kernels
except ImportError:
    _kernels = None


def cases(nr, nz):
    rng = np.random.default_rng(0)
    w, p, s = (rng.standard_normal((nr, nz)) for _ in range(3))
    r = (np.arange(nr) + 0.5) / nr
    return {
        "radial_potential": lambda m: m.radial_potential(w, 0.01),
        "muscl_llf_rhs": lambda m: m.muscl_llf_rhs(w, p, 0.01),
        "q_operator": lambda m: m.q_operator(w, p, s, r, 0.01, 0.02, 0.125),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nr", type=int, default=256)
    ap.add_argument("--nz", type=int, default=512)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    print(f"grid {args.nr}x{args.nz}, best of {args.repeat} (ms)")
    print(f"{'kernel':<18} {'numpy':>10} {'compiled':>10} {'speedup':>8}")
    for name, fn in cases(args.nr, args.nz).items():
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat)) * 1e3
        if _kernels is None:
            print(f"{name:<18} {t_py:>10.3f} {'n/a':>10} {'-':>8}")
            continue
        a, b = fn(_kernels_py), fn(_kernels)
        for x, y in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)):
            assert np.allclose(x, y, rtol=1e-12, atol=1e-12), name
        t_cx = min(timeit.repeat(lambda: fn(_kernels), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<18} {t_py:>10.3f} {t_cx:>10.3f} {t_py / t_cx:>7.1f}x")


if __name__ == "__main__":
    main()
