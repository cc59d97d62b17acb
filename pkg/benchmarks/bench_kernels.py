"""Time the compiled and numpy kernel backends on solver-sized inputs.

    python benchmarks/bench_kernels.py [--n 65536] [--repeat 20]
"""
import argparse
import timeit

import numpy as np

from cglwave.kernels import available_backends, load_backend


def workloads(n, rng):
    psi = (1.0 + 0.05 * rng.standard_normal(n)) * np.exp(1j * rng.standard_normal(n))
    xi = np.geomspace(1e-2, 1e3, n)
    p = 2.0 + 0.01 * xi ** 2
    q = xi * np.sqrt(2.0 + 0.01 * xi ** 2)
    r = 0.01 * xi ** 2
    return {
        "reaction_flow": lambda k: k.reaction_flow(psi, 0.0025, 0.1, 0.1),
        "semigroup": lambda k: k.semigroup(p, q, r, 0.0025),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1 << 16, help="points per call")
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    jobs = workloads(args.n, np.random.default_rng(0))
    backends = {name: load_backend(name) for name in available_backends()}
    print(f"{'kernel':<15} {'backend':<8} {'ms/call':>10} {'speedup':>8}")
    for kernel, fn in jobs.items():
        times = {}
        for name, mod in backends.items():
            fn(mod)
            times[name] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)) * 1e3
        for name, ms in times.items():
            print(f"{kernel:<15} {name:<8} {ms:>10.3f} {times['python'] / ms:>8.2f}")


if __name__ == "__main__":
    main()
