"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from scadasim import _kernels_py

try:
    from scadasim import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def cases():
    rng = np.random.default_rng(0)
    frame = rng.integers(0, 256, 1514, dtype=np.uint8).tobytes()
    n = 100_000
    pump = (np.arange(n) // 900) % 2 == 0
    valve = np.zeros(n, dtype=bool)
    return {
        "checksum 1514 B frame": lambda k: k.ones_complement_sum(frame),
        "integrate 1e5 steps": lambda k: k.integrate(7.0, 3.0, pump, valve, 0.1, 3.0, 6.0, 1.0),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = {"python": _kernels_py}
    if _kernels_c is not None:
        backends["cython"] = _kernels_c
    else:
        print("compiled extension not built; timing the fallback only")
    print(f"{'kernel':24s}" + "".join(f"{b:>14s}" for b in backends) + "     speedup")
    for name, fn in cases().items():
        best = {}
        for b, mod in backends.items():
            number = 20 if "integrate" in name and b == "python" else 200
            t = min(timeit.repeat(lambda: fn(mod), number=number, repeat=args.repeat)) / number
            best[b] = t
        row = f"{name:24s}" + "".join(f"{best[b] * 1e6:11.1f} us" for b in backends)
        if "cython" in best:
            row += f"  {best['python'] / best['cython']:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
