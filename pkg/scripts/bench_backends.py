#!/usr/bin/env python3
"""Compare the compiled kernels against the pure-python fallback.

Times the three hot kernels at the desk-scale and full-scale operating
points and prints one table; run after building the extension to confirm
the compiled path is worth selecting.
"""

import argparse
import time

import numpy as np

from tncs._kernels import available_backends
from tncs.features import pixel_state_array
from tncs.mps import MPS


def timeit(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(sorted(backends))}")
    cases = [("desk 14x14", 196, 16), ("full 28x28", 784, 40)]
    rng = np.random.default_rng(0)

    header = f"{'case':<12} {'kernel':<14}" + "".join(
        f" {name:>12}" for name in sorted(backends)
    )
    print(header)
    print("-" * len(header))
    for label, n, chi in cases:
        chain = MPS.random(n, chi, seed=1)._chain()
        states = pixel_state_array(rng.random((256, n)))
        uniforms = rng.random((256, n))
        rows = [
            ("site_rdms", lambda mod: mod.site_rdms(chain)),
            ("logamp x256", lambda mod: mod.logamp_batch(chain, states)),
            ("sample x256", lambda mod: mod.sample_bits(chain, uniforms)),
        ]
        for kernel_name, call in rows:
            cells = []
            for backend_name in sorted(backends):
                mod = backends[backend_name]
                cells.append(timeit(call, mod, repeats=args.repeats))
            line = f"{label:<12} {kernel_name:<14}" + "".join(
                f" {c * 1000:>9.2f} ms" for c in cells
            )
            print(line)


if __name__ == "__main__":
    main()
