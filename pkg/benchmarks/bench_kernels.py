"""Compare the compiled and pure-Python ring kernels, then time one full run.

    python benchmarks/bench_kernels.py [--repeat N]

The second part shows how little of a simulation the kernels account for.
"""

import argparse
import os
import random
import subprocess
import sys
import timeit

from chordsched import kernels

MASK = 2**64 - 1


def kernel_cases(rng):
    ids = [rng.getrandbits(64) for _ in range(64)]
    keys = [rng.getrandbits(64) for _ in range(1000)]
    data = [k.to_bytes(8, "little") for k in keys]
    return {
        "fnv1a64": lambda k: [k.fnv1a64(d) for d in data],
        "in_half_open": lambda k: [k.in_half_open(x, ids[0], ids[1], MASK) for x in keys],
        "closest_preceding": lambda k: [k.closest_preceding(ids[0], x, ids, MASK) for x in keys],
        "next_unresolved_finger": lambda k: [k.next_unresolved_finger(ids[0], 1, x, 64) for x in keys],
    }


def bench_kernels(repeat):
    cases = kernel_cases(random.Random(0))
    impls = [("python", kernels.python_kernels)]
    if kernels.compiled_kernels is not None:
        impls.append(("cython", kernels.compiled_kernels))
    print(f"{'kernel':<24}" + "".join(f"{name:>14}" for name, _ in impls) + "   (us per 1000 calls)")
    for name, fn in cases.items():
        times = [min(timeit.repeat(lambda: fn(impl), number=1, repeat=repeat)) * 1e6 for _, impl in impls]
        speedup = f"   x{times[0] / times[1]:.1f}" if len(times) == 2 else ""
        print(f"{name:<24}" + "".join(f"{t:>14.0f}" for t in times) + speedup)


SIM = """
import time
from chordsched.config import ExperimentConfig
from chordsched.simnet.experiment import run_experiment
from chordsched import kernels
t0 = time.perf_counter()
run_experiment(ExperimentConfig("heavy", "high", "policy2", seed=1))
print(kernels.BACKEND, round(time.perf_counter() - t0, 2))
"""


def bench_simulation():
    print("\nheavy/high/policy2 run, wall seconds:")
    for pure in ("", "1"):
        env = dict(os.environ, CHORDSCHED_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", SIM], env=env, capture_output=True, text=True, check=True)
        backend, secs = out.stdout.split()
        print(f"  {backend:<8} {secs}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    bench_kernels(args.repeat)
    bench_simulation()


if __name__ == "__main__":
    main()
