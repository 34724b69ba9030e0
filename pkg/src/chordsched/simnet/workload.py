"""Lookup workloads, expressed as a plan of steps for the workload executor.

Plan steps are tuples:

* ``("seq", key)``   issue one lookup and wait for its outcome
* ``("par", keys)``  issue several lookups at once and wait for all of them
* ``("sleep", dt)``  stay idle for ``dt`` seconds

The ``file_system`` workload is synthetic: sequential runs and parallel
bursts (as when all replicas of a file are located) separated by
exponentially distributed think times.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..seeds import substream

LIGHT = "light"
HEAVY = "heavy"
VARIABLE = "variable"
FILE_SYSTEM = "file_system"
KINDS = (LIGHT, HEAVY, VARIABLE, FILE_SYSTEM)


@dataclass(frozen=True)
class WorkloadSpec:
    kind: str
    total_lookups: int
    gap: float = 0.0
    batch_size: int = 1
    parallelism: int = 1
    # file_system synthesis
    run_length: tuple = (1, 10)
    fanout: tuple = (2, 4)
    parallel_fraction: float = 0.3
    think_mean: float = 0.05

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown workload {self.kind!r}")
        if self.total_lookups < 1 or self.batch_size < 1 or self.parallelism < 1:
            raise ValueError("lookup counts must be positive")
        if self.gap < 0 or self.think_mean < 0:
            raise ValueError("gaps must be non-negative")

    @classmethod
    def preset(cls, kind):
        if kind == LIGHT:
            return cls(LIGHT, 10, gap=300.0)
        if kind == HEAVY:
            return cls(HEAVY, 6000, gap=0.0)
        if kind == VARIABLE:
            return cls(VARIABLE, 1000, gap=300.0, batch_size=100)
        if kind == FILE_SYSTEM:
            return cls(FILE_SYSTEM, 15000, parallelism=4)
        raise ValueError(f"unknown workload {kind!r}")


def plan(spec, seed, key_bits=64):
    """Yield plan steps for ``spec``; keys come from the workload-key substream."""
    keys = substream(seed, "workload-keys")
    draw = lambda: keys.getrandbits(key_bits)  # noqa: E731
    n = spec.total_lookups

    if spec.kind == FILE_SYSTEM:
        shape = substream(seed, "workload-shape")
        issued = 0
        lo_run, hi_run = spec.run_length
        lo_fan, hi_fan = spec.fanout
        while issued < n:
            if shape.random() < spec.parallel_fraction:
                k = min(shape.randint(lo_fan, hi_fan), spec.parallelism, n - issued)
                yield ("par", tuple(draw() for _ in range(k)))
                issued += k
            else:
                k = min(shape.randint(lo_run, hi_run), n - issued)
                for _ in range(k):
                    yield ("seq", draw())
                issued += k
            if issued < n and spec.think_mean > 0:
                yield ("sleep", shape.expovariate(1.0 / spec.think_mean))
        return

    batch = spec.batch_size
    for i in range(n):
        if i and i % batch == 0 and spec.gap > 0:
            yield ("sleep", spec.gap)
        yield ("seq", draw())
