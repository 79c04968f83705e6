"""Compiled vs pure-Python kernel timings.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from dcloss import _backend
from dcloss.channel import GilbertElliottChannel
from dcloss.gf import field, random_matrices
from dcloss.sim import SimConfig, run_policy
from dcloss.strategy import PathPair, SchedulingPolicy


def cases():
    rng = np.random.default_rng(0)
    u = rng.random((20_000, 50))
    ch = GilbertElliottChannel(0.95, 0.6)
    gf256, gf2 = field(256), field(2)
    m256 = random_matrices(rng, 50_000, 10, 6, gf256)
    m2 = random_matrices(rng, 50_000, 10, 8, gf2)
    paths = PathPair(GilbertElliottChannel(0.946, 0.474), GilbertElliottChannel(0.962, 0.898))
    nc = SimConfig(100_000, 1, SchedulingPolicy.nc(10, 6, 0.5, 256), paths)

    def rank(mats, spec):
        return lambda: _backend.batch_rank(mats.copy(), spec.log_table, spec.exp_table, spec.order, spec.binary)

    return [
        ("erasure_windows 20000x50", lambda: _backend.erasure_windows(u, 0.1, ch.p_good_to_bad, ch.p_stay_bad)),
        ("batch_rank GF(256) 50000x10x6", rank(m256, gf256)),
        ("batch_rank GF(2) 50000x10x8", rank(m2, gf2)),
        ("run_policy NC 1e5 rounds", lambda: run_policy(nc)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = _backend.available_backends()
    if "compiled" not in backends:
        print("compiled kernels not built; only the python backend is timed")
    results = {}
    previous = _backend.backend_name()
    try:
        for name in backends:
            _backend.use_backend(name)
            for label, fn in cases():
                fn()  # warm up
                results[(label, name)] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
    finally:
        _backend.use_backend(previous)
    print(f"{'kernel':<32} " + " ".join(f"{b:>10}" for b in backends) + ("    speedup" if len(backends) > 1 else ""))
    for label, _ in cases():
        times = [results[(label, b)] for b in backends]
        line = f"{label:<32} " + " ".join(f"{t * 1e3:>8.1f}ms" for t in times)
        if len(times) > 1:
            line += f"  {times[1] / times[0]:>8.1f}x"
        print(line)


if __name__ == "__main__":
    main()
