#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the pure-Python fallback.

Times the hot paths (MT19937 stream, Box-Muller, MC pricing with and
without screening, lattice pricing, vectorized exp) on every available
backend and prints a speedup table.

    python benchmarks/bench_kernels.py [--mc-draws N] [--bt-steps N] [--repeat K]
"""

import argparse
import time

import numpy as np

from optbench import _kernels
from optbench.contracts import OptionContract, PricingParams, SpotPrice
from optbench.pricing import bt_price, mc_price
from optbench.rng import Mt19937
from optbench.vecmath import KernelVariant, LaneConfig, vexp

CONTRACT = OptionContract("BENCH", "call", 100.0, 1.0)
PARAMS = PricingParams(rate=0.05, volatility=0.2)
SPOT = SpotPrice(100.0)


def timed(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def build_cases(args):
    xs32 = np.random.default_rng(1).uniform(-80, 80, 1_000_000).astype(np.float32)
    return [
        ("mt19937 stream 10M u32",
         lambda: Mt19937(1).next_block(10_000_000)),
        ("box-muller 2M normals",
         lambda: Mt19937(2).normals(2_000_000)),
        (f"mc NOVECT n={args.mc_draws} screened",
         lambda: mc_price(CONTRACT, SPOT, PARAMS, args.mc_draws, 3)),
        (f"mc NOVECT n={args.mc_draws} unscreened",
         lambda: mc_price(CONTRACT, SPOT, PARAMS, args.mc_draws, 3,
                          screening=False)),
        (f"mc VEC8 n={args.mc_draws} screened",
         lambda: mc_price(CONTRACT, SPOT, PARAMS, args.mc_draws, 3,
                          variant=KernelVariant("VEC8"))),
        (f"mc VEC8 f32 n={args.mc_draws}",
         lambda: mc_price(CONTRACT, SPOT, PARAMS, args.mc_draws, 3,
                          variant=KernelVariant("VEC8"), precision=32)),
        (f"bt NOVECT n={args.bt_steps}",
         lambda: bt_price(CONTRACT, SPOT, PARAMS, args.bt_steps)),
        (f"bt VEC8 f32 n={args.bt_steps}",
         lambda: bt_price(CONTRACT, SPOT, PARAMS, args.bt_steps,
                          variant=KernelVariant("VEC8"), precision=32)),
        ("vexp f32 1M",
         lambda: vexp(xs32, LaneConfig(8, 32))),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--mc-draws", type=int, default=1_000_000)
    parser.add_argument("--bt-steps", type=int, default=5000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    backends = _kernels.available()
    cases = build_cases(args)
    results = {}
    for name in backends:
        _kernels.use(name)
        for label, fn in cases:
            fn()  # warm-up
            results[(name, label)] = timed(fn, args.repeat)
    _kernels.use("auto")

    width = max(len(label) for label, _ in cases)
    header = f"{'kernel':<{width}}"
    for name in backends:
        header += f"  {name + ' (s)':>14}"
    if len(backends) == 2:
        header += f"  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for label, _ in cases:
        line = f"{label:<{width}}"
        for name in backends:
            line += f"  {results[(name, label)]:>14.6f}"
        if len(backends) == 2:
            slow = results[("fallback", label)]
            fast = results[("compiled", label)]
            line += f"  {slow / fast:>7.1f}x"
        print(line)


if __name__ == "__main__":
    main()
