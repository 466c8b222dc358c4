#!/usr/bin/env python3
"""Benchmark the CFR path-sum kernel: numba backend vs pure-numpy fallback.

Usage: python benchmarks/bench_synth.py [--repeats N]
"""

import argparse
import os
import time
from dataclasses import replace

import numpy as np

import nfclab as nl
from nfclab import _kernels


def build_scene(n_elements: int, n_points: int) -> nl.Scene:
    base = nl.load_preset("los_lab")
    return replace(base,
                   array=replace(base.array, n_elements=n_elements),
                   sweep=replace(base.sweep, n_points=n_points))


def time_synth(scene: nl.Scene, backend: str, repeats: int) -> float:
    os.environ["NFCLAB_BACKEND"] = backend
    nl.synthesize_cfr(scene)  # warm-up (JIT compile / cache load)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        nl.synthesize_cfr(scene)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba not importable; nothing to compare")

    cases = [(64, 801), (128, 1601), (256, 3201), (512, 3201)]
    print(f"{'elements':>9} {'points':>7} {'paths':>6} {'numba [ms]':>11} "
          f"{'numpy [ms]':>11} {'speedup':>8} {'max rel diff':>13}")
    for n_el, n_pts in cases:
        scene = build_scene(n_el, n_pts)
        n_paths = n_el * len(nl.enumerate_paths(scene, 1))
        t_numba = time_synth(scene, "numba", args.repeats)
        t_numpy = time_synth(scene, "numpy", args.repeats)

        os.environ["NFCLAB_BACKEND"] = "numba"
        a = nl.synthesize_cfr(scene).values
        os.environ["NFCLAB_BACKEND"] = "numpy"
        b = nl.synthesize_cfr(scene).values
        rel = float(np.abs(a - b).max() / np.abs(a).max())

        print(f"{n_el:>9} {n_pts:>7} {n_paths:>6} {t_numba * 1e3:>11.2f} "
              f"{t_numpy * 1e3:>11.2f} {t_numpy / t_numba:>8.2f} {rel:>13.2e}")
    os.environ.pop("NFCLAB_BACKEND", None)


if __name__ == "__main__":
    main()
