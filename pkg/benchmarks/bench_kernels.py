"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from fekete_rate import _kernels_py
from fekete_rate import backend
from fekete_rate.config import WeightedSet
from fekete_rate.envelope import extremal_function
from fekete_rate.fields import ConstantField
from fekete_rate.geometry import ModelSurface, Region

try:
    from fekete_rate import _kernels
except ImportError:  # pragma: no cover
    _kernels = None


def _envelope(mod):
    """Obstacle solve on a disc complement; swaps the PSOR backend to ``mod``."""
    saved = backend._impl
    backend._impl = mod
    try:
        T = ModelSurface.torus(1j)
        ws = WeightedSet(T, Region(T, "complement", [0j], [0.2]), ConstantField(T, 0.0))
        return extremal_function(T, ws, 128, nested=False)
    finally:
        backend._impl = saved


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; nothing to compare")
        return 1
    rng = np.random.default_rng(0)
    tau = 1j
    z = rng.random(65536) + 1j * (rng.random(65536) - 0.5)
    x = rng.random(128) + 1j * rng.random(128)
    zr, zi = np.ascontiguousarray(z.real), np.ascontiguousarray(z.imag)
    xr, xi = np.ascontiguousarray(x.real), np.ascontiguousarray(x.imag)
    cases = {
        "theta1_green0 (65536 points)":
            lambda mod: mod.theta1_green0(zr, zi, tau.real, tau.imag, 6),
        "torus_pair_sums (m = 128)":
            lambda mod: mod.torus_pair_sums(xr, xi, tau.real, tau.imag, 6, 15),
        "psor envelope (128^2, disc complement)": _envelope,
    }
    print(f"{'kernel':36s} {'compiled ms':>12s} {'python ms':>12s} {'speedup':>8s}")
    for name, f in cases.items():
        tc = min(timeit.repeat(lambda: f(_kernels), number=1, repeat=args.repeat)) * 1e3
        tp = min(timeit.repeat(lambda: f(_kernels_py), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:36s} {tc:12.3f} {tp:12.3f} {tp / tc:8.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
