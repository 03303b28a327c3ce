"""Time the compiled kernels against the numpy fallback.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``.  Each kernel is
fed identical inputs on both backends; the table reports the best of
``repeat`` runs and the speedup of the compiled version.
"""
import argparse
import timeit

import numpy as np

from privmac import _ext, aep
from privmac._ext import _fallback


def cases(rng):
    bits, r, members = 12, 6, 256
    rows = rng.integers(0, 1 << bits, size=(members, r), dtype=np.uint64)
    offsets = rng.integers(0, 1 << r, size=members, dtype=np.uint64)
    yield ("hash_tables 256 members, 12->6 bits",
           lambda: _fallback.hash_tables(rows, offsets, bits),
           lambda: _ext.compiled.hash_tables(rows, offsets, bits))

    labels = rng.integers(0, 16, size=(256, 512))
    states = rng.normal(size=(512, 16)) + 1j * rng.normal(size=(512, 16))
    yield ("accumulate_blocks 256 x 512 into 16 blocks",
           lambda: _fallback.accumulate_blocks(labels, states, 16),
           lambda: _ext.compiled.accumulate_blocks(labels, states, 16))

    pmf = rng.dirichlet(np.ones(8)).reshape(2, 2, 2)
    yield ("truncation scan, 2 users + Y binary, n = 6",
           lambda: aep.build_truncation(pmf, 6, 0.25, backend="python"),
           lambda: aep.build_truncation(pmf, 6, 0.25, backend="cython"))


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if _ext.compiled is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation` first")
    rng = np.random.default_rng(0)
    print(f"{'kernel':48s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, py, cy in cases(rng):
        t_py = min(timeit.repeat(py, number=1, repeat=args.repeat)) * 1e3
        t_cy = min(timeit.repeat(cy, number=1, repeat=args.repeat)) * 1e3
        print(f"{name:48s} {t_py:12.2f} {t_cy:12.2f} {t_py / t_cy:8.1f}x")


if __name__ == "__main__":
    main()
