"""Compare the compiled and pure-Python elimination kernels on real tangency blocks.

    python benchmarks/bench_kernels.py [--factors 1,2,4,5] [--degree 3]
"""

import argparse
import random
import time

from detfree import _kernels_py
from detfree.model import arrangement
from detfree.syzygy import build_tangency_system, default_primes

try:
    from detfree import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def _time(fn, *args, repeat=1):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_nullspace(impl, blocks, p):
    return [impl.nullspace_mod(b.nrows, b.ncols, b.rows, b.cols, b.vals, p) for b in blocks]


def bench_det(impl, mats, p):
    return [impl.det_mod(m, p) for m in mats]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--factors", default="1,2,4,5")
    ap.add_argument("--degree", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _kernels_c is None:
        print("compiled kernels not built; run `pip install -e . --no-build-isolation`")
        return 1
    p = default_primes(0)[0]
    arr = arrangement([int(x) for x in args.factors.split(",")])
    sys_ = build_tangency_system(arr, args.degree)
    blocks = [b for b in sys_.blocks if b.theta]
    rng = random.Random(1)
    mats = [[[rng.randrange(p) for _ in range(15)] for _ in range(15)] for _ in range(200)]

    print(f"arrangement {list(arr.ids)}, degree {args.degree}: {len(blocks)} blocks, {sys_.nnz} nonzeros")
    print(f"{'kernel':<16}{'python s':>12}{'cython s':>12}{'speedup':>10}  identical")
    for name, fn, data in (("nullspace_mod", bench_nullspace, blocks), ("det_mod 15x15", bench_det, mats)):
        tp, outp = _time(fn, _kernels_py, data, p, repeat=args.repeat)
        tc, outc = _time(fn, _kernels_c, data, p, repeat=args.repeat)
        print(f"{name:<16}{tp:>12.3f}{tc:>12.3f}{tp / tc:>10.1f}  {outp == outc}")
    vecs = [[rng.randrange(3) for _ in range(135)] for _ in range(400)]
    tp, outp = _time(_kernels_py.rank_profile_mod, vecs, p, repeat=args.repeat)
    tc, outc = _time(_kernels_c.rank_profile_mod, vecs, p, repeat=args.repeat)
    print(f"{'rank_profile':<16}{tp:>12.3f}{tc:>12.3f}{tp / tc:>10.1f}  {outp == outc}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
