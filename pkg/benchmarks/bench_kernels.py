"""Time the numba and numpy series kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--order 64] [--repeat 5]

Each kernel is checked to give identical coefficients on both backends
before timings are reported.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from asdefect.engine import TransformStep
from asdefect.series import _kernels
from asdefect.series.field import make_field
from asdefect.series.series import invert_unit, random_series, substitute_monomial


def _best(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--order", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--p", type=int, default=3)
    args = ap.parse_args()

    F = make_field(args.p, 4)
    rng = np.random.default_rng(1)
    a = random_series(F, args.order, rng)
    b = random_series(F, args.order, rng)
    unit = a + a.constant(F, args.order, 1) if a.coeff(0, 0) == 0 else a
    step = TransformStep.make(3, 2)

    jobs = {
        "mul": lambda: a * b,
        "invert": lambda: invert_unit(unit),
        "subst(3,2)": lambda: substitute_monomial(a, step, alpha=1, order=args.order),
    }
    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    results: dict[str, dict[str, float]] = {}
    outputs: dict[str, dict[str, np.ndarray]] = {}
    for name in backends:
        with _kernels.use_backend(name):
            for job, fn in jobs.items():
                outputs.setdefault(job, {})[name] = fn().coeffs
                fn()  # warm-up, includes jit compilation on first call
                results.setdefault(job, {})[name] = _best(fn, args.repeat)

    print(f"order {args.order}, field GF({args.p}^4), best of {args.repeat}")
    print(f"{'kernel':<12}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}  agree")
    for job in jobs:
        row = results[job]
        agree = all(np.array_equal(outputs[job][backends[0]], o) for o in outputs[job].values())
        speed = f"{row['numpy'] / row['numba']:>9.1f}x" if "numba" in row else f"{'n/a':>10}"
        print(f"{job:<12}" + "".join(f"{row[b] * 1e3:>10.2f}ms" for b in backends) + speed + f"  {agree}")


if __name__ == "__main__":
    main()
