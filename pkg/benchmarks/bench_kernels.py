"""Compare the compiled and pure-Python kernels on the two hot loops.

    python benchmarks/bench_kernels.py --repeat 5
"""
import argparse
import json
import math
import time

import numpy as np

from hcmu_surfaces import _backend
from hcmu_surfaces.core import validate_params
from hcmu_surfaces.ode import ClosedFormParams, closed_form_H_A0

P = validate_params(1, 0)


def h_case(k):
    H0 = closed_form_H_A0(P, 0.0, ClosedFormParams.for_params(P, 0.25), 0.5)
    targets = np.linspace(0.5, 0.99, 2001)[1:]
    out = k.integrate_h(1.0, 0.0, 0.0, 0.01, 1.0, 0.5, H0, targets, 1e-10, 1e-12, 0.01, 1e-10)
    return np.asarray(out[0])


def frame_case(k):
    H0 = closed_form_H_A0(P, 0.0, ClosedFormParams.for_params(P, 0.25), 0.5)
    S0 = np.zeros((4, 4))
    e = math.sqrt(0.5)
    S0[1, 0], S0[2, 1], S0[3, 2] = e, e, 1.0
    xs = np.linspace(0.0, 1.0, 1001)
    out = k.integrate_frame(1.0, 0.0, 0.0, 0.01, 1.0, -1.0, 1.0, 1.0, xs, 0.5, H0, S0,
                            1e-12, 1e-14, 1e-10, 1e-6, 1e-3)
    return np.asarray(out[2])


def best_time(fn, k, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(k)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true", help="print one JSON record")
    args = ap.parse_args()
    names = _backend.available()
    rows = {}
    for case in (h_case, frame_case):
        timings = {n: best_time(case, _backend.load(n), args.repeat) for n in names}
        row = {"seconds": timings}
        if len(names) == 2:
            a, b = (case(_backend.load(n)) for n in names)
            row["speedup"] = timings["python"] / timings["cython"]
            row["max_abs_diff"] = float(np.max(np.abs(a - b)))
        rows[case.__name__] = row
    if args.json:
        print(json.dumps(rows, sort_keys=True))
        return
    for name, row in rows.items():
        parts = [f"{n} {t * 1e3:9.2f} ms" for n, t in row["seconds"].items()]
        extra = (f"  speedup {row['speedup']:6.1f}x  max diff {row['max_abs_diff']:.1e}"
                 if "speedup" in row else "")
        print(f"{name:<11} " + "  ".join(parts) + extra)


if __name__ == "__main__":
    main()
