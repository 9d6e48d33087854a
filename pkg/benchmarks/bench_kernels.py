"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Times connected-component labelling and a bilinear resize on a synthetic
survey frame. Both backends must agree exactly; the median time per call is
printed for each.
"""
from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from uvgb import kernels
from uvgb.survey import FieldSpec, FlightSpec, simulate_survey


def _median_time(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, nargs=2, default=(2448, 3264), metavar=("H", "W"))
    args = ap.parse_args()

    h, w = args.size
    sim = simulate_survey(FieldSpec(rows=1, plants_per_row=2), FlightSpec(altitude_m=1.0), seed=0)
    frame = np.resize(sim.frames[0].pixels, (h, w))
    rng = np.random.default_rng(0)
    noisy = rng.random((h, w)) < 0.45  # many small components: worst case for union-find
    masks = {"frame>=200": frame >= 200, "random 45%": noisy}
    inv = np.array([[w / 768, 0.0, 0.0], [0.0, h / 768, 0.0]])

    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)}; image {w}x{h}; median of {args.repeat}")
    results: dict[str, dict[str, float]] = {}
    outputs: dict[str, list] = {}
    for name in backends:
        k = kernels.get_backend(name)
        row = {}
        outs = []
        for label, mask in masks.items():
            row[f"label {label}"] = _median_time(lambda: k.label_components(mask), args.repeat)
            outs.append(k.label_components(mask))
        row["warp to 768x768"] = _median_time(
            lambda: k.warp_bilinear(frame, inv, 768, 768, kernels.BORDER_CLAMP), args.repeat
        )
        outs.append(k.warp_bilinear(frame, inv, 768, 768, kernels.BORDER_CLAMP))
        results[name] = row
        outputs[name] = outs

    if len(backends) == 2:
        a, b = (outputs[n] for n in backends)
        same = all(np.array_equal(x[0], y[0]) and x[1] == y[1] for x, y in zip(a[:-1], b[:-1]))
        same &= np.array_equal(a[-1], b[-1])
        print(f"outputs identical: {same}")

    names = list(results[backends[0]])
    print(f"{'kernel':<24}" + "".join(f"{n:>14}" for n in backends) + ("     speedup" if len(backends) == 2 else ""))
    for task in names:
        cells = "".join(f"{results[n][task] * 1e3:>12.2f}ms" for n in backends)
        extra = ""
        if len(backends) == 2:
            extra = f"{results[backends[1]][task] / results[backends[0]][task]:>11.1f}x"
        print(f"{task:<24}{cells}{extra}")


if __name__ == "__main__":
    main()
