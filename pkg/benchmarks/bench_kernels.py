"""Time the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each kernel is warmed up once (so JIT compilation is excluded) and the
best of ``--repeat`` runs is reported.
"""
from __future__ import annotations

import argparse
import json
import platform
import timeit

import numpy as np

from sqzest import __version__
from sqzest import _kernels as K


def _state(n, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


def cases():
    u = np.array([[0.6, 0.8j], [0.8j, 0.6]])
    masks = K.masks_for({0: "x", 2: "y", 5: "z", 7: "x"})
    for n in (8, 10):
        psi = _state(n)
        rho = np.outer(psi, psi.conj())
        yield "dephase_density", n, (rho, n, 0.8, 0.3)
        yield "pauli_expect_density", n, (rho, *masks)
    for n in (12, 16, 20):
        psi = _state(n)
        yield "pauli_expect_state", n, (psi, *masks)
        yield "apply_uniform_site_unitary", n, (psi, n, u)
        yield "swap_sum", n, (psi, n)
        yield "pauli_sum", n, (psi, n, 1)


def best_time(fn, args, repeat):
    fn(*args)
    number = 1
    while timeit.timeit(lambda: fn(*args), number=number) < 0.05 and number < 10**4:
        number *= 4
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write results to this file")
    args = ap.parse_args(argv)

    backends = sorted(K.IMPLEMENTATIONS)
    rows = []
    print(f"sqzest {__version__}  python {platform.python_version()}  backends: {', '.join(backends)}")
    print(f"{'kernel':<28}{'n':>4}" + "".join(f"{b + ' [ms]':>14}" for b in backends)
          + ("   speedup" if "numba" in backends else ""))
    for name, n, fargs in cases():
        times = {b: best_time(K.IMPLEMENTATIONS[b][name], fargs, args.repeat) for b in backends}
        row = {"kernel": name, "n": n, **{f"{b}_seconds": t for b, t in times.items()}}
        line = f"{name:<28}{n:>4}" + "".join(f"{times[b] * 1e3:>14.4f}" for b in backends)
        if "numba" in times:
            row["speedup"] = times["numpy"] / times["numba"]
            line += f"{row['speedup']:>9.2f}x"
        rows.append(row)
        print(line)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"version": __version__, "results": rows}, fh, indent=2)


if __name__ == "__main__":
    main()
