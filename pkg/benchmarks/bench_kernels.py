"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3]

Both backends must return identical pivots and matching log-determinants; the
timing table is printed to standard output.
"""
import argparse
import time

import numpy as np

from sentry import _purepy
from sentry.balanced import build_spring_mass, gramians
from sentry.membrane import MembraneModel, membrane_basis, radial_cost

try:
    from sentry import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if _kernels is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")

    model = MembraneModel()
    V = np.ascontiguousarray(membrane_basis(model).candidates())
    eta = radial_cost(model)
    Wc, _ = gramians(build_spring_mass(16))
    cases = [
        ("qr pivot 55 x 10201, p=55", lambda k: k.cost_qr_pivot(V, eta, 1.0, 55, 1e-12)),
        ("qr pivot 55 x 10201, p=10", lambda k: k.cost_qr_pivot(V, eta, 0.0, 10, 1e-12)),
        ("log-det enumeration C(32,6)", lambda k: k.enumerate_logdet(Wc, 6, np.zeros(32), 1e-12)),
        ("log-det enumeration C(32,4)", lambda k: k.enumerate_logdet(Wc, 4, np.zeros(32), 1e-12)),
    ]
    print(f"{'kernel':32s} {'compiled [s]':>13s} {'python [s]':>11s} {'speedup':>8s}")
    for name, call in cases:
        tc, oc = best_of(lambda: call(_kernels), args.repeat)
        tp, op = best_of(lambda: call(_purepy), args.repeat)
        assert np.array_equal(oc[0], op[0]) if "pivot" in name else np.allclose(oc[0], op[0], rtol=1e-9, atol=1e-9)
        print(f"{name:32s} {tc:13.4f} {tp:11.4f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
