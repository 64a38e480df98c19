"""Time the numba kernels against the pure-numpy fallback.

Each backend runs in its own subprocess (the backend is fixed at import by
``SPHMEAN_NUMBA``). Workloads are the hot loops of the n = 2 ellipse
reconstruction: spherical means, variant (b) back-projection, the vector
field of variant (a), and even-n wave synthesis.

    python3 benchmarks/bench_backends.py [--scale 0.5] [--repeat 3] [--json out.json]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, sys, time
import numpy as np
from scipy import special
from sphmean import _accel, BACKEND
from sphmean.forward import Bump, Phantom, forward_data
from sphmean.geometry import Ellipsoid
from sphmean.inversion import _pv_table, filter_data, make_grid

scale, repeat = float(sys.argv[1]), int(sys.argv[2])
nb, nr, ng = int(512 * scale), int(2048 * scale), int(64 * scale)
dom = Ellipsoid([1.0, 0.7])
ph = Phantom([Bump((0.3, 0.1), 0.25, 6), Bump((-0.35, -0.15), 0.2, 6, 0.6)])
data = forward_data(ph, dom, nb, nr)
table = _pv_table(filter_data(data, 2, "b"), dom.diameter)
pts = make_grid(dom, ng).interior_points()
b = data.boundary
c, rho, k, amp = ph.arrays()
gx, gw = special.roots_legendre(40)
hp = np.gradient(data.radii * data.values, data.step, axis=1)
times = 2 * data.step * np.arange(nr)
lo, hi = np.zeros(nb), np.full(nb, data.radii[-1])
wx, ww = special.roots_legendre(64)

work = {
    "spherical_means": lambda: _accel.spherical_means(b.points, data.radii, c, rho, k, amp, 1 / np.pi, gx, gw, 0),
    "backproject": lambda: _accel.backproject(pts, b.points, b.normals, b.weights, table, 0.0, data.step, 1),
    "backproject_vector": lambda: _accel.backproject_vector(pts, b.points, b.normals, b.weights, table, 0.0, data.step),
    "even_wave_synthesis": lambda: _accel.even_wave_synthesis(hp, data.step, times, lo, hi, wx, ww),
}
out = {"backend": BACKEND, "sizes": [nb, nr, ng], "timings": {}, "checksums": {}}
for name, fn in work.items():
    t0 = time.perf_counter(); res = fn(); first = time.perf_counter() - t0
    best = first
    for _ in range(repeat):
        t0 = time.perf_counter(); res = fn(); best = min(best, time.perf_counter() - t0)
    out["timings"][name] = {"first": first, "best": best}
    out["checksums"][name] = [float(np.sum(res)), float(np.max(np.abs(res)))]
print(json.dumps(out))
"""


def run_backend(flag: str, scale: float, repeat: int) -> dict:
    env = dict(os.environ, SPHMEAN_NUMBA=flag)
    proc = subprocess.run([sys.executable, "-c", WORKER, str(scale), str(repeat)],
                          env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scale", type=float, default=0.5, help="fraction of the (512, 2048, 64) workload")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="write raw results here")
    args = ap.parse_args(argv)

    results = {flag: run_backend(flag, args.scale, args.repeat) for flag in ("1", "0")}
    fast, slow = results["1"], results["0"]
    print(f"sizes (boundary, radii, grid) = {fast['sizes']}")
    print(f"{'kernel':<22}{'numba first':>13}{'numba best':>12}{'numpy best':>12}{'speedup':>9}  agree")
    ok = True
    for name, t in fast["timings"].items():
        s = slow["timings"][name]["best"]
        a, b = fast["checksums"][name], slow["checksums"][name]
        agree = all(abs(x - y) <= 1e-9 * max(1.0, abs(y)) for x, y in zip(a, b))
        ok &= agree
        print(f"{name:<22}{t['first']:>12.3f}s{t['best']:>11.3f}s{s:>11.3f}s{s / t['best']:>8.1f}x  {agree}")
    if fast["backend"] != "numba":
        print("numba unavailable: both runs used the numpy backend")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(results, fh, indent=2, sort_keys=True)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
