"""Time the hot kernels with numba on and off.

    python benchmarks/bench_kernels.py [--repeat 3]

The backend is fixed at import, so each path runs in its own interpreter
with ``MULTIBUBBLE_DISABLE_NUMBA`` set accordingly.  Compile time is
excluded: every case runs once before it is timed.
"""

import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
import numpy as np
from multibubble import _accel
from multibubble.profiles import solve_W
from multibubble.pde.shooting import shoot_radial
from multibubble.pde.peaks import select_peaks

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
pts = rng.uniform(-1, 1, size=(2000, 2))
vals = rng.uniform(1, 50, size=2000)
cases = {
    "solve_W N=5 R=1e4": lambda: solve_W(5, 1e4),
    "shoot_radial N=5 eps=1e-3": lambda: shoot_radial(5, -1.0, 1e-3),
    "shoot_radial N=5 eps=1e-6": lambda: shoot_radial(5, -1.0, 1e-6),
    "select_peaks 2000 points": lambda: select_peaks(pts, vals, np.ones(2000), 5),
}
out = {"backend": _accel.backend_name(), "seconds": {}}
for name, fn in cases.items():
    fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    out["seconds"][name] = best
print(json.dumps(out))
"""


def run_backend(disable, repeat):
    env = dict(os.environ)
    env["MULTIBUBBLE_DISABLE_NUMBA"] = "1" if disable else "0"
    proc = subprocess.run([sys.executable, "-c", CHILD, str(repeat)], env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    fast = run_backend(False, args.repeat)
    slow = run_backend(True, args.repeat)
    print(f"{'case':32s} {fast['backend']:>12s} {slow['backend']:>12s} {'speedup':>9s}")
    for name, t_fast in fast["seconds"].items():
        t_slow = slow["seconds"][name]
        print(f"{name:32s} {t_fast:11.4f}s {t_slow:11.4f}s {t_slow / t_fast:8.1f}x")


if __name__ == "__main__":
    main()
