"""Time the hot kernels compiled (numba) and interpreted (pure Python).

Each backend runs in its own interpreter because the switch is read at
import time:

    python3 benchmarks/bench_kernels.py            # both backends
    python3 benchmarks/bench_kernels.py --worker   # one run, current env
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def workload(n_fields=2000, sweep_step=0.005):
    from lfvm import _jit
    from lfvm import _kernels as K
    from lfvm.calibrated import calibrated_device
    from lfvm.device import triangle_sweep

    dev = calibrated_device().vector()
    wave = triangle_sweep(-2.0, 4.0, sweep_step)
    out = np.empty((wave.size, 8))
    roots = np.empty(5)
    fields = np.linspace(-0.5, 0.5, n_fields)

    # warm-up (includes JIT compile or cache load)
    t = time.perf_counter()
    K.solve_roots(1.0, -1.8, 1.0, 0.25, roots)
    K.sweep(dev, wave[:4], 0.0, 0.0, 0.1, 1e-3, out)
    warm = time.perf_counter() - t

    t = time.perf_counter()
    for e in fields:
        K.solve_roots(1.0, -1.8, 1.0, e, roots)
    t_roots = time.perf_counter() - t

    t = time.perf_counter()
    K.sweep(dev, wave, 0.0, 0.0, 0.1, 1e-3, out)
    t_sweep = time.perf_counter() - t
    return {"backend": _jit.backend(), "warmup_s": warm, "roots_s": t_roots, "n_fields": n_fields,
            "sweep_s": t_sweep, "sweep_samples": int(wave.size), "checksum": float(np.nansum(out[:, 3]))}


def run_backend(disable):
    env = dict(os.environ, LFVM_DISABLE_NUMBA="1" if disable else "0")
    res = subprocess.run([sys.executable, __file__, "--worker"], env=env, capture_output=True, text=True,
                         check=True)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--worker", action="store_true")
    args = ap.parse_args()
    if args.worker:
        print(json.dumps(workload()))
        return
    fast = run_backend(False)
    slow = run_backend(True)
    print(f"{'kernel':<22}{'numba [s]':>12}{'python [s]':>12}{'speedup':>10}")
    for key, label in (("roots_s", f"solve_roots x{fast['n_fields']}"),
                       ("sweep_s", f"sweep {fast['sweep_samples']} pts")):
        print(f"{label:<22}{fast[key]:>12.4f}{slow[key]:>12.4f}{slow[key] / fast[key]:>9.1f}x")
    print(f"numba warm-up {fast['warmup_s']:.2f} s; checksums agree: "
          f"{abs(fast['checksum'] - slow['checksum']) <= 1e-9 * abs(slow['checksum'])}")


if __name__ == "__main__":
    main()
