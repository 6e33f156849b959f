"""Numba vs numpy timing for the MSR round, plus one end-to-end trial each way.

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --sizes 100 250 --repeat 200 --skip-trial

The trial comparison starts a fresh interpreter with SIRMSR_DISABLE_NUMBA=1,
since the backend is picked at import time.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from sirmsr import _kernels
from sirmsr.network import generate_rgg

TRIAL_SNIPPET = """
import time
from sirmsr import _kernels
from sirmsr.epidemic import SirParams
from sirmsr.harness import TrialConfig, run_trial
from sirmsr.policy import PolicyConfig
cfg = TrialConfig(n={n}, side=100.0, radius=90.0, params=SirParams(0.25, 0.1, 0.01),
                  policy=PolicyConfig("static_global", pruning_rule="absolute", f0={f0}),
                  horizon={steps}, max_horizon={steps}, record=False)
run_trial(TrialConfig(n=8, radius=150.0, horizon=5, max_horizon=5))  # warm up the jit
t0 = time.perf_counter()
res = run_trial(cfg)
print(_kernels.backend(), res.steps, res.verdict.value, time.perf_counter() - t0)
"""


def _case(n, seed=0):
    rng = np.random.default_rng(seed)
    g = generate_rgg(n, 100.0, 90.0, seed=seed)
    x = rng.random(n)
    role = rng.choice([_kernels.ROLE_REGULAR, _kernels.ROLE_CURED, _kernels.ROLE_INFECTIOUS], n, p=[0.85, 0.05, 0.1])
    role = role.astype(np.int8)
    x[role == _kernels.ROLE_INFECTIOUS] = -1.0
    deg = np.asarray(g.degrees, dtype=np.int64)
    f = np.minimum(np.full(n, n // 12, dtype=np.int64), (deg - 1) // 2)
    return x, g.adj, deg, role, f


def bench_round(sizes, repeat):
    print(f"{'n':>6} {'numba us':>10} {'numpy us':>10} {'speedup':>8}  identical")
    for n in sizes:
        x, adj, deg, role, f = _case(n)
        a, b = np.zeros(n), np.zeros(n)
        ra = _kernels.msr_round_numba(x, adj, deg, role, f, a)  # compile outside the timer
        rb = _kernels.msr_round_numpy(x, adj, deg, role, f, b)
        same = ra == rb and a.tobytes() == b.tobytes()
        t_jit = min(timeit.repeat(lambda: _kernels.msr_round_numba(x, adj, deg, role, f, a), number=repeat, repeat=3))
        t_np = min(timeit.repeat(lambda: _kernels.msr_round_numpy(x, adj, deg, role, f, b), number=repeat, repeat=3))
        us_jit, us_np = 1e6 * t_jit / repeat, 1e6 * t_np / repeat
        print(f"{n:>6} {us_jit:>10.1f} {us_np:>10.1f} {us_np / us_jit:>8.1f}  {same}")


def bench_trial(n, steps):
    code = TRIAL_SNIPPET.format(n=n, f0=max(1, n // 12), steps=steps)
    print(f"\nend-to-end trial, n={n}, {steps} steps")
    for disable in ("0", "1"):
        env = dict(os.environ, SIRMSR_DISABLE_NUMBA=disable)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        backend, k, verdict, secs = out.stdout.split()
        print(f"  {backend:<6} {float(secs):8.2f} s  steps={k} verdict={verdict}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 250, 500])
    ap.add_argument("--repeat", type=int, default=100)
    ap.add_argument("--trial-n", type=int, default=250)
    ap.add_argument("--trial-steps", type=int, default=2000)
    ap.add_argument("--skip-trial", action="store_true")
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        sys.exit("numba is not installed; nothing to compare")
    bench_round(args.sizes, args.repeat)
    if not args.skip_trial:
        bench_trial(args.trial_n, args.trial_steps)


if __name__ == "__main__":
    main()
