"""Time the engine kernels compiled with numba against the pure-Python fallback.

Each backend runs in its own interpreter so ``HGUM_DISABLE_NUMBA`` takes
effect at import.  The workload is one loopback (four engine stages) over a
List<Bytes(16)> message and over a nested random message.

    python3 benchmarks/bench_kernels.py --n 2000 --repeat 3
"""
import argparse
import json
import os
import subprocess
import sys
import time


def worker(n, repeat):
    sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "tests"))
    from gen import random_case
    from hgum._jit import JIT_ENABLED
    from hgum.sim import roms_for, run_loopback, sweep
    from hgum.wire import WireConfig

    sdef, _, client, value = random_case(7, budget=n)
    roms = roms_for(sdef, client)
    cfg = WireConfig(max_frame_payload_phits=8)
    # first call pays compilation or cache load
    sweep("list", [1])
    run_loopback(value, sdef, client, cfg, roms=roms)

    def best(fn):
        times = []
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            times.append(time.perf_counter() - t0)
        return min(times)

    out = {
        "jit": JIT_ENABLED,
        "list_sweep_s": best(lambda: sweep("list", [n])),
        "random_loopback_s": best(lambda: run_loopback(value, sdef, client, cfg, roms=roms)),
    }
    print(json.dumps(out))


def run_backend(disable, n, repeat):
    env = dict(os.environ, HGUM_DISABLE_NUMBA="1" if disable else "0")
    cmd = [sys.executable, __file__, "--worker", "--n", str(n), "--repeat", str(repeat)]
    res = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000, help="list length / random message budget")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)
    if args.worker:
        worker(args.n, args.repeat)
        return 0
    jit = run_backend(False, args.n, args.repeat)
    py = run_backend(True, args.n, args.repeat)
    if not jit["jit"]:
        print("warning: numba is unavailable, both runs used the fallback")
    print(f"{'workload':<20}{'numba (s)':>12}{'python (s)':>12}{'speedup':>10}")
    for key in ("list_sweep_s", "random_loopback_s"):
        print(f"{key[:-2]:<20}{jit[key]:>12.5f}{py[key]:>12.5f}{py[key] / jit[key]:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
