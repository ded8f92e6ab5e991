"""Wall time of the compiled kernels against the plain Python fallback.

Each path runs in a fresh interpreter so the environment switch takes
effect. Compilation is excluded by a warm-up call; numba's on-disk cache
makes later runs cheaper still.

    python3 benchmarks/bench_numba.py [--sizes 3,4,5] [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
from rgvroute._jit import backend_name
from rgvroute.milp.model import build_model
from rgvroute.milpsolver import solve_lp
from rgvroute.seqsolver import enumerate_feasible, solve_exact
from rgvroute.simulator import random_instance

sizes = [int(s) for s in sys.argv[1].split(",")]
repeat = int(sys.argv[2])
solve_exact(random_instance(0, n=2, m=5, Q=2))
solve_lp(build_model(random_instance(0, n=2, m=5, Q=2), floor=True))
rows = []
for n in sizes:
    insts = [random_instance(s, n=n, m=8, Q=2) for s in range(repeat)]
    models = [build_model(i, floor=True) for i in insts]
    for name, fn in (("seq", lambda k: solve_exact(insts[k])),
                     ("enumerate", lambda k: enumerate_feasible(insts[k], max_n=8)),
                     ("root_lp", lambda k: solve_lp(models[k]))):
        t0 = time.perf_counter()
        for k in range(repeat):
            fn(k)
        rows.append({"n": n, "kernel": name, "seconds": (time.perf_counter() - t0) / repeat})
print(json.dumps({"backend": backend_name(), "rows": rows}))
"""


def run(disable: bool, sizes: str, repeat: int) -> dict:
    env = dict(os.environ, RGVROUTE_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", CHILD, sizes, str(repeat)], env=env, capture_output=True,
                         text=True, check=True)
    return json.loads(out.stdout)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="3,4")
    ap.add_argument("--repeat", type=int, default=2)
    args = ap.parse_args()
    fast = run(False, args.sizes, args.repeat)
    slow = run(True, args.sizes, args.repeat)
    print(f"{'n':>3} {'kernel':<10} {fast['backend']:>10} {slow['backend']:>10} {'speedup':>8}")
    for a, b in zip(fast["rows"], slow["rows"]):
        print(f"{a['n']:>3} {a['kernel']:<10} {a['seconds']:>10.4f} {b['seconds']:>10.4f} "
              f"{b['seconds'] / max(a['seconds'], 1e-12):>8.1f}")


if __name__ == "__main__":
    main()
