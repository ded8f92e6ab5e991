"""Run in a child process; prints kernel results as JSON for the current backend."""
import json
import sys

from rgvroute._jit import backend_name
from rgvroute.milp.model import build_model
from rgvroute.milpsolver import solve_lp, solve_milp
from rgvroute.seqsolver import enumerate_feasible, solve_exact
from rgvroute.simulator import random_instance

out = {"backend": backend_name(), "seq": [], "routes": [], "lp": [], "milp": []}
n = int(sys.argv[1]) if len(sys.argv) > 1 else 3
for seed in range(4):
    inst = random_instance(seed, n=n, m=6, Q=2)
    res = solve_exact(inst)
    out["seq"].append([list(res.route), res.energy])
    out["routes"].append(len(enumerate_feasible(inst)))
    model = build_model(inst, cuts="g23", floor=True)
    out["lp"].append(solve_lp(model).objective)
    out["milp"].append(solve_milp(model).objective)
print(json.dumps(out))
